"""Color representations and perceptual distance.

Conversions run on float64 numpy arrays of shape (..., 3); the dataclass
wrappers are thin conveniences for single colors. All RGB values are sRGB
in [0, 1], hue is degrees in [0, 360), Lab is CIE L*a*b* under D65.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# sRGB -> XYZ (D65) linear transform, IEC 61966-2-1 primaries.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# Reference white taken as the image of (1, 1, 1) under the matrix above,
# so that pure white maps to exactly L=100, a=0, b=0.
_WHITE = _RGB_TO_XYZ.sum(axis=1)

_LAB_DELTA = 6.0 / 29.0


@dataclass(frozen=True)
class ColorRgb:
    """sRGB color, components in [0, 1]."""

    r: float
    g: float
    b: float

    @classmethod
    def from_8bit(cls, r: int, g: int, b: int) -> "ColorRgb":
        return cls(r / 255.0, g / 255.0, b / 255.0)

    @classmethod
    def from_hex(cls, text: str) -> "ColorRgb":
        """Parse a '#RRGGBB' string, case-insensitive."""
        s = text.strip()
        if len(s) != 7 or s[0] != "#":
            raise ValueError(f"expected '#RRGGBB' hex color, got {text!r}")
        try:
            r = int(s[1:3], 16)
            g = int(s[3:5], 16)
            b = int(s[5:7], 16)
        except ValueError:
            raise ValueError(f"expected '#RRGGBB' hex color, got {text!r}") from None
        return cls.from_8bit(r, g, b)

    def to_hex(self) -> str:
        """Format as '#RRGGBB', uppercase."""
        c = np.clip(np.round(np.array([self.r, self.g, self.b]) * 255.0), 0, 255)
        return "#{:02X}{:02X}{:02X}".format(*c.astype(int))

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b])


@dataclass(frozen=True)
class ColorHsv:
    """Hue in degrees [0, 360), saturation and value in [0, 1]."""

    h: float
    s: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.s, self.v])


@dataclass(frozen=True)
class ColorLab:
    """CIE L*a*b*, D65 white."""

    L: float
    a: float
    b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.L, self.a, self.b])


@dataclass(frozen=True)
class DistanceParams:
    """Parameters of the saturating ground distance.

    Raw CIEDE2000 is clipped at `threshold`, rescaled to [0, 1], then raised
    to `sharpen_exponent`. Values beyond the threshold are all treated as
    "fully different", which keeps transport costs bounded and makes far
    color moves no worse than moderately far ones.
    """

    threshold: float = 20.0
    sharpen_exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.sharpen_exponent <= 0:
            raise ValueError("sharpen_exponent must be positive")


# ---------------------------------------------------------------------------
# RGB <-> HSV


def rgb_to_hsv_array(rgb: np.ndarray) -> np.ndarray:
    """Convert (..., 3) sRGB to (..., 3) HSV with hue in degrees."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    diff = maxc - minc

    safe_diff = np.where(diff == 0.0, 1.0, diff)
    h = np.where(
        maxc == r,
        (g - b) / safe_diff % 6.0,
        np.where(maxc == g, (b - r) / safe_diff + 2.0, (r - g) / safe_diff + 4.0),
    )
    h = np.where(diff == 0.0, 0.0, h * 60.0) % 360.0
    h = np.where(h >= 360.0, 0.0, h)

    s = np.where(maxc == 0.0, 0.0, diff / np.where(maxc == 0.0, 1.0, maxc))
    return np.stack([h, s, maxc], axis=-1)


def hsv_to_rgb_array(hsv: np.ndarray) -> np.ndarray:
    """Convert (..., 3) HSV (hue in degrees) to (..., 3) sRGB."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0] / 60.0, hsv[..., 1], hsv[..., 2]
    i = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def rgb_to_hsv(c: ColorRgb) -> ColorHsv:
    h, s, v = rgb_to_hsv_array(c.as_array())
    return ColorHsv(float(h), float(s), float(v))


def hsv_to_rgb(c: ColorHsv) -> ColorRgb:
    r, g, b = hsv_to_rgb_array(c.as_array())
    return ColorRgb(float(r), float(g), float(b))


# ---------------------------------------------------------------------------
# RGB -> Lab


def rgb_to_lab_array(rgb: np.ndarray) -> np.ndarray:
    """Convert (..., 3) sRGB to (..., 3) CIE L*a*b*."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lin = np.where(
        rgb <= 0.04045,
        rgb / 12.92,
        ((np.maximum(rgb, 0.04045) + 0.055) / 1.055) ** 2.4,
    )
    xyz = lin @ _RGB_TO_XYZ.T
    ratio = xyz / _WHITE
    f = np.where(
        ratio > _LAB_DELTA**3,
        np.cbrt(ratio),
        ratio / (3.0 * _LAB_DELTA**2) + 4.0 / 29.0,
    )
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def rgb_to_lab(c: ColorRgb) -> ColorLab:
    L, a, b = rgb_to_lab_array(c.as_array())
    return ColorLab(float(L), float(a), float(b))


# ---------------------------------------------------------------------------
# CIEDE2000


def ciede2000_array(lab1: np.ndarray, lab2: np.ndarray) -> np.ndarray:
    """CIEDE2000 color difference, vectorized with broadcasting.

    Follows the Sharma/Wu/Dalal implementation notes with unit parametric
    factors (kL = kC = kH = 1). Hue arithmetic is done in degrees.
    """
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    L2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    C1 = np.hypot(a1, b1)
    C2 = np.hypot(a2, b2)
    Cbar = 0.5 * (C1 + C2)
    c7 = Cbar**7
    G = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0**7)))

    a1p = (1.0 + G) * a1
    a2p = (1.0 + G) * a2
    C1p = np.hypot(a1p, b1)
    C2p = np.hypot(a2p, b2)

    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    h1p = np.where((b1 == 0.0) & (a1p == 0.0), 0.0, h1p)
    h2p = np.where((b2 == 0.0) & (a2p == 0.0), 0.0, h2p)

    dLp = L2 - L1
    dCp = C2p - C1p

    hdiff = h2p - h1p
    dhp = np.where(hdiff > 180.0, hdiff - 360.0, np.where(hdiff < -180.0, hdiff + 360.0, hdiff))
    dhp = np.where(C1p * C2p == 0.0, 0.0, dhp)
    dHp = 2.0 * np.sqrt(C1p * C2p) * np.sin(np.radians(dhp) / 2.0)

    Lbar = 0.5 * (L1 + L2)
    Cbarp = 0.5 * (C1p + C2p)

    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbar = np.where(
        habs <= 180.0,
        0.5 * hsum,
        np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)),
    )
    hbar = np.where(C1p * C2p == 0.0, hsum, hbar)

    T = (
        1.0
        - 0.17 * np.cos(np.radians(hbar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * hbar))
        + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0))
    )

    dtheta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cp7 = Cbarp**7
    RC = 2.0 * np.sqrt(cp7 / (cp7 + 25.0**7))
    RT = -np.sin(np.radians(2.0 * dtheta)) * RC

    Lm50 = (Lbar - 50.0) ** 2
    SL = 1.0 + 0.015 * Lm50 / np.sqrt(20.0 + Lm50)
    SC = 1.0 + 0.045 * Cbarp
    SH = 1.0 + 0.015 * Cbarp * T

    tL = dLp / SL
    tC = dCp / SC
    tH = dHp / SH
    return np.sqrt(np.maximum(tL**2 + tC**2 + tH**2 + RT * tC * tH, 0.0))


def ciede2000(c1: ColorLab, c2: ColorLab) -> float:
    return float(ciede2000_array(c1.as_array(), c2.as_array()))


def lab_distance_matrix(labs1: np.ndarray, labs2: np.ndarray, block: int = 256) -> np.ndarray:
    """Pairwise CIEDE2000 between two (N, 3) Lab arrays, computed blockwise
    to bound peak memory."""
    labs1 = np.asarray(labs1, dtype=np.float64)
    labs2 = np.asarray(labs2, dtype=np.float64)
    out = np.empty((labs1.shape[0], labs2.shape[0]))
    for start in range(0, labs1.shape[0], block):
        stop = min(start + block, labs1.shape[0])
        out[start:stop] = ciede2000_array(labs1[start:stop, None, :], labs2[None, :, :])
    return out


# ---------------------------------------------------------------------------
# Thresholded ground distance


def thresholded_distance_array(
    de: np.ndarray, params: DistanceParams = DistanceParams()
) -> np.ndarray:
    """Map raw CIEDE2000 values to the saturating [0, 1] ground distance."""
    de = np.asarray(de, dtype=np.float64)
    scaled = np.minimum(de, params.threshold) / params.threshold
    if params.sharpen_exponent == 1.0:
        return scaled
    return scaled**params.sharpen_exponent


def thresholded_distance(
    c1: ColorLab, c2: ColorLab, params: DistanceParams = DistanceParams()
) -> float:
    return float(thresholded_distance_array(ciede2000(c1, c2), params))
