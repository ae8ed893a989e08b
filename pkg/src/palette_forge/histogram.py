"""HSV color histograms on a fixed 34x12x10 grid.

The grid is deliberately hue-heavy: 34 hue slices, 12 saturation rows,
10 value rows, 4080 bins total. Mass is stored flat in C order (hue
slowest, value fastest). A histogram over an image is the normalized
count of pixels per bin.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import BinaryIO, Mapping, Union

import numpy as np

from .colorspace import ColorHsv, ColorLab, hsv_to_rgb_array, rgb_to_hsv_array, rgb_to_lab_array

DIMS = (34, 12, 10)
N_BINS = DIMS[0] * DIMS[1] * DIMS[2]

_PHST_MAGIC = b"PHST"
_PHST_VERSION = 1
_PHST_HEADER = struct.Struct("<4sHHHH")

# Total mass within this tolerance of 1 counts as normalized.
_NORM_TOL = 1e-9
# float32 round-trips shrink the total by up to ~1e-7; anything this close
# to 1 after deserialization is treated as a rounded normalized histogram.
_RENORM_TOL = 1e-4

Dims = tuple[int, int, int]


@dataclass(frozen=True)
class BinIndex:
    """Position on the HSV grid."""

    h_bin: int
    s_bin: int
    v_bin: int

    def flat(self, dims: Dims = DIMS) -> int:
        return (self.h_bin * dims[1] + self.s_bin) * dims[2] + self.v_bin

    @classmethod
    def from_flat(cls, flat: int, dims: Dims = DIMS) -> "BinIndex":
        if not 0 <= flat < dims[0] * dims[1] * dims[2]:
            raise ValueError(f"flat index {flat} out of range for dims {dims}")
        h_bin, rest = divmod(flat, dims[1] * dims[2])
        s_bin, v_bin = divmod(rest, dims[2])
        return cls(h_bin, s_bin, v_bin)


@dataclass(frozen=True, eq=False)
class HsvHistogram:
    """Nonnegative mass per HSV bin, flat C order.

    `is_normalized` is derived at construction time: total mass within
    1e-9 of one. The mass array is copied and frozen so histograms can be
    shared across threads.
    """

    mass: np.ndarray
    dims: Dims = DIMS
    is_normalized: bool = field(init=False)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ValueError(f"bad histogram dims {self.dims}")
        n = dims[0] * dims[1] * dims[2]
        mass = np.array(self.mass, dtype=np.float64).reshape(-1)
        if mass.shape[0] != n:
            raise ValueError(f"mass has {mass.shape[0]} entries, dims {dims} need {n}")
        if not np.all(np.isfinite(mass)):
            raise ValueError("histogram mass must be finite")
        if np.any(mass < 0.0):
            raise ValueError("histogram mass must be nonnegative")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "is_normalized", abs(float(mass.sum()) - 1.0) <= _NORM_TOL)

    @property
    def n_bins(self) -> int:
        return self.mass.shape[0]

    def total(self) -> float:
        return float(self.mass.sum())

    def normalize(self) -> "HsvHistogram":
        total = self.total()
        if total <= 0.0:
            raise ValueError("cannot normalize a histogram with zero total mass")
        return HsvHistogram(self.mass / total, self.dims)

    def to_sparse(self) -> dict[int, float]:
        (nz,) = np.nonzero(self.mass)
        return {int(i): float(self.mass[i]) for i in nz}

    @classmethod
    def from_sparse(cls, bins: Mapping[int, float], dims: Dims = DIMS) -> "HsvHistogram":
        n = dims[0] * dims[1] * dims[2]
        mass = np.zeros(n)
        for raw_idx, value in bins.items():
            idx = int(raw_idx)
            if not 0 <= idx < n:
                raise ValueError(f"bin index {idx} out of range for dims {dims}")
            mass[idx] = value
        return cls(mass, dims)


# ---------------------------------------------------------------------------
# Binning


def bin_index_array(hsv: np.ndarray, dims: Dims = DIMS) -> np.ndarray:
    """Flat bin index for each (..., 3) HSV triple."""
    hsv = np.asarray(hsv, dtype=np.float64)
    hb = np.clip((hsv[..., 0] / 360.0 * dims[0]).astype(np.int64), 0, dims[0] - 1)
    sb = np.clip((hsv[..., 1] * dims[1]).astype(np.int64), 0, dims[1] - 1)
    vb = np.clip((hsv[..., 2] * dims[2]).astype(np.int64), 0, dims[2] - 1)
    return (hb * dims[1] + sb) * dims[2] + vb


def bin_of(hsv: ColorHsv, dims: Dims = DIMS) -> BinIndex:
    flat = int(bin_index_array(hsv.as_array(), dims))
    return BinIndex.from_flat(flat, dims)


def bin_center_hsv(b: Union[BinIndex, int], dims: Dims = DIMS) -> ColorHsv:
    if isinstance(b, (int, np.integer)):
        b = BinIndex.from_flat(int(b), dims)
    return ColorHsv(
        (b.h_bin + 0.5) * 360.0 / dims[0],
        (b.s_bin + 0.5) / dims[1],
        (b.v_bin + 0.5) / dims[2],
    )


def bin_center_lab(b: Union[BinIndex, int], dims: Dims = DIMS) -> ColorLab:
    center = bin_center_hsv(b, dims)
    L, a, lab_b = rgb_to_lab_array(hsv_to_rgb_array(center.as_array()))
    return ColorLab(float(L), float(a), float(lab_b))


@lru_cache(maxsize=8)
def bin_centers_lab(dims: Dims = DIMS) -> np.ndarray:
    """Lab coordinates of all bin centers, shape (n_bins, 3), read-only."""
    n = dims[0] * dims[1] * dims[2]
    idx = np.arange(n)
    h_bin, rest = np.divmod(idx, dims[1] * dims[2])
    s_bin, v_bin = np.divmod(rest, dims[2])
    hsv = np.stack(
        [
            (h_bin + 0.5) * 360.0 / dims[0],
            (s_bin + 0.5) / dims[1],
            (v_bin + 0.5) / dims[2],
        ],
        axis=-1,
    )
    labs = rgb_to_lab_array(hsv_to_rgb_array(hsv))
    labs.setflags(write=False)
    return labs


# ---------------------------------------------------------------------------
# Image histograms


def pixel_bin_counts(rgb: np.ndarray, dims: Dims = DIMS) -> np.ndarray:
    """Integer pixel count per bin. Counts from image slices can be summed
    exactly, so parallel reductions stay order-independent."""
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    flat = bin_index_array(rgb_to_hsv_array(rgb), dims)
    return np.bincount(flat, minlength=dims[0] * dims[1] * dims[2]).astype(np.int64)


def histogram_of_image(rgb: np.ndarray, dims: Dims = DIMS) -> HsvHistogram:
    """Normalized HSV histogram of an (N, 3) or (H, W, 3) sRGB pixel array."""
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    if rgb.shape[0] == 0:
        raise ValueError("cannot build a histogram from an empty pixel array")
    counts = pixel_bin_counts(rgb, dims)
    return HsvHistogram(counts / rgb.shape[0], dims)


def entropy_bits(hist: HsvHistogram) -> float:
    """Shannon entropy of the bin distribution, in bits."""
    if not hist.is_normalized:
        raise ValueError("entropy requires a normalized histogram")
    m = hist.mass[hist.mass > 0.0]
    # adding 0.0 turns the -0.0 of a one-bin histogram into a plain zero
    return float(-np.sum(m * np.log2(m))) + 0.0


# ---------------------------------------------------------------------------
# Binary serialization

PathOrIO = Union[str, Path, BinaryIO]


def phst_bytes(hist: HsvHistogram) -> bytes:
    header = _PHST_HEADER.pack(_PHST_MAGIC, _PHST_VERSION, *hist.dims)
    return header + hist.mass.astype("<f4").tobytes()


def phst_from_bytes(data: bytes, offset: int = 0) -> tuple[HsvHistogram, int]:
    """Decode one histogram block, returning it and the bytes consumed."""
    if len(data) - offset < _PHST_HEADER.size:
        raise ValueError("truncated histogram block")
    magic, version, dh, ds, dv = _PHST_HEADER.unpack_from(data, offset)
    if magic != _PHST_MAGIC:
        raise ValueError("bad magic: not a histogram block")
    if version != _PHST_VERSION:
        raise ValueError(f"unsupported histogram format version {version}")
    dims = (dh, ds, dv)
    n = dh * ds * dv
    if n == 0:
        raise ValueError(f"bad histogram dims {dims}")
    start = offset + _PHST_HEADER.size
    end = start + 4 * n
    if len(data) < end:
        raise ValueError("truncated histogram payload")
    mass = np.frombuffer(data, dtype="<f4", count=n, offset=start).astype(np.float64)
    if np.any(mass < 0.0):
        raise ValueError("histogram payload contains negative mass")
    total = mass.sum()
    if total > 0.0 and abs(total - 1.0) <= _RENORM_TOL:
        mass = mass / total
    return HsvHistogram(mass, dims), end - offset


def write_phst(hist: HsvHistogram, dest: PathOrIO) -> None:
    payload = phst_bytes(hist)
    if isinstance(dest, (str, Path)):
        Path(dest).write_bytes(payload)
    else:
        dest.write(payload)


def read_phst(src: PathOrIO) -> HsvHistogram:
    if isinstance(src, (str, Path)):
        data = Path(src).read_bytes()
    else:
        data = src.read()
    hist, consumed = phst_from_bytes(data)
    if consumed != len(data):
        raise ValueError("trailing bytes after histogram payload")
    return hist


# ---------------------------------------------------------------------------
# JSON serialization


def histogram_to_json_dict(hist: HsvHistogram) -> dict:
    return {
        "dims": list(hist.dims),
        "bins": {str(i): m for i, m in sorted(hist.to_sparse().items())},
    }


def histogram_from_json_dict(doc: Mapping) -> HsvHistogram:
    try:
        dims = tuple(int(d) for d in doc["dims"])
        bins = doc["bins"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad histogram document: {exc}") from None
    if len(dims) != 3:
        raise ValueError(f"bad histogram dims {dims}")
    return HsvHistogram.from_sparse({int(k): float(v) for k, v in bins.items()}, dims)


def save_histogram(hist: HsvHistogram, path: Union[str, Path]) -> None:
    """Write a histogram file; '.json' means sparse JSON, anything else the
    binary format."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(histogram_to_json_dict(hist)) + "\n")
    else:
        write_phst(hist, path)


def load_histogram(path: Union[str, Path]) -> HsvHistogram:
    """Read a histogram file, sniffing binary magic versus JSON."""
    data = Path(path).read_bytes()
    if data[:4] == _PHST_MAGIC:
        hist, consumed = phst_from_bytes(data)
        if consumed != len(data):
            raise ValueError("trailing bytes after histogram payload")
        return hist
    return histogram_from_json_dict(json.loads(data.decode("utf-8")))
