"""Training-time color conditions and guidance arithmetic.

A condition record is what the generative model sees for one training
image: a color histogram (the image's own, or a palette rendered into
histogram form, or all zeros when color conditioning is dropped), the
record's entropy, and a palette fit distance. Dropout over condition
type, caption presence, and the entropy channel is sampled from a fixed
table so runs are reproducible seed for seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .colorspace import DistanceParams
from .histogram import HsvHistogram, entropy_bits, phst_bytes, phst_from_bytes
from .palette import Palette, palette_to_histogram
from .transport import palette_image_distance

_PCND_MAGIC = b"PCND"
_PCND_VERSION = 1
_PCND_HEADER = struct.Struct("<4sHBBff")


class AugmentationType(IntEnum):
    HISTOGRAM = 0
    PALETTE = 1
    NONE = 2


@dataclass(frozen=True)
class DropoutTable:
    """Sampling probabilities for condition augmentation.

    Color condition type is drawn first; caption keep probability then
    depends on the drawn type. The entropy channel is zeroed independently
    with `entropy_drop_prob`.
    """

    histogram_prob: float = 0.45
    palette_prob: float = 0.45
    none_prob: float = 0.10
    text_keep_histogram: float = 0.80
    text_keep_palette: float = 0.80
    text_keep_none: float = 0.05
    entropy_drop_prob: float = 0.10

    def __post_init__(self) -> None:
        probs = (self.histogram_prob, self.palette_prob, self.none_prob)
        keeps = (self.text_keep_histogram, self.text_keep_palette, self.text_keep_none)
        if any(not 0.0 <= x <= 1.0 for x in probs + keeps + (self.entropy_drop_prob,)):
            raise ValueError("dropout probabilities must be in [0, 1]")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("condition type probabilities must sum to 1")

    def text_keep(self, aug: AugmentationType) -> float:
        return {
            AugmentationType.HISTOGRAM: self.text_keep_histogram,
            AugmentationType.PALETTE: self.text_keep_palette,
            AugmentationType.NONE: self.text_keep_none,
        }[aug]


@dataclass(frozen=True)
class ConditionRecord:
    """One training condition: histogram, its entropy, and palette fit."""

    aug_type: AugmentationType
    text_present: bool
    distance: float
    entropy: float
    histogram: HsvHistogram

    def __post_init__(self) -> None:
        if self.distance < 0.0 or not np.isfinite(self.distance):
            raise ValueError("distance must be finite and nonnegative")
        if self.entropy < 0.0 or not np.isfinite(self.entropy):
            raise ValueError("entropy must be finite and nonnegative")


def sample_augmentation(
    rng: np.random.Generator, table: DropoutTable = DropoutTable()
) -> tuple[AugmentationType, bool, bool]:
    """Draw (condition type, keep caption, drop entropy) from the table.

    Exactly three uniform variates are consumed per call, in that order,
    so sampled streams are stable across versions.
    """
    u = rng.random()
    if u < table.histogram_prob:
        aug = AugmentationType.HISTOGRAM
    elif u < table.histogram_prob + table.palette_prob:
        aug = AugmentationType.PALETTE
    else:
        aug = AugmentationType.NONE
    text_present = rng.random() < table.text_keep(aug)
    drop_entropy = rng.random() < table.entropy_drop_prob
    return aug, text_present, drop_entropy


def build_condition(
    image_hist: HsvHistogram,
    aug: AugmentationType,
    text_present: bool,
    palette: Optional[Palette] = None,
    drop_entropy: bool = False,
    params: DistanceParams = DistanceParams(),
    m: float = 0.5,
) -> ConditionRecord:
    """Assemble the condition record for one image.

    Histogram conditioning embeds the image's own histogram; palette
    conditioning embeds the palette rendered to a histogram plus its fit
    distance to the image; dropped color conditioning embeds zeros. The
    fit distance is nonzero only for palette conditions.
    """
    if aug == AugmentationType.HISTOGRAM:
        if not image_hist.is_normalized:
            raise ValueError("histogram conditioning requires a normalized histogram")
        embedded = image_hist
        distance = 0.0
    elif aug == AugmentationType.PALETTE:
        if palette is None:
            raise ValueError("palette conditioning requires a palette")
        embedded = palette_to_histogram(palette, image_hist.dims)
        distance = palette_image_distance(palette, image_hist, params, m)
    else:
        embedded = HsvHistogram(
            np.zeros(image_hist.dims[0] * image_hist.dims[1] * image_hist.dims[2]),
            image_hist.dims,
        )
        distance = 0.0
    entropy = 0.0
    if not drop_entropy and embedded.is_normalized:
        entropy = entropy_bits(embedded)
    return ConditionRecord(aug, text_present, distance, entropy, embedded)


# ---------------------------------------------------------------------------
# Guidance


def cfg_combine(eps_pos: np.ndarray, eps_neg: np.ndarray, scale: float) -> np.ndarray:
    """Blend conditional and unconditional predictions:
    scale * eps_pos + (1 - scale) * eps_neg."""
    eps_pos = np.asarray(eps_pos, dtype=np.float64)
    eps_neg = np.asarray(eps_neg, dtype=np.float64)
    if eps_pos.shape != eps_neg.shape:
        raise ValueError("guidance terms must have the same shape")
    return scale * eps_pos + (1.0 - scale) * eps_neg


def relative_entropy(entropy_pos: float, entropy_neg: float) -> float:
    """Entropy headroom of the positive condition over the negative one."""
    return entropy_pos - entropy_neg


# ---------------------------------------------------------------------------
# Serialization


def serialize_condition(rec: ConditionRecord) -> bytes:
    header = _PCND_HEADER.pack(
        _PCND_MAGIC,
        _PCND_VERSION,
        int(rec.aug_type),
        1 if rec.text_present else 0,
        rec.distance,
        rec.entropy,
    )
    return header + phst_bytes(rec.histogram)


def deserialize_condition(data: bytes) -> ConditionRecord:
    if len(data) < _PCND_HEADER.size:
        raise ValueError("truncated condition record")
    magic, version, aug_raw, text_raw, distance, entropy = _PCND_HEADER.unpack_from(data, 0)
    if magic != _PCND_MAGIC:
        raise ValueError("bad magic: not a condition record")
    if version != _PCND_VERSION:
        raise ValueError(f"unsupported condition record version {version}")
    try:
        aug = AugmentationType(aug_raw)
    except ValueError:
        raise ValueError(f"unknown augmentation type {aug_raw}") from None
    if text_raw not in (0, 1):
        raise ValueError(f"bad text flag {text_raw}")
    hist, consumed = phst_from_bytes(data, _PCND_HEADER.size)
    if _PCND_HEADER.size + consumed != len(data):
        raise ValueError("trailing bytes after condition record")
    return ConditionRecord(aug, bool(text_raw), float(distance), float(entropy), hist)


def write_pcnd(rec: ConditionRecord, dest: Union[str, Path]) -> None:
    Path(dest).write_bytes(serialize_condition(rec))


def read_pcnd(src: Union[str, Path]) -> ConditionRecord:
    return deserialize_condition(Path(src).read_bytes())
