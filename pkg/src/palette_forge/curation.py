"""Corpus color statistics and rare-color curation.

Web-scale image corpora are heavily skewed toward a small set of common
colors, which starves a color-conditioned model of training signal for
the rest. This module measures that skew on a coarse 8x8x8 RGB grid and
selects the images that carry meaningful mass in the rare bins, so they
can be oversampled.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .images import load_image_rgb

RGB_GRID = 8
N_RGB_BINS = RGB_GRID**3


@dataclass(frozen=True)
class CorpusStats:
    """Mean per-image color mass on the coarse RGB grid.

    `bins` sums to one for a nonempty corpus: every image contributes its
    own normalized distribution, so large images do not dominate.
    """

    image_count: int
    bins: np.ndarray

    def __post_init__(self) -> None:
        bins = np.array(self.bins, dtype=np.float64).reshape(-1)
        if bins.shape[0] != N_RGB_BINS:
            raise ValueError(f"expected {N_RGB_BINS} bins, got {bins.shape[0]}")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    def to_json_dict(self) -> dict:
        return {"image_count": self.image_count, "bins": self.bins.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CorpusStats":
        return cls(int(doc["image_count"]), np.asarray(doc["bins"], dtype=np.float64))


@dataclass(frozen=True)
class RareBinSet:
    """The corpus's least-populated RGB bins."""

    indices: tuple[int, ...]

    def mask(self) -> np.ndarray:
        m = np.zeros(N_RGB_BINS, dtype=bool)
        m[list(self.indices)] = True
        return m


@dataclass(frozen=True)
class CurationSelection:
    """Images whose rare-bin pixel fraction clears the threshold."""

    selected: tuple[str, ...]
    fractions: tuple[float, ...]
    skipped: tuple[str, ...]


def rgb_bin_index(rgb: np.ndarray) -> np.ndarray:
    """Coarse RGB grid index for each (..., 3) pixel."""
    rgb = np.asarray(rgb, dtype=np.float64)
    q = np.clip((rgb * RGB_GRID).astype(np.int64), 0, RGB_GRID - 1)
    return (q[..., 0] * RGB_GRID + q[..., 1]) * RGB_GRID + q[..., 2]


def image_rgb_mass(rgb: np.ndarray) -> np.ndarray:
    """Normalized per-bin pixel mass of one image."""
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    if rgb.shape[0] == 0:
        raise ValueError("empty pixel array")
    counts = np.bincount(rgb_bin_index(rgb), minlength=N_RGB_BINS)
    return counts / rgb.shape[0]


def _map_images(paths, fn, threads):
    """Apply fn to each decoded image, preserving input order.

    Results are reduced in input order afterwards, so the outcome does not
    depend on the thread count. Undecodable files yield None.
    """

    def task(path):
        try:
            return fn(load_image_rgb(path))
        except (OSError, ValueError):
            return None

    if threads <= 1:
        return [task(p) for p in paths]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, paths))


def scan_corpus(
    paths: Sequence[Union[str, Path]], threads: int = 1
) -> tuple[CorpusStats, list[str]]:
    """Average the per-image color mass over a corpus.

    Returns the stats and the list of files that failed to decode. The
    running sum is compensated, and accumulation follows input order, so
    any thread count produces identical bits.
    """
    paths = [str(p) for p in paths]
    masses = _map_images(paths, image_rgb_mass, threads)
    total = np.zeros(N_RGB_BINS)
    carry = np.zeros(N_RGB_BINS)
    count = 0
    skipped = []
    for path, mass in zip(paths, masses):
        if mass is None:
            skipped.append(path)
            continue
        count += 1
        y = mass - carry
        t = total + y
        carry = (t - total) - y
        total = t
    bins = total / count if count else total
    return CorpusStats(count, bins), skipped


def rank_bins(stats: CorpusStats) -> np.ndarray:
    """Bin indices from most to least populated, ties by lower index."""
    return np.argsort(-stats.bins, kind="stable")


def rare_bins(stats: CorpusStats, count: int = 100) -> RareBinSet:
    """The `count` least-populated bins, ties by lower index."""
    if not 0 < count <= N_RGB_BINS:
        raise ValueError(f"count must be in [1, {N_RGB_BINS}]")
    order = np.argsort(stats.bins, kind="stable")
    return RareBinSet(tuple(int(i) for i in order[:count]))


def rare_fraction(rgb: np.ndarray, rare: RareBinSet) -> float:
    """Fraction of an image's pixels that land in rare bins."""
    return float(image_rgb_mass(rgb)[rare.mask()].sum())


def select_rare_images(
    paths: Sequence[Union[str, Path]],
    rare: RareBinSet,
    min_fraction: float = 0.05,
    threads: int = 1,
) -> CurationSelection:
    """Keep images whose rare-bin pixel fraction is at least `min_fraction`."""
    if not 0.0 <= min_fraction <= 1.0:
        raise ValueError("min_fraction must be in [0, 1]")
    paths = [str(p) for p in paths]
    mask = rare.mask()
    fractions = _map_images(paths, lambda rgb: float(image_rgb_mass(rgb)[mask].sum()), threads)
    selected = []
    kept_fractions = []
    skipped = []
    for path, frac in zip(paths, fractions):
        if frac is None:
            skipped.append(path)
        elif frac >= min_fraction:
            selected.append(path)
            kept_fractions.append(frac)
    return CurationSelection(tuple(selected), tuple(kept_fractions), tuple(skipped))


def save_stats(stats: CorpusStats, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(stats.to_json_dict()) + "\n")


def load_stats(path: Union[str, Path]) -> CorpusStats:
    return CorpusStats.from_json_dict(json.loads(Path(path).read_text()))
