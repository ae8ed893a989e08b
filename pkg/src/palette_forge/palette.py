"""Palettes and palette extraction.

Two extractors: median-cut over the distinct-color population (fast,
used for training-time conditions) and seeded k-means over raw pixels
(used by the evaluation protocol). Both are deterministic: ties in
splitting, assignment, and output ordering are broken by fixed rules,
and k-means randomness comes only from the caller's seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .colorspace import ColorRgb, rgb_to_hsv_array
from .histogram import DIMS, Dims, HsvHistogram, bin_index_array


@dataclass(frozen=True)
class Palette:
    """An ordered set of colors, optionally weighted.

    Weights, when present, are strictly positive and sum to one; absent
    weights mean uniform.
    """

    colors: tuple[ColorRgb, ...]
    weights: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        colors = tuple(self.colors)
        if not colors:
            raise ValueError("palette needs at least one color")
        object.__setattr__(self, "colors", colors)
        if self.weights is not None:
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != len(colors):
                raise ValueError("palette weights must match colors in length")
            if any(w <= 0.0 for w in weights):
                raise ValueError("palette weights must be strictly positive")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("palette weights must sum to 1")
            object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.colors)

    def effective_weights(self) -> tuple[float, ...]:
        if self.weights is not None:
            return self.weights
        return (1.0 / len(self.colors),) * len(self.colors)

    def as_array(self) -> np.ndarray:
        return np.array([[c.r, c.g, c.b] for c in self.colors])

    def to_json_dict(self) -> dict:
        doc: dict = {"colors": [c.to_hex() for c in self.colors]}
        if self.weights is not None:
            doc["weights"] = list(self.weights)
        return doc

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "Palette":
        if not isinstance(doc, Mapping):
            raise ValueError(
                f"palette document must be an object, got {type(doc).__name__}"
            )
        try:
            colors = tuple(ColorRgb.from_hex(h) for h in doc["colors"])
        except KeyError:
            raise ValueError("palette document needs a 'colors' list") from None
        weights = doc.get("weights")
        return cls(colors, tuple(weights) if weights is not None else None)


def palette_to_histogram(palette: Palette, dims: Dims = DIMS) -> HsvHistogram:
    """Place each palette color's weight in its HSV bin."""
    flat = bin_index_array(rgb_to_hsv_array(palette.as_array()), dims)
    mass = np.zeros(dims[0] * dims[1] * dims[2])
    for idx, w in zip(flat, palette.effective_weights()):
        mass[idx] += w
    hist = HsvHistogram(mass, dims)
    return hist if hist.is_normalized else hist.normalize()


# ---------------------------------------------------------------------------
# Median cut


def _ordered_colors(colors: np.ndarray, counts: np.ndarray) -> tuple[ColorRgb, ...]:
    """Descending count, then ascending color, as a stable output order."""
    order = np.lexsort((colors[:, 2], colors[:, 1], colors[:, 0], -counts))
    return tuple(ColorRgb(*colors[i]) for i in order)


def extract_median_cut(pixels: np.ndarray, k: int) -> Palette:
    """Median-cut quantization to at most k colors.

    Boxes hold distinct colors weighted by pixel count. The box with the
    widest channel range splits at its median pixel (ties: wider range
    first, then more pixels, then older box; channels tie red to blue).
    An image with no more than k distinct colors comes back unchanged.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if pixels.shape[0] == 0:
        raise ValueError("cannot extract a palette from an empty pixel array")
    colors, counts = np.unique(pixels, axis=0, return_counts=True)
    if colors.shape[0] <= k:
        return Palette(_ordered_colors(colors, counts))

    boxes: list[tuple[np.ndarray, np.ndarray]] = [(colors, counts)]
    while len(boxes) < k:
        best = -1
        best_key = (-1.0, -1)
        for i, (c, n) in enumerate(boxes):
            if c.shape[0] < 2:
                continue
            spread = float(np.max(c.max(axis=0) - c.min(axis=0)))
            key = (spread, int(n.sum()))
            if key > best_key:
                best_key = key
                best = i
        if best < 0:
            break
        c, n = boxes.pop(best)
        chan = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = np.lexsort((c[:, 2], c[:, 1], c[:, 0], c[:, chan]))
        c, n = c[order], n[order]
        csum = np.cumsum(n)
        median_pos = (csum[-1] - 1) // 2
        cut = int(np.searchsorted(csum, median_pos, side="right"))
        if cut >= c.shape[0] - 1:
            cut = c.shape[0] - 2
        boxes.insert(best, (c[: cut + 1], n[: cut + 1]))
        boxes.insert(best + 1, (c[cut + 1 :], n[cut + 1 :]))

    means = np.empty((len(boxes), 3))
    box_weight = np.empty(len(boxes), dtype=np.int64)
    for i, (c, n) in enumerate(boxes):
        # A single-color box returns its color exactly, no averaging noise.
        means[i] = c[0] if c.shape[0] == 1 else (c * n[:, None]).sum(axis=0) / n.sum()
        box_weight[i] = n.sum()
    return Palette(_ordered_colors(means, box_weight))


# ---------------------------------------------------------------------------
# K-means


def extract_kmeans(pixels: np.ndarray, k: int = 5, seed: int = 0) -> Palette:
    """Seeded k-means palette in RGB space.

    Careful-seeding init (squared-distance weighted), at most 100 Lloyd
    iterations or convergence when no centroid moves more than 1e-4.
    An emptied cluster restarts at the point worst served by its current
    centroid. Output is ordered by descending cluster population.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if pixels.shape[0] == 0:
        raise ValueError("cannot extract a palette from an empty pixel array")
    distinct, distinct_counts = np.unique(pixels, axis=0, return_counts=True)
    if distinct.shape[0] <= k:
        return Palette(_ordered_colors(distinct, distinct_counts))

    rng = np.random.default_rng(seed)
    n = pixels.shape[0]
    centroids = np.empty((k, 3))
    centroids[0] = pixels[rng.integers(n)]
    d2 = np.sum((pixels - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        centroids[j] = pixels[rng.choice(n, p=d2 / d2.sum())]
        d2 = np.minimum(d2, np.sum((pixels - centroids[j]) ** 2, axis=1))

    assign = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        dists = np.sum((pixels[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        assign = np.argmin(dists, axis=1)
        misfit = dists[np.arange(n), assign]
        for j in range(k):
            if not np.any(assign == j):
                idx = int(np.argmax(misfit))
                centroids[j] = pixels[idx]
                assign[idx] = j
                misfit[idx] = -1.0
        new_centroids = np.empty_like(centroids)
        for j in range(k):
            new_centroids[j] = pixels[assign == j].mean(axis=0)
        movement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if movement < 1e-4:
            break

    cluster_counts = np.bincount(assign, minlength=k)
    return Palette(_ordered_colors(centroids, cluster_counts))
