"""Color fidelity evaluation protocol.

Cases pair a reference image with its caption; only captions that name a
color take part, since palette adherence is meaningless for prompts that
never asked for one. Each case scores the mover's distance between a
generated image's histogram and the target palette's histogram. Means
use compensated summation, so case order cannot change the report, and
the reported spread is the population standard deviation.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .colorspace import DistanceParams, lab_distance_matrix, rgb_to_lab_array, thresholded_distance_array
from .histogram import DIMS, Dims, histogram_of_image
from .images import load_image_rgb
from .palette import Palette, extract_kmeans, palette_to_histogram
from .transport import emd, ground_distance, min_cost_transport

COLOR_WORDS = (
    "red", "orange", "yellow", "green", "blue", "purple", "violet", "pink",
    "brown", "black", "white", "gray", "grey", "cyan", "magenta", "teal",
    "gold", "golden", "silver", "beige", "tan", "maroon", "navy", "turquoise",
    "crimson", "scarlet", "indigo", "lavender", "olive", "colorful",
)

_COLOR_WORD_RE = re.compile(r"\b(" + "|".join(COLOR_WORDS) + r")\b", re.IGNORECASE)

GRID_SIDE = 8
RENDER_SIZE = 512


@dataclass(frozen=True)
class EvalCase:
    """One evaluation case: reference image, caption, optional palette."""

    image: str
    caption: str
    palette: Optional[Palette] = None

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EvalCase":
        palette = doc.get("palette")
        return cls(
            str(doc["image"]),
            str(doc["caption"]),
            Palette.from_json_dict(palette) if palette is not None else None,
        )


@dataclass(frozen=True)
class EvalReport:
    """Aggregate palette adherence over the evaluated cases."""

    case_count: int
    mean_distance: float
    std_distance: float
    std_kind: str
    scores: tuple[tuple[str, float], ...]
    failed: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "case_count": self.case_count,
            "mean_distance": self.mean_distance,
            "std_distance": self.std_distance,
            "std_kind": self.std_kind,
            "scores": {image: score for image, score in self.scores},
            "failed": list(self.failed),
        }


def caption_mentions_color(caption: str) -> bool:
    """True when the caption contains any color word, whole word only."""
    return _COLOR_WORD_RE.search(caption) is not None


def filter_color_captions(cases: Sequence[EvalCase]) -> list[EvalCase]:
    return [case for case in cases if caption_mentions_color(case.caption)]


def read_cases_jsonl(path: Union[str, Path]) -> list[EvalCase]:
    cases = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            cases.append(EvalCase.from_json_dict(json.loads(line)))
    return cases


def evaluate(
    cases: Sequence[EvalCase],
    generated_dir: Union[str, Path],
    k: int = 5,
    seed: int = 0,
    params: DistanceParams = DistanceParams(),
    dims: Dims = DIMS,
    threads: int = 1,
) -> EvalReport:
    """Score generated images against their target palettes.

    The generated image for a case is looked up by the reference image's
    basename inside `generated_dir`. A case without an explicit palette
    gets a seeded k-means palette of the reference image. Cases whose
    reference or generated image cannot be read are reported as failed
    and excluded from the aggregate.
    """
    generated_dir = Path(generated_dir)
    ground = ground_distance(params, dims)

    def score(case: EvalCase) -> Optional[float]:
        try:
            palette = case.palette
            if palette is None:
                palette = extract_kmeans(load_image_rgb(case.image), k=k, seed=seed)
            gen = load_image_rgb(generated_dir / Path(case.image).name)
        except (OSError, ValueError):
            return None
        target = palette_to_histogram(palette, dims)
        distance, _ = emd(histogram_of_image(gen, dims), target, ground)
        return distance

    if threads <= 1:
        results = [score(c) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score, cases))

    scores = []
    failed = []
    for case, value in zip(cases, results):
        if value is None:
            failed.append(case.image)
        else:
            scores.append((case.image, value))
    if not scores:
        raise ValueError("no evaluable cases: every case failed or none were given")

    values = [v for _, v in scores]
    n = len(values)
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
    return EvalReport(n, mean, std, "population", tuple(scores), tuple(failed))


# ---------------------------------------------------------------------------
# Spatial palette alignment


@dataclass(frozen=True)
class Palette2D:
    """A coarse spatial layout of palette colors.

    `grid` holds a palette index per cell of the 8x8 layout; rendering
    repeats each cell as a flat block of the palette color.
    """

    grid: np.ndarray
    palette: Palette

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=np.int64)
        if grid.shape != (GRID_SIDE, GRID_SIDE):
            raise ValueError(f"grid must be {GRID_SIDE}x{GRID_SIDE}")
        if grid.min() < 0 or grid.max() >= len(self.palette):
            raise ValueError("grid references a palette index out of range")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    def render(self, size: int = RENDER_SIZE) -> np.ndarray:
        """Nearest-neighbor upsample to (size, size, 3) sRGB floats."""
        if size % GRID_SIDE != 0:
            raise ValueError(f"render size must be a multiple of {GRID_SIDE}")
        cells = self.palette.as_array()[self.grid]
        scale = size // GRID_SIDE
        return np.repeat(np.repeat(cells, scale, axis=0), scale, axis=1)


def _box_average(rgb: np.ndarray, side: int) -> np.ndarray:
    """Average an (H, W, 3) image over a side x side grid of near-equal
    blocks."""
    rgb = np.asarray(rgb, dtype=np.float64)
    h, w = rgb.shape[0], rgb.shape[1]
    if h < side or w < side:
        raise ValueError(f"image must be at least {side}x{side}")
    out = np.empty((side, side, 3))
    rows = np.array_split(np.arange(h), side)
    cols = np.array_split(np.arange(w), side)
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            out[i, j] = rgb[r[0] : r[-1] + 1, c[0] : c[-1] + 1].mean(axis=(0, 1))
    return out


def make_palette_2d(
    reference_rgb: np.ndarray,
    palette: Palette,
    params: DistanceParams = DistanceParams(),
) -> Palette2D:
    """Assign palette colors to image regions by balanced transport.

    The reference is box-averaged to 8x8 cells with mass 1/64 each, the
    palette colors carry mass 1/k each, and ground costs are saturating
    CIEDE2000 between cell and palette colors directly. Each cell takes
    the palette color that sent it the most mass (ties to the lower
    index), which spends every color's budget somewhere near colors that
    suit it.
    """
    cells = _box_average(reference_rgb, GRID_SIDE).reshape(-1, 3)
    cost = thresholded_distance_array(
        lab_distance_matrix(rgb_to_lab_array(cells), rgb_to_lab_array(palette.as_array())),
        params,
    )
    n_cells = cells.shape[0]
    k = len(palette)
    flows = min_cost_transport(
        np.full(n_cells, 1.0 / n_cells), np.full(k, 1.0 / k), cost
    )
    flow = np.zeros((n_cells, k))
    for i, j, f in flows:
        flow[i, j] += f
    grid = np.argmax(flow, axis=1).reshape(GRID_SIDE, GRID_SIDE)
    return Palette2D(grid, palette)


# ---------------------------------------------------------------------------
# Ablation reporting


@dataclass(frozen=True)
class AblationRow:
    """Mean and spread of the eval distance for one configuration."""

    name: str
    mean_distance: float
    std_distance: float


def ablation_report(rows: Sequence[AblationRow]) -> dict:
    """Rank configurations by mean distance, lowest first, and flag the
    winner. Ties rank by name so reports are stable."""
    if not rows:
        raise ValueError("ablation report needs at least one row")
    ordered = sorted(rows, key=lambda r: (r.mean_distance, r.name))
    return {
        "rows": [
            {
                "name": r.name,
                "mean_distance": r.mean_distance,
                "std_distance": r.std_distance,
                "best": i == 0,
            }
            for i, r in enumerate(ordered)
        ],
        "best": ordered[0].name,
    }
