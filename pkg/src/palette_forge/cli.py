"""Command line interface.

Every command prints one JSON document to stdout. Exit codes: 0 on
success, 1 when input data cannot be read or processed, 2 on usage
errors (argparse handles those itself).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from . import __version__
from .colorspace import DistanceParams
from .conditioning import (
    AugmentationType,
    DropoutTable,
    build_condition,
    read_pcnd,
    sample_augmentation,
    write_pcnd,
)
from .config import Config, load_config
from .curation import (
    load_stats,
    rank_bins,
    rare_bins,
    save_stats,
    scan_corpus,
    select_rare_images,
)
from .evaluation import (
    AblationRow,
    ablation_report,
    evaluate,
    filter_color_captions,
    make_palette_2d,
    read_cases_jsonl,
)
from .histogram import (
    HsvHistogram,
    entropy_bits,
    histogram_of_image,
    load_histogram,
    save_histogram,
)
from .images import load_image_rgb
from .palette import Palette, extract_kmeans, extract_median_cut, palette_to_histogram
from .transport import emd, emd_oracle, ground_distance, quadratic_chi, similarity

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".ppm", ".bmp", ".gif", ".webp"}


def _emit(doc: dict, pretty: bool) -> None:
    print(json.dumps(doc, indent=2 if pretty else None, sort_keys=True))


def _read_palette(path: str) -> Palette:
    return Palette.from_json_dict(json.loads(Path(path).read_text()))


def _load_operand(path: str, config: Config) -> HsvHistogram:
    """Read a distance operand: histogram file, palette file, or image."""
    p = Path(path)
    if p.suffix.lower() == ".phst":
        return load_histogram(p)
    if p.suffix.lower() == ".json":
        doc = json.loads(p.read_text())
        if "colors" in doc:
            return palette_to_histogram(Palette.from_json_dict(doc))
        return load_histogram(p)
    data = p.read_bytes()
    if data[:4] == b"PHST":
        return load_histogram(p)
    return histogram_of_image(load_image_rgb(p))


def _ensure_parent(path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _collect_images(paths: list[str]) -> list[str]:
    """Expand directories into sorted image file lists."""
    found: list[str] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found.extend(
                str(f)
                for f in sorted(p.iterdir())
                if f.suffix.lower() in _IMAGE_SUFFIXES and f.is_file()
            )
        else:
            found.append(raw)
    return found


# ---------------------------------------------------------------------------
# Commands


def _cmd_hist(args, config: Config) -> dict:
    hist = histogram_of_image(load_image_rgb(args.image))
    out = _ensure_parent(args.output)
    save_histogram(hist, out)
    return {
        "output": str(out),
        "nonzero_bins": len(hist.to_sparse()),
        "entropy_bits": entropy_bits(hist),
    }


def _cmd_extract(args, config: Config) -> dict:
    pixels = load_image_rgb(args.image)
    if args.method == "median-cut":
        k = args.k if args.k is not None else config.palette_size
        palette = extract_median_cut(pixels, k)
    else:
        k = args.k if args.k is not None else config.kmeans_size
        seed = args.seed if args.seed is not None else config.kmeans_seed
        palette = extract_kmeans(pixels, k=k, seed=seed)
    doc = palette.to_json_dict()
    if args.output:
        _ensure_parent(args.output).write_text(json.dumps(doc) + "\n")
        doc = {"output": args.output, **doc}
    return doc


def _cmd_dist(args, config: Config) -> dict:
    p = _load_operand(args.a, config)
    q = _load_operand(args.b, config)
    if not p.is_normalized:
        p = p.normalize()
    if not q.is_normalized:
        q = q.normalize()
    params = config.distance_params()
    if args.metric == "emd":
        distance, _ = emd(p, q, ground_distance(params, p.dims))
    else:
        distance = quadratic_chi(p, q, similarity(params, p.dims), config.qc_exponent)
    return {"metric": args.metric, "distance": distance}


def _cmd_entropy(args, config: Config) -> dict:
    hist = _load_operand(args.input, config)
    if not hist.is_normalized:
        hist = hist.normalize()
    return {"entropy_bits": entropy_bits(hist)}


def _cmd_encode(args, config: Config) -> dict:
    image_hist = histogram_of_image(load_image_rgb(args.image))
    palette = _read_palette(args.palette) if args.palette else None
    params = config.distance_params()

    if args.aug is None:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        aug, text_present, drop_entropy = sample_augmentation(rng, DropoutTable())
    else:
        aug = AugmentationType[args.aug.upper().replace("-", "_")]
        text_present = not args.no_text
        drop_entropy = args.drop_entropy
    if aug == AugmentationType.PALETTE and palette is None:
        palette = extract_median_cut(load_image_rgb(args.image), config.palette_size)

    rec = build_condition(
        image_hist,
        aug,
        text_present,
        palette=palette,
        drop_entropy=drop_entropy,
        params=params,
        m=config.qc_exponent,
    )
    out = _ensure_parent(args.output)
    write_pcnd(rec, out)
    return {
        "output": str(out),
        "aug_type": aug.name.lower(),
        "text_present": rec.text_present,
        "distance": rec.distance,
        "entropy": rec.entropy,
    }


def _cmd_decode(args, config: Config) -> dict:
    rec = read_pcnd(args.input)
    return {
        "aug_type": rec.aug_type.name.lower(),
        "text_present": rec.text_present,
        "distance": rec.distance,
        "entropy": rec.entropy,
        "nonzero_bins": len(rec.histogram.to_sparse()),
    }


def _cmd_scan_corpus(args, config: Config) -> dict:
    paths = _collect_images(args.paths)
    stats, skipped = scan_corpus(paths, threads=args.threads or config.threads)
    out = _ensure_parent(args.output)
    save_stats(stats, out)
    order = rank_bins(stats)
    top = int(args.top)
    return {
        "output": str(out),
        "image_count": stats.image_count,
        "skipped": skipped,
        "top_bins": [int(i) for i in order[:top]],
        "top_share": float(stats.bins[order[:top]].sum()),
    }


def _cmd_select_rare(args, config: Config) -> dict:
    stats = load_stats(args.stats)
    count = args.count if args.count is not None else config.rare_bin_count
    min_fraction = (
        args.min_fraction if args.min_fraction is not None else config.min_rare_fraction
    )
    rare = rare_bins(stats, count)
    selection = select_rare_images(
        _collect_images(args.paths),
        rare,
        min_fraction=min_fraction,
        threads=args.threads or config.threads,
    )
    return {
        "rare_bin_count": count,
        "min_fraction": min_fraction,
        "selected": list(selection.selected),
        "fractions": {p: f for p, f in zip(selection.selected, selection.fractions)},
        "skipped": list(selection.skipped),
    }


def _cmd_eval(args, config: Config) -> dict:
    cases = read_cases_jsonl(args.cases)
    total = len(cases)
    if not args.no_filter:
        cases = filter_color_captions(cases)
    report = evaluate(
        cases,
        args.generated,
        k=config.kmeans_size,
        seed=config.kmeans_seed,
        params=config.distance_params(),
        threads=args.threads or config.threads,
    )
    doc = report.to_json_dict()
    doc["cases_total"] = total
    doc["cases_filtered_out"] = total - len(cases)
    return doc


def _cmd_align_2d(args, config: Config) -> dict:
    palette = _read_palette(args.palette)
    layout = make_palette_2d(load_image_rgb(args.image), palette, config.distance_params())
    doc: dict = {"grid": layout.grid.tolist()}
    if args.output:
        out = _ensure_parent(args.output)
        rendered = layout.render(args.size)
        Image.fromarray(np.clip(np.round(rendered * 255.0), 0, 255).astype(np.uint8)).save(out)
        doc["output"] = str(out)
    return doc


def _cmd_ablate_report(args, config: Config) -> dict:
    rows = []
    for line in Path(args.rows).read_text().splitlines():
        line = line.strip()
        if line:
            doc = json.loads(line)
            rows.append(
                AblationRow(
                    str(doc["name"]),
                    float(doc["mean_distance"]),
                    float(doc["std_distance"]),
                )
            )
    return ablation_report(rows)


def _cmd_oracle(args, config: Config) -> dict:
    p = _load_operand(args.a, config)
    q = _load_operand(args.b, config)
    if not p.is_normalized:
        p = p.normalize()
    if not q.is_normalized:
        q = q.normalize()
    distance = emd_oracle(p, q, ground_distance(config.distance_params(), p.dims))
    return {"metric": "emd-oracle", "distance": distance}


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palette-forge",
        description="Color histogram, palette, and transport distance toolkit.",
    )
    parser.add_argument(
        "--version", action="version", version=f"palette-forge {__version__}"
    )
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--pretty", action="store_true", help="indent JSON output")
    parser.add_argument(
        "--threads", type=int, default=0, help="worker threads (0: use config)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hist", help="HSV histogram of an image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True, help=".phst or .json output")
    p.set_defaults(fn=_cmd_hist)

    p = sub.add_parser("extract", help="extract a palette from an image")
    p.add_argument("image")
    p.add_argument("--method", choices=["median-cut", "kmeans"], default="median-cut")
    p.add_argument("-k", type=int, default=None, help="palette size")
    p.add_argument("--seed", type=int, default=None, help="kmeans seed")
    p.add_argument("-o", "--output", default=None, help="palette JSON output")
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("dist", help="distance between histograms, images, or palettes")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric", choices=["emd", "qc"], default="emd")
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("entropy", help="entropy of a histogram or image")
    p.add_argument("input")
    p.set_defaults(fn=_cmd_entropy)

    p = sub.add_parser("encode", help="build a condition record for an image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True, help=".pcnd output")
    p.add_argument(
        "--aug",
        choices=["histogram", "palette", "none"],
        default=None,
        help="condition type (omit to sample from the dropout table)",
    )
    p.add_argument("--palette", default=None, help="palette JSON for palette conditions")
    p.add_argument("--seed", type=int, default=None, help="sampling seed")
    p.add_argument("--no-text", action="store_true", help="drop the caption flag")
    p.add_argument("--drop-entropy", action="store_true", help="zero the entropy channel")
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("decode", help="inspect a condition record")
    p.add_argument("input")
    p.set_defaults(fn=_cmd_decode)

    p = sub.add_parser("scan-corpus", help="coarse RGB color statistics of a corpus")
    p.add_argument("paths", nargs="+", help="image files or directories")
    p.add_argument("-o", "--output", required=True, help="stats JSON output")
    p.add_argument("--top", type=int, default=10, help="top bins to report")
    p.set_defaults(fn=_cmd_scan_corpus)

    p = sub.add_parser("select-rare", help="select images rich in rare colors")
    p.add_argument("paths", nargs="+", help="image files or directories")
    p.add_argument("--stats", required=True, help="stats JSON from scan-corpus")
    p.add_argument("--count", type=int, default=None, help="rare bin count")
    p.add_argument("--min-fraction", type=float, default=None, help="selection threshold")
    p.set_defaults(fn=_cmd_select_rare)

    p = sub.add_parser("eval", help="score generated images against palettes")
    p.add_argument("--cases", required=True, help="JSONL of eval cases")
    p.add_argument("--generated", required=True, help="directory of generated images")
    p.add_argument(
        "--no-filter", action="store_true", help="keep captions without color words"
    )
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("align-2d", help="spatial palette layout for an image")
    p.add_argument("image")
    p.add_argument("--palette", required=True, help="palette JSON")
    p.add_argument("-o", "--output", default=None, help="rendered PNG output")
    p.add_argument("--size", type=int, default=512, help="rendered size in pixels")
    p.set_defaults(fn=_cmd_align_2d)

    p = sub.add_parser("ablate-report", help="rank ablation rows by mean distance")
    p.add_argument("rows", help="JSONL with name, mean_distance, std_distance")
    p.set_defaults(fn=_cmd_ablate_report)

    p = sub.add_parser("oracle", help="reference transport distance (small supports)")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(fn=_cmd_oracle)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        doc = args.fn(args, config)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1
    _emit(doc, args.pretty)
    return 0


if __name__ == "__main__":
    sys.exit(main())
