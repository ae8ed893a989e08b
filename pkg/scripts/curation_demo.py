#!/usr/bin/env python3
"""End-to-end curation walkthrough on a synthetic skewed corpus.

Writes a small corpus whose color mass is concentrated in a handful of
RGB bins plus a few images rich in rare colors, then runs the scan,
ranking, and rare-image selection over it.

    python3 scripts/curation_demo.py --workdir /tmp/curation-demo
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from palette_forge.colorspace import hsv_to_rgb_array
from palette_forge.curation import (
    rank_bins,
    rare_bins,
    rare_fraction,
    scan_corpus,
    select_rare_images,
)


def write_image(path, rgb):
    Image.fromarray((rgb * 255.0 + 0.5).astype(np.uint8)).save(path)


def snap_to_grid(rgb):
    """Quantize colors to the centers of the 8x8x8 curation grid, so the
    demo corpus has clean bin boundaries instead of noise spill."""
    return (np.floor(np.clip(rgb, 0.0, 0.999) * 8.0) + 0.5) / 8.0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="/tmp/palette-forge-curation-demo")
    parser.add_argument("--common", type=int, default=30, help="common image count")
    parser.add_argument("--rare", type=int, default=3, help="rare-color image count")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    corpus = Path(args.workdir) / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)

    # common images: muted browns and grays, the usual photo soup
    paths = []
    for i in range(args.common):
        base = rng.uniform(0.3, 0.6, size=3)
        img = snap_to_grid(base + rng.normal(0, 0.05, size=(64, 64, 3)))
        path = corpus / f"common_{i:03d}.png"
        write_image(path, img)
        paths.append(str(path))

    # rare images: mostly soup, plus a thin band sweeping the whole hue
    # circle at high saturation, so the extra mass spreads over dozens of
    # bins that the rest of the corpus never touches
    hue_band = np.zeros((16, 64, 3))
    hue_band[..., 0] = np.linspace(0.0, 359.0, 64)
    hue_band[..., 1:] = 0.95
    for i in range(args.rare):
        img = rng.uniform(0.3, 0.6, size=3) + rng.normal(0, 0.05, size=(64, 64, 3))
        img[:16] = hsv_to_rgb_array(hue_band)
        img = snap_to_grid(img)
        path = corpus / f"rare_{i:03d}.png"
        write_image(path, img)
        paths.append(str(path))

    stats, skipped = scan_corpus(paths, threads=4)
    print(f"scanned {stats.image_count} images ({len(skipped)} skipped)")

    order = rank_bins(stats)
    print("top 5 RGB bins by mean mass:")
    for i in order[:5]:
        print(f"  bin {int(i):3d}: {stats.bins[i]:.4f}")

    rare = rare_bins(stats, count=450)
    selection = select_rare_images(paths, rare, min_fraction=0.15, threads=4)
    print(f"selected {len(selection.selected)} of {len(paths)} images "
          f"with >=15% mass in the 450 rarest bins:")
    for path, fraction in zip(selection.selected, selection.fractions):
        print(f"  {Path(path).name}: {fraction:.3f}")

    example = paths[0]
    img = np.asarray(Image.open(example).convert("RGB"), dtype=np.float64) / 255.0
    print(f"rare-mass fraction of {Path(example).name}: {rare_fraction(img, rare):.4f}")


if __name__ == "__main__":
    main()
