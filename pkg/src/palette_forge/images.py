"""Image decoding."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image


def load_image_rgb(path: Union[str, Path]) -> np.ndarray:
    """Decode an image file to an (H, W, 3) float64 sRGB array in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float64) / 255.0
