"""Runtime configuration.

Defaults live here; a JSON config file may override them, and command
line flags override the file. The file is found via --config or the
PALETTE_FORGE_CONFIG environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .colorspace import DistanceParams

ENV_VAR = "PALETTE_FORGE_CONFIG"


@dataclass(frozen=True)
class Config:
    threshold: float = 20.0
    sharpen_exponent: float = 1.0
    qc_exponent: float = 0.5
    palette_size: int = 8
    kmeans_size: int = 5
    kmeans_seed: int = 0
    rare_bin_count: int = 100
    min_rare_fraction: float = 0.05
    threads: int = 1

    def distance_params(self) -> DistanceParams:
        return DistanceParams(self.threshold, self.sharpen_exponent)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Config":
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def load_config(explicit_path: Optional[str] = None) -> Config:
    """Resolve the active config: flag, then environment, then defaults."""
    path = explicit_path or os.environ.get(ENV_VAR)
    if path:
        return Config.from_file(path)
    return Config()
