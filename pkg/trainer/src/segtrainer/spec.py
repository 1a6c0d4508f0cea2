"""Training configuration.

One frozen dataclass carries the whole recipe: model family, encoder
backbone, epoch count, learning rate, split ratios, input normalization,
and the seed. The CLI accepts the same fields as a JSON config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

MODEL_FAMILIES = ("unet", "fpn", "pspnet", "deeplabv3", "deeplabv3plus")
BACKBONES = ("resnet18", "resnet34", "resnet50")


@dataclass(frozen=True)
class TrainSpec:
    model: str = "unet"
    backbone: str = "resnet34"
    epochs: int = 15
    lr: float = 0.001              # constant; no scheduler
    test_fraction: float = 0.2     # of the whole catalog
    val_fraction: float = 0.25     # of what remains after the test cut
    norm_mean: float = 0.485       # applied per channel after [0,1] scaling
    norm_std: float = 0.229
    seed: int = 0
    batch_size: int = 8

    def __post_init__(self):
        if self.model not in MODEL_FAMILIES:
            raise ConfigError(
                f"unknown model family {self.model!r}; know {', '.join(MODEL_FAMILIES)}"
            )
        if self.backbone not in BACKBONES:
            raise ConfigError(
                f"unknown backbone {self.backbone!r}; know {', '.join(BACKBONES)}"
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not (math.isfinite(self.lr) and self.lr > 0):
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        for name, value in (("test_fraction", self.test_fraction),
                            ("val_fraction", self.val_fraction)):
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {value}")
        if not (math.isfinite(self.norm_std) and self.norm_std > 0):
            raise ConfigError(f"norm_std must be > 0, got {self.norm_std}")
        if not math.isfinite(self.norm_mean):
            raise ConfigError(f"norm_mean must be finite, got {self.norm_mean}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(
                f"unknown config key(s): {', '.join(sorted(unknown))}"
            )
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "TrainSpec":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        return cls.from_dict(doc)
