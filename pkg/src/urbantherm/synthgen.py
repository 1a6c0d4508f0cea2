"""Synthetic labeled radiometric scenes with known ground truth.

Scenes are axis-aligned rectangles of the six surface classes, each
following a sinusoidal day cycle

    T_c(h) = T_base + A * sin(2*pi * (h - t_peak + 6) / 24)

that peaks at ``t_peak`` local hour. Optional hot patches add a fixed
offset, Gaussian pixel noise (truncated at 4 sigma) is seeded and
deterministic, and emissivity is applied in the forward direction
(kelvin * eps^(1/4)) before count conversion so the analysis-side
correction is exercised non-trivially. Every frame ships with its mask
and the exact pre-noise per-class mean temperatures.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from . import maskcore
from .errors import ConfigurationError, RangeError
from .maskcore import LabelMask
from .radiometric import (
    EmissivityTable,
    PlanckConstants,
    RadiometricFrame,
    TemperatureField,
    forward_model,
)
from .utils import format_stamp, local_hour, parse_timezone

logger = logging.getLogger(__name__)

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class ThermalModel:
    """Diurnal temperature model of one class."""

    base_kelvin: float
    amplitude: float = 0.0
    peak_hour: float = 15.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError(f"amplitude must be >= 0, got {self.amplitude}")
        if not (np.isfinite(self.base_kelvin) and self.base_kelvin > 0):
            raise ConfigurationError(f"base temperature must be > 0 K, got {self.base_kelvin}")

    def at_hour(self, hour: float) -> float:
        return self.base_kelvin + self.amplitude * math.sin(
            2.0 * math.pi * (hour - self.peak_hour + 6.0) / 24.0
        )


@dataclass(frozen=True)
class HotPatch:
    rect: tuple               # (x, y, w, h)
    delta_kelvin: float


@dataclass(frozen=True)
class SceneSpec:
    """Full description of a synthetic scene; generation is pure given (spec, seed)."""

    layout: tuple             # ((class_id, (x, y, w, h)), ...); later entries overwrite
    thermal: Mapping[int, ThermalModel]
    width: int = 320
    height: int = 240
    noise_sigma: float = 0.0
    patches: tuple = ()
    seed: int = 0
    view_id: int = 1
    timezone: str = "UTC"
    emissivity: EmissivityTable = field(default_factory=EmissivityTable.default)
    constants: PlanckConstants = field(default_factory=PlanckConstants)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError(f"scene must be non-empty, got {self.width}x{self.height}")
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        object.__setattr__(self, "layout", tuple((int(c), tuple(r)) for c, r in self.layout))
        object.__setattr__(self, "patches", tuple(
            p if isinstance(p, HotPatch) else HotPatch(tuple(p[0]), float(p[1]))
            for p in self.patches
        ))
        thermal = dict(self.thermal)
        if maskcore.BACKGROUND not in thermal:
            raise ConfigurationError("thermal model for the background class is required")
        used = {c for c, _ in self.layout}
        for c in used:
            if c not in thermal:
                raise ConfigurationError(
                    f"layout uses class {maskcore.class_name(c)} without a thermal model"
                )
        object.__setattr__(self, "thermal", thermal)
        for c, (x, y, w, h) in self.layout:
            if c not in maskcore.ALL_CLASSES:
                raise ConfigurationError(f"unknown class id {c} in layout")
            self._check_rect((x, y, w, h), f"layout rectangle for {maskcore.class_name(c)}")
        for p in self.patches:
            self._check_rect(p.rect, "hot patch rectangle")

    def _check_rect(self, rect, what):
        x, y, w, h = rect
        if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise ConfigurationError(f"{what} {rect} outside {self.width}x{self.height} bounds")

    def build_mask(self) -> LabelMask:
        classes = np.zeros((self.height, self.width), dtype=np.uint8)
        for c, (x, y, w, h) in self.layout:
            classes[y : y + h, x : x + w] = c
        return LabelMask(classes)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "layout": [[c, list(r)] for c, r in self.layout],
            "thermal": {
                str(c): {"base_kelvin": m.base_kelvin, "amplitude": m.amplitude,
                         "peak_hour": m.peak_hour}
                for c, m in sorted(self.thermal.items())
            },
            "noise_sigma": self.noise_sigma,
            "patches": [[list(p.rect), p.delta_kelvin] for p in self.patches],
            "seed": self.seed,
            "view_id": self.view_id,
            "timezone": self.timezone,
            "emissivity": self.emissivity.to_dict(),
            "constants": self.constants.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SceneSpec":
        # user-authored spec files reach this point unvalidated
        try:
            kwargs = dict(d)
            kwargs["layout"] = tuple((c, tuple(r)) for c, r in d["layout"])
            kwargs["thermal"] = {
                int(c): ThermalModel(**m) for c, m in d["thermal"].items()
            }
            kwargs["patches"] = tuple(HotPatch(tuple(r), dt) for r, dt in d.get("patches", ()))
            if "emissivity" in d:
                kwargs["emissivity"] = EmissivityTable.from_dict(d["emissivity"])
            if "constants" in d:
                kwargs["constants"] = PlanckConstants.from_dict(d["constants"])
            return cls(**kwargs)
        except KeyError as exc:
            raise ConfigurationError(f"scene spec is missing required key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed scene spec: {exc}") from exc


@dataclass(frozen=True)
class SceneSample:
    """One generated instant: raw frame, mask, and exact pre-noise class means."""

    frame: RadiometricFrame
    mask: LabelMask
    class_means: dict         # class id -> mean kelvin (pre-noise, pre-emissivity)
    scene_kelvin: np.ndarray  # pre-noise surface temperatures


def scene_temperatures(spec: SceneSpec, hour: float) -> np.ndarray:
    """Pre-noise surface kelvin at a local hour: class sinusoids plus patches."""
    mask = spec.build_mask()
    kelvin = np.empty((spec.height, spec.width), dtype=np.float64)
    kelvin[:] = spec.thermal[maskcore.BACKGROUND].at_hour(hour)
    for c in sorted(set(mask.classes.ravel().tolist())):
        kelvin[mask.classes == c] = spec.thermal[c].at_hour(hour)
    for p in spec.patches:
        x, y, w, h = p.rect
        kelvin[y : y + h, x : x + w] += p.delta_kelvin
    return kelvin


def generate(spec: SceneSpec, timestamps: Sequence[datetime]) -> list:
    """Render one SceneSample per timestamp, deterministically for a given seed."""
    tz = parse_timezone(spec.timezone)
    mask = spec.build_mask()
    eps = spec.emissivity.as_array()[mask.classes] ** 0.25
    samples = []
    for index, ts in enumerate(timestamps):
        hour = local_hour(ts, tz)
        kelvin = scene_temperatures(spec, hour)
        class_means = {
            int(c): float(kelvin[mask.classes == c].mean())
            for c in np.unique(mask.classes)
        }
        noisy = kelvin
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, index])
            noise = rng.normal(0.0, spec.noise_sigma, size=kelvin.shape)
            limit = 4.0 * spec.noise_sigma
            noisy = kelvin + np.clip(noise, -limit, limit)
        apparent = noisy * eps
        try:
            frame = forward_model(
                TemperatureField.from_kelvin(apparent),
                spec.constants,
                timestamp=ts,
                view_id=spec.view_id,
            )
        except RangeError as exc:
            where = ""
            if exc.pixel is not None:
                c = int(mask.classes[exc.pixel])
                where = f" for class {maskcore.class_name(c)}"
            raise RangeError(
                f"scene at {ts.isoformat()} maps outside the count range{where}: {exc}",
                pixel=exc.pixel,
            ) from exc
        samples.append(SceneSample(frame, mask, class_means, kelvin))
    return samples


def day_of_timestamps(day: datetime, hours: Sequence[float]) -> list:
    base = day.replace(hour=0, minute=0, second=0, microsecond=0)
    return [base + timedelta(hours=float(h)) for h in hours]


def perturb_mask(mask: LabelMask, erosion_px: int, seed: int, flip_rate: float = 0.001) -> LabelMask:
    """Simulate an imperfect predicted mask.

    Non-background classes are eroded toward background by ``erosion_px``
    (4-connected), then ``flip_rate`` of the strictly interior pixels flip
    to a seeded random other class. erosion_px=0 with flip_rate=0 is the
    identity.
    """
    if erosion_px < 0:
        raise ConfigurationError(f"erosion_px must be >= 0, got {erosion_px}")
    classes = np.asarray(mask.classes)
    if erosion_px > 0:
        out = np.zeros_like(classes)
        for c in maskcore.ALL_CLASSES[1:]:
            sel = classes == c
            if not sel.any():
                continue
            eroded = ndimage.binary_erosion(sel, structure=_CROSS, iterations=erosion_px)
            out[eroded] = c
    else:
        out = classes.copy()
    if flip_rate > 0:
        uniform = np.ones_like(out, dtype=bool)
        for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
            uniform &= np.roll(out, shift, axis=axis) == out
        uniform[0, :] = uniform[-1, :] = False
        uniform[:, 0] = uniform[:, -1] = False
        candidates = np.flatnonzero(uniform.ravel())
        n_flips = int(round(flip_rate * candidates.size))
        if n_flips:
            rng = np.random.default_rng(seed)
            chosen = rng.choice(candidates, size=n_flips, replace=False)
            flat = out.ravel()
            offsets = rng.integers(1, maskcore.NUM_CLASSES, size=n_flips)
            flat[chosen] = (flat[chosen] + offsets) % maskcore.NUM_CLASSES
            out = flat.reshape(out.shape)
    return LabelMask(out)


def write_scene(
    spec: SceneSpec,
    timestamps: Sequence[datetime],
    root,
    *,
    predicted_from=None,
) -> Path:
    """Write the catalog layout the pipeline consumes, plus ground truth.

    Produces ``<root>/<view>/<stamp>.pgm`` + ``.mask.png`` + ``.meta.json``
    per timestamp, a ``ground_truth.json`` of exact class means, and the
    catalog manifest. ``predicted_from=(model_name, erosion_px)`` also
    writes perturbed masks as that model's predictions.
    """
    from . import pipeline, rasters

    root = Path(root)
    view_dir = root / str(spec.view_id)
    view_dir.mkdir(parents=True, exist_ok=True)
    samples = generate(spec, timestamps)
    truth = {}
    for sample in samples:
        stamp = format_stamp(sample.frame.timestamp)
        rasters.write_pgm(sample.frame.counts, view_dir / f"{stamp}{pipeline.FRAME_SUFFIX}")
        maskcore.write_mask(sample.mask, view_dir / f"{stamp}{pipeline.MASK_SUFFIX}")
        rasters.write_sidecar(
            view_dir / f"{stamp}{pipeline.SIDECAR_SUFFIX}",
            timestamp=sample.frame.timestamp,
            view_id=spec.view_id,
            constants=spec.constants,
        )
        if predicted_from is not None:
            model_name, erosion_px = predicted_from
            pred = perturb_mask(sample.mask, erosion_px, seed=spec.seed)
            maskcore.write_mask(
                pred, view_dir / f"{stamp}{pipeline.pred_suffix(model_name)}"
            )
        truth[f"{spec.view_id}/{stamp}"] = {
            str(c): mean for c, mean in sorted(sample.class_means.items())
        }
    with open(root / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    pipeline.build_catalog(root)
    return root


def demo_scene(seed: int = 0, width: int = 320, height: int = 240,
               noise_sigma: float = 0.5) -> SceneSpec:
    """A three-feature street scene used by the CLI and the demos."""
    w, h = width, height
    sky_h = h // 4
    road_y = int(h * 0.8)
    return SceneSpec(
        layout=(
            (maskcore.SKY, (0, 0, w, sky_h)),
            (maskcore.BUILDING, (int(w * 0.08), sky_h, int(w * 0.5), road_y - sky_h)),
            (maskcore.VEGETATION, (int(w * 0.65), sky_h, int(w * 0.3), road_y - sky_h)),
            (maskcore.ROAD, (0, road_y, w, h - road_y)),
        ),
        thermal={
            maskcore.BACKGROUND: ThermalModel(295.0, 1.0),
            maskcore.SKY: ThermalModel(270.0, 2.0),
            maskcore.BUILDING: ThermalModel(303.0, 6.0),
            maskcore.VEGETATION: ThermalModel(299.0, 3.0),
            maskcore.ROAD: ThermalModel(305.0, 8.0),
        },
        width=w,
        height=h,
        noise_sigma=noise_sigma,
        patches=(HotPatch((int(w * 0.15), int(h * 0.3), max(8, w // 20), max(8, h // 16)), 4.0),),
        seed=seed,
    )
