"""Detector counts to surface temperature and back.

A long-wave infrared camera reports a 16-bit signal per pixel. The
calibration model used here is

    T = B / ln(R1 / (R2 * (U + O)) + f)        (counts -> kelvin)

with per-camera constants R1, R2, B, O, f. The closed-form inverse is
used by the synthetic scene generator and for round-trip checks:

    U = round(R1 / (R2 * (exp(B / T) - f)) - O)

Apparent temperatures are corrected for surface emissivity by

    T_corr = T / eps ** (1/4)

All operations are pure: they never mutate their inputs and are safe to
call concurrently on disjoint frames.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Mapping

import numpy as np

from . import maskcore
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    EmptyInputError,
    RangeError,
    StateError,
)
from .utils import ensure_utc

MAX_COUNT = 65535

#: Shipped per-class emissivities. Operator-tunable; these are typical
#: literature values for the six surface types, not measured ones.
DEFAULT_EMISSIVITIES = {
    maskcore.BACKGROUND: 1.00,
    maskcore.BUILDING: 0.93,
    maskcore.VEGETATION: 0.98,
    maskcore.ROAD: 0.95,
    maskcore.SKY: 1.00,
    maskcore.OFFSHORE: 0.90,
}

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class PlanckConstants:
    """Camera calibration constants. Defaults are the FLIR A300 factory set."""

    r1: float = 14911.1846
    r2: float = 0.0108
    b: float = 1396.6
    o: float = -6303.0
    f: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "b", "f"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"Planck constant {name} must be finite and > 0, got {v}")
        if not np.isfinite(self.o):
            raise ConfigurationError(f"Planck constant o must be finite, got {self.o}")

    def to_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "b": self.b, "o": self.o, "f": self.f}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PlanckConstants":
        known = {k: float(v) for k, v in d.items() if k in ("r1", "r2", "b", "o", "f")}
        return cls(**known)


def _frozen(arr: np.ndarray) -> np.ndarray:
    """Non-writeable copy-on-demand so callers' arrays keep their flags."""
    if arr.flags.writeable or arr.base is not None:
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _as_uint16(counts) -> np.ndarray:
    arr = np.asarray(counts)
    if arr.ndim != 2:
        raise ConfigurationError(f"counts must be a 2-D raster, got shape {arr.shape}")
    if arr.dtype != np.uint16:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ConfigurationError(f"counts must be integer-typed, got {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > MAX_COUNT):
            raise RangeError("counts outside [0, 65535]")
        arr = arr.astype(np.uint16)
    return arr


@dataclass(frozen=True)
class RadiometricFrame:
    """One raw detector-count image plus its capture metadata."""

    counts: np.ndarray
    timestamp: datetime
    view_id: int = 0
    constants: PlanckConstants = field(default_factory=PlanckConstants)

    def __post_init__(self):
        counts = _as_uint16(self.counts)
        if counts.size == 0:
            raise EmptyInputError("frame has zero pixels")
        object.__setattr__(self, "counts", _frozen(counts))
        object.__setattr__(self, "timestamp", ensure_utc(self.timestamp))

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def shape(self):
        return self.counts.shape


@dataclass(frozen=True)
class TemperatureField:
    """Per-pixel temperatures in kelvin with a validity raster.

    Pixels where the conversion failed (saturated or out-of-domain counts)
    are NaN and flagged invalid instead of failing the whole frame.
    """

    kelvin: np.ndarray
    valid: np.ndarray
    emissivity_corrected: bool = False

    def __post_init__(self):
        kelvin = np.asarray(self.kelvin, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if kelvin.ndim != 2:
            raise ConfigurationError(f"kelvin must be a 2-D raster, got shape {kelvin.shape}")
        if kelvin.shape != valid.shape:
            raise DimensionMismatchError(
                f"kelvin {kelvin.shape} and validity {valid.shape} shapes differ"
            )
        if kelvin.size == 0:
            raise EmptyInputError("temperature field has zero pixels")
        ok = kelvin[valid]
        if ok.size and not (np.isfinite(ok).all() and (ok > 0).all()):
            raise RangeError("valid pixels must be finite and > 0 K")
        object.__setattr__(self, "kelvin", _frozen(kelvin))
        object.__setattr__(self, "valid", _frozen(valid))

    @property
    def height(self) -> int:
        return self.kelvin.shape[0]

    @property
    def width(self) -> int:
        return self.kelvin.shape[1]

    @property
    def shape(self):
        return self.kelvin.shape

    @classmethod
    def from_kelvin(cls, kelvin, emissivity_corrected: bool = False) -> "TemperatureField":
        kelvin = np.asarray(kelvin, dtype=np.float64)
        return cls(kelvin, np.isfinite(kelvin) & (kelvin > 0), emissivity_corrected)


@dataclass(frozen=True)
class EmissivityTable:
    """Per-class emissivity in (0, 1]; every taxonomy class must have an entry."""

    values: Mapping[int, float]

    def __post_init__(self):
        vals = dict(self.values)
        for class_id in maskcore.ALL_CLASSES:
            if class_id not in vals:
                raise ConfigurationError(
                    f"emissivity table lacks class {class_id} ({maskcore.class_name(class_id)})"
                )
        for class_id, eps in vals.items():
            if not (np.isfinite(eps) and 0.0 < eps <= 1.0):
                raise ConfigurationError(
                    f"emissivity for class {class_id} must be in (0, 1], got {eps}"
                )
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls) -> "EmissivityTable":
        return cls(dict(DEFAULT_EMISSIVITIES))

    def as_array(self) -> np.ndarray:
        return np.array([self.values[c] for c in maskcore.ALL_CLASSES], dtype=np.float64)

    def to_dict(self) -> dict:
        return {str(c): self.values[c] for c in maskcore.ALL_CLASSES}

    @classmethod
    def from_dict(cls, d: Mapping) -> "EmissivityTable":
        return cls({int(k): float(v) for k, v in d.items()})


def counts_to_temperature(frame: RadiometricFrame) -> TemperatureField:
    """Invert the calibration model per pixel.

    Pixels whose logarithm argument is <= 1 or non-finite (counts at or
    below the -O offset with the default constants) are marked invalid;
    the rest of the frame converts normally.
    """
    c = frame.constants
    u = frame.counts.astype(np.float64)
    denom = c.r2 * (u + c.o)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        arg = c.r1 / denom + c.f
        valid = np.isfinite(arg) & (arg > 1.0)
        kelvin = np.where(valid, c.b / np.log(np.where(valid, arg, np.e)), np.nan)
    return TemperatureField(kelvin, valid, emissivity_corrected=False)


def forward_model(
    field: TemperatureField,
    constants: PlanckConstants | None = None,
    *,
    timestamp: datetime | None = None,
    view_id: int = 0,
    clamp: bool = False,
) -> RadiometricFrame:
    """Map temperatures back to detector counts (inverse of the conversion).

    Counts are rounded to the nearest integer. Temperatures that map
    outside [0, 65535] raise RangeError identifying the first offending
    pixel; with ``clamp=True`` they are clamped instead and the clamp
    count is reported as a warning.
    """
    constants = constants or PlanckConstants()
    if not field.valid.all():
        bad = np.argwhere(~field.valid)[0]
        raise RangeError(
            f"forward model requires a fully valid field; pixel (y={bad[0]}, x={bad[1]}) is invalid",
            pixel=(int(bad[0]), int(bad[1])),
        )
    t = field.kelvin
    with np.errstate(over="ignore"):
        u_real = constants.r1 / (constants.r2 * (np.exp(constants.b / t) - constants.f)) - constants.o
    u = np.rint(u_real)
    out_of_range = (u < 0) | (u > MAX_COUNT) | ~np.isfinite(u)
    if out_of_range.any():
        n = int(out_of_range.sum())
        if not clamp:
            bad = np.argwhere(out_of_range)[0]
            y, x = int(bad[0]), int(bad[1])
            raise RangeError(
                f"{n} pixel(s) map outside [0, {MAX_COUNT}] counts; first at "
                f"(y={y}, x={x}): T={t[y, x]:.3f} K -> {u_real[y, x]:.1f}",
                pixel=(y, x),
            )
        warnings.warn(f"forward model clamped {n} pixel(s) to [0, {MAX_COUNT}]", stacklevel=2)
        u = np.clip(u, 0, MAX_COUNT)
    return RadiometricFrame(
        u.astype(np.uint16),
        timestamp=timestamp if timestamp is not None else _EPOCH,
        view_id=view_id,
        constants=constants,
    )


def correct_emissivity(
    field: TemperatureField, mask: "maskcore.LabelMask", table: EmissivityTable | None = None
) -> TemperatureField:
    """Divide each pixel by the fourth root of its class emissivity.

    The mask assigns every pixel a surface class; the table supplies one
    epsilon per class (the default table keeps background and sky at 1.0,
    i.e. untouched). Correcting twice is refused.
    """
    if field.emissivity_corrected:
        raise StateError("temperature field is already emissivity-corrected")
    if table is None:
        table = EmissivityTable.default()
    if mask.shape != field.shape:
        raise DimensionMismatchError(
            f"mask {mask.shape} does not match field {field.shape}"
        )
    # fourth-root the six table entries, not the full frame
    eps4 = table.as_array() ** 0.25
    kelvin = field.kelvin / eps4[mask.classes]
    kelvin = np.where(field.valid, kelvin, np.nan)
    return TemperatureField(kelvin, field.valid, emissivity_corrected=True)


def with_constants(frame: RadiometricFrame, constants: PlanckConstants) -> RadiometricFrame:
    """Copy of the frame with different calibration constants."""
    return replace(frame, constants=constants)
