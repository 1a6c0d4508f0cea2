"""Six-class semantic label masks: representation, file I/O, rendering.

Class indices are fixed across the whole toolkit:

    0 background  1 building  2 vegetation  3 road  4 sky  5 offshore

Mask files are 8-bit indexed PNGs whose palette carries the display
colors (building green, vegetation cyan, road blue, sky red, offshore
pink, background black). Masks are immutable after construction and can
be shared freely across workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, EmptyInputError, FormatError
from .utils import round_half_up

logger = logging.getLogger(__name__)

BACKGROUND, BUILDING, VEGETATION, ROAD, SKY, OFFSHORE = range(6)
NUM_CLASSES = 6
ALL_CLASSES = tuple(range(NUM_CLASSES))

CLASS_NAMES = ("background", "building", "vegetation", "road", "sky", "offshore")

PALETTE = (
    (0, 0, 0),        # background: black
    (0, 255, 0),      # building: green
    (0, 255, 255),    # vegetation: cyan
    (0, 0, 255),      # road: blue
    (255, 0, 0),      # sky: red
    (255, 192, 203),  # offshore structures: pink
)


@dataclass(frozen=True)
class ClassTaxonomy:
    """Ordered class list with display colors."""

    names: tuple = CLASS_NAMES
    palette: tuple = PALETTE
    version: str = "urban-6class-1"

    def __post_init__(self):
        if len(self.names) != NUM_CLASSES or len(self.palette) != NUM_CLASSES:
            raise FormatError(f"taxonomy must define exactly {NUM_CLASSES} classes")

    def color(self, class_id: int):
        return self.palette[class_id]


TAXONOMY = ClassTaxonomy()


def class_name(class_id: int) -> str:
    return CLASS_NAMES[class_id]


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel class indices, uint8, every value < 6."""

    classes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.classes)
        if arr.ndim != 2:
            raise FormatError(f"mask must be a 2-D raster, got shape {arr.shape}")
        if arr.size == 0:
            raise EmptyInputError("mask has zero pixels")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise FormatError(f"mask values must be integers, got dtype {arr.dtype}")
            arr = arr.astype(np.uint8)
        bad = arr >= NUM_CLASSES
        if bad.any():
            y, x = np.argwhere(bad)[0]
            raise FormatError(
                f"class index {int(arr[y, x])} at (y={y}, x={x}) exceeds taxonomy "
                f"bound {NUM_CLASSES - 1}",
                pixel=(int(y), int(x)),
            )
        arr = arr.copy() if arr.base is not None or arr.flags.writeable else arr
        arr.setflags(write=False)
        object.__setattr__(self, "classes", arr)

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def shape(self):
        return self.classes.shape


def _flat_palette() -> list:
    flat = [v for rgb in PALETTE for v in rgb]
    return flat + [0] * (768 - len(flat))


def write_mask(mask: LabelMask, path) -> None:
    """Save as 8-bit indexed PNG with the taxonomy palette embedded."""
    im = Image.fromarray(mask.classes, mode="P")
    im.putpalette(_flat_palette())
    im.save(Path(path), format="PNG")


def read_mask(path) -> LabelMask:
    """Read an indexed mask, rejecting out-of-taxonomy pixel values."""
    mask, _ = validate_mask_file(path)
    return mask


def validate_mask_file(path):
    """Read a mask and report format warnings without failing on them.

    Returns (mask, warnings). Hard failures (unreadable file, value out of
    range) raise FormatError; a missing or non-taxonomy palette is only a
    warning since the pixel indices alone are authoritative.
    """
    path = Path(path)
    problems = []
    try:
        im = Image.open(path)
        im.load()
    except Exception as exc:
        raise FormatError(f"cannot read mask {path}: {exc}", path=str(path)) from exc
    if im.mode not in ("P", "L"):
        raise FormatError(
            f"mask {path} must be 8-bit indexed or grayscale, got mode {im.mode}",
            path=str(path),
        )
    if im.mode != "P":
        problems.append(f"mask {path} is not palette-indexed (mode {im.mode})")
    else:
        pal = im.getpalette() or []
        expected = _flat_palette()[: NUM_CLASSES * 3]
        if list(pal[: NUM_CLASSES * 3]) != expected:
            problems.append(f"mask {path} palette differs from the taxonomy colors")
    arr = np.asarray(im, dtype=np.uint8)
    try:
        mask = LabelMask(arr)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}", path=str(path), pixel=exc.pixel) from exc
    for p in problems:
        logger.warning(p)
    return mask, problems


def class_pixel_sets(mask: LabelMask) -> dict:
    """Partition all pixel indices (row-major flat) by class.

    Every class appears as a key; absent classes map to empty arrays. The
    arrays are disjoint and together cover every pixel.
    """
    flat = mask.classes.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_classes = flat[order]
    bounds = np.searchsorted(sorted_classes, np.arange(NUM_CLASSES + 1))
    return {
        c: order[bounds[c] : bounds[c + 1]]
        for c in ALL_CLASSES
    }


def _to_gray(base) -> np.ndarray:
    """Render counts or temperatures to an 8-bit grayscale image."""
    if hasattr(base, "counts"):
        data = base.counts.astype(np.float64)
        finite = np.ones(data.shape, dtype=bool)
    elif hasattr(base, "kelvin"):
        data = base.kelvin
        finite = base.valid
    else:
        data = np.asarray(base, dtype=np.float64)
        finite = np.isfinite(data)
    if not finite.any():
        return np.zeros(data.shape, dtype=np.uint8)
    lo = data[finite].min()
    hi = data[finite].max()
    span = hi - lo if hi > lo else 1.0
    gray = np.zeros(data.shape, dtype=np.float64)
    gray[finite] = (data[finite] - lo) / span * 255.0
    return round_half_up(gray).astype(np.uint8)


def render_overlay(base, mask: LabelMask, alpha: float) -> np.ndarray:
    """Alpha-blend the class palette over a grayscale rendering.

    ``base`` may be a RadiometricFrame, TemperatureField, or bare 2-D
    array. Background pixels keep the plain grayscale value. Returns an
    (h, w, 3) uint8 image; blending uses round-half-up per channel.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    gray = _to_gray(base)
    if gray.shape != mask.shape:
        raise DimensionMismatchError(f"base {gray.shape} does not match mask {mask.shape}")
    palette = np.asarray(PALETTE, dtype=np.float64)[mask.classes]
    gray3 = np.repeat(gray[:, :, None].astype(np.float64), 3, axis=2)
    blended = round_half_up((1.0 - alpha) * gray3 + alpha * palette).astype(np.uint8)
    out = np.where((mask.classes == BACKGROUND)[:, :, None], gray3.astype(np.uint8), blended)
    return out


def write_overlay(image: np.ndarray, path) -> None:
    """Save an (h, w, 3) uint8 overlay as 24-bit PNG."""
    Image.fromarray(image, mode="RGB").save(Path(path), format="PNG")
