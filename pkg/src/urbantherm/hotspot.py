"""Hot and cool spots within a masked urban feature.

A pixel of a feature is hot when its temperature strictly exceeds the
feature's mean plus ``k_sigma`` standard deviations (k = 0 gives the
plain above-the-mean rule); everything else in the feature is cool, so
hot and cool always partition the feature's valid pixels. Connected
hot/cool components become boxed regions; stacks of maps from different
instants yield a per-pixel persistence fraction.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatchError, EmptyInputError, StateError
from .maskcore import LabelMask, class_name
from .radiometric import TemperatureField
from .utils import population_stats

logger = logging.getLogger(__name__)

DEFAULT_MIN_AREA = 25
DEFAULT_CONNECTIVITY = 4
DEFAULT_PERSISTENCE = 0.75

_STRUCTURES = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


@dataclass(frozen=True)
class HotspotMap:
    """Hot/cool partition of one feature at one instant.

    ``hot`` and ``cool`` are full-frame booleans restricted to the
    feature's valid pixels; ``kelvin`` keeps those pixels' temperatures
    (NaN elsewhere) so regions can report mean temperature later.
    """

    class_id: int
    threshold: float
    hot: np.ndarray
    cool: np.ndarray
    kelvin: np.ndarray
    k_sigma: float = 0.0
    timestamp: datetime | None = None
    view_id: int | None = None

    @property
    def shape(self):
        return self.hot.shape

    @property
    def feature(self) -> np.ndarray:
        return self.hot | self.cool


@dataclass(frozen=True)
class SpotRegion:
    """One connected hot or cool component."""

    pixels: np.ndarray        # flat row-major indices
    bbox: tuple               # (x, y, w, h), tight
    area: int
    mean_kelvin: float
    polarity: str             # "hot" | "cool"


def detect(
    field: TemperatureField,
    mask: LabelMask,
    class_id: int,
    k_sigma: float = 0.0,
    *,
    timestamp: datetime | None = None,
    view_id: int | None = None,
) -> HotspotMap:
    """Partition a feature's valid pixels at threshold mean + k_sigma * std."""
    if not field.emissivity_corrected:
        raise StateError("hotspot detection requires an emissivity-corrected field")
    if mask.shape != field.shape:
        raise DimensionMismatchError(f"mask {mask.shape} does not match field {field.shape}")
    sel = mask.classes == class_id
    if not sel.any():
        raise EmptyInputError(f"class {class_name(class_id)} has no pixels in this mask")
    sel &= field.valid
    if not sel.any():
        raise EmptyInputError(f"class {class_name(class_id)} has no valid pixels")
    mean, std = population_stats(field.kelvin[sel])
    threshold = mean + k_sigma * std
    hot = sel & (field.kelvin > threshold)
    cool = sel & ~hot
    kelvin = np.where(sel, field.kelvin, np.nan)
    return HotspotMap(
        class_id=class_id,
        threshold=float(threshold),
        hot=hot,
        cool=cool,
        kelvin=kelvin,
        k_sigma=k_sigma,
        timestamp=timestamp,
        view_id=view_id,
    )


def _components(selected: np.ndarray, kelvin: np.ndarray, polarity: str,
                min_area: int, structure: np.ndarray) -> list:
    regions = []
    # work inside the selection's bounding window: features cover a
    # fraction of the frame and labeling cost scales with raster size
    rows = selected.any(axis=1)
    if not rows.any():
        return regions
    cols = selected.any(axis=0)
    y0, y1 = np.flatnonzero(rows)[[0, -1]]
    x0, x1 = np.flatnonzero(cols)[[0, -1]]
    window = selected[y0:y1 + 1, x0:x1 + 1]
    labels, n = ndimage.label(window, structure=structure)
    if n == 0:
        return regions
    # filter on area before touching any component: noisy fields at k=0
    # produce thousands of sub-min_area specks
    flat_labels = labels.ravel()
    keep = np.bincount(flat_labels) >= min_area
    keep[0] = False
    if not keep.any():
        return regions
    idx = np.flatnonzero(keep[flat_labels])        # window raster order
    lab = flat_labels[idx]
    order = np.argsort(lab, kind="stable")         # grouped, raster order kept
    idx = idx[order]
    lab = lab[order]
    starts = np.flatnonzero(np.concatenate(([True], lab[1:] != lab[:-1])))
    ends = np.append(starts[1:], lab.size)
    ys = idx // window.shape[1] + y0
    xs = idx % window.shape[1] + x0
    width = selected.shape[1]
    flat = ys.astype(np.int64) * width + xs        # ascending within groups
    sums = np.add.reduceat(kelvin.ravel()[flat], starts)
    x_lo = np.minimum.reduceat(xs, starts)
    x_hi = np.maximum.reduceat(xs, starts)
    y_lo = np.minimum.reduceat(ys, starts)
    y_hi = np.maximum.reduceat(ys, starts)
    for k, (s, e) in enumerate(zip(starts, ends)):
        area = int(e - s)
        regions.append(
            SpotRegion(
                pixels=flat[s:e],
                bbox=(int(x_lo[k]), int(y_lo[k]),
                      int(x_hi[k] - x_lo[k] + 1), int(y_hi[k] - y_lo[k] + 1)),
                area=area,
                mean_kelvin=float(sums[k] / area),
                polarity=polarity,
            )
        )
    return regions


def regions(
    map: HotspotMap,
    min_area: int = DEFAULT_MIN_AREA,
    connectivity: int = DEFAULT_CONNECTIVITY,
    polarity: str = "both",
) -> list:
    """Connected components of the hot (and/or cool) set as boxed regions.

    Components smaller than ``min_area`` are dropped. The list is sorted
    by area descending; ties break by top-left raster order, so output is
    independent of labeling order.
    """
    if connectivity not in _STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    if polarity not in ("hot", "cool", "both"):
        raise ValueError(f"polarity must be 'hot', 'cool' or 'both', got {polarity!r}")
    structure = _STRUCTURES[connectivity]
    out = []
    if polarity in ("hot", "both"):
        out += _components(map.hot, map.kelvin, "hot", min_area, structure)
    if polarity in ("cool", "both"):
        out += _components(map.cool, map.kelvin, "cool", min_area, structure)
    out.sort(key=lambda r: (-r.area, int(r.pixels[0])))
    return out


@dataclass(frozen=True)
class PersistenceResult:
    """How often each pixel ran hot across a stack of maps."""

    persistence: np.ndarray   # fraction of maps in which the pixel was hot
    n_maps: int
    recurrent: np.ndarray     # flat indices hot in >= threshold fraction of maps
    threshold: float
    group_hot_area: dict      # group label -> total hot pixels over the group's maps


def longitudinal_compare(
    maps,
    *,
    group_by="month",
    persistence_threshold: float = DEFAULT_PERSISTENCE,
) -> PersistenceResult:
    """Stack maps of the same view/class and measure hot-spot persistence.

    ``group_by`` labels each map for the per-group hot-area totals:
    "month" (YYYY-MM), "hour" (local UTC hour), or a callable. All maps
    must share view, class, and dimensions.
    """
    maps = list(maps)
    if not maps:
        raise EmptyInputError("longitudinal_compare needs at least one map")
    first = maps[0]
    for m in maps[1:]:
        if m.shape != first.shape:
            raise DimensionMismatchError(f"map shape {m.shape} differs from {first.shape}")
        if m.class_id != first.class_id:
            raise ValueError(f"mixed classes: {m.class_id} vs {first.class_id}")
        if m.view_id != first.view_id:
            raise ValueError(f"mixed views: {m.view_id} vs {first.view_id}")

    if callable(group_by):
        key = group_by
    elif group_by == "month":
        key = lambda m: m.timestamp.strftime("%Y-%m") if m.timestamp else "unknown"
    elif group_by == "hour":
        key = lambda m: m.timestamp.hour if m.timestamp else "unknown"
    else:
        raise ValueError(f"group_by must be 'month', 'hour' or callable, got {group_by!r}")

    stack = np.stack([m.hot for m in maps])
    persistence = stack.mean(axis=0)
    recurrent = np.flatnonzero(persistence.ravel() >= persistence_threshold)
    group_hot_area: dict = {}
    for m in maps:
        g = key(m)
        group_hot_area[g] = group_hot_area.get(g, 0) + int(m.hot.sum())
    return PersistenceResult(
        persistence=persistence,
        n_maps=len(maps),
        recurrent=recurrent,
        threshold=persistence_threshold,
        group_hot_area=dict(sorted(group_hot_area.items(), key=lambda kv: str(kv[0]))),
    )


# -- exports -------------------------------------------------------------------

def spot_raster(map: HotspotMap) -> np.ndarray:
    """8-bit raster: 255 hot, 0 cool, 128 outside the feature or invalid."""
    out = np.full(map.shape, 128, dtype=np.uint8)
    out[map.cool] = 0
    out[map.hot] = 255
    return out


def regions_to_json(region_list, path=None):
    doc = [
        {
            "polarity": r.polarity,
            "bbox": {"x": r.bbox[0], "y": r.bbox[1], "w": r.bbox[2], "h": r.bbox[3]},
            "area": r.area,
            "mean_K": round(r.mean_kelvin, 6),
        }
        for r in region_list
    ]
    if path is None:
        return doc
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def draw_boxes(image: np.ndarray, region_list, thickness: int = 1) -> np.ndarray:
    """Annotate an (h, w, 3) image with region boxes: hot red, cool blue."""
    out = image.copy()
    colors = {"hot": (255, 0, 0), "cool": (0, 0, 255)}
    h, w = out.shape[:2]
    for r in region_list:
        x, y, bw, bh = r.bbox
        color = colors[r.polarity]
        x1, y1 = min(x + bw - 1, w - 1), min(y + bh - 1, h - 1)
        for t in range(thickness):
            xt0, yt0 = max(x - t, 0), max(y - t, 0)
            xt1, yt1 = min(x1 + t, w - 1), min(y1 + t, h - 1)
            out[yt0, xt0 : xt1 + 1] = color
            out[yt1, xt0 : xt1 + 1] = color
            out[yt0 : yt1 + 1, xt0] = color
            out[yt0 : yt1 + 1, xt1] = color
    return out
