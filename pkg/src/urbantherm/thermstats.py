"""Per-feature temperature statistics and their aggregations.

Statistics are computed over the valid pixels of each mask class:
mean, lower-middle median, min, max, and population standard deviation
(a mask's pixels are the entire population of interest, not a sample).
Prediction-error records compare the same statistics extracted through
a predicted mask against the ground-truth mask. Diurnal profiles group
per-image means into time-of-day buckets and summarize each bucket with
box-plot quartiles.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, StateError
from .maskcore import ALL_CLASSES, CLASS_NAMES, LabelMask, class_name
from .radiometric import TemperatureField
from .utils import (
    kelvin_to_celsius,
    local_hour,
    lower_median,
    nearest_bucket,
    population_stats,
)

logger = logging.getLogger(__name__)

DEFAULT_BUCKET_HOURS = (0, 4, 8, 12, 16, 20)

STAT_NAMES = ("mean", "median", "min", "max", "std")


@dataclass(frozen=True)
class FeatureStats:
    """Temperature statistics of one class in one image (kelvin)."""

    class_id: int
    count: int
    mean: float
    median: float
    min: float
    max: float
    std: float
    timestamp: datetime | None = None
    view_id: int | None = None

    def statistic(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class StatErrorRecord:
    """Per-statistic (predicted - ground truth) deltas for one class.

    ``one_sided`` marks classes present in only one of the two
    extractions; their deltas are None.
    """

    class_id: int
    one_sided: bool
    d_mean: float | None
    d_median: float | None
    d_min: float | None
    d_max: float | None
    d_std: float | None
    image_id: str | None = None


def extract_stats(
    field: TemperatureField,
    mask: LabelMask,
    *,
    timestamp: datetime | None = None,
    view_id: int | None = None,
) -> list:
    """Statistics for every class with at least one valid pixel.

    Requires an emissivity-corrected field so numbers are comparable
    across features. Classes whose pixels are all invalid are skipped
    with a warning; classes absent from the mask produce no record.
    """
    if not field.emissivity_corrected:
        raise StateError("extract_stats requires an emissivity-corrected field")
    if mask.shape != field.shape:
        raise DimensionMismatchError(f"mask {mask.shape} does not match field {field.shape}")
    out = []
    for c in ALL_CLASSES:
        sel = mask.classes == c
        n_class = int(sel.sum())
        if n_class == 0:
            continue
        values = field.kelvin[sel & field.valid]
        if values.size == 0:
            logger.warning(
                "class %s: all %d pixels invalid; skipping", class_name(c), n_class
            )
            continue
        mean, std = population_stats(values)
        out.append(
            FeatureStats(
                class_id=c,
                count=int(values.size),
                mean=mean,
                median=lower_median(values),
                min=float(values.min()),
                max=float(values.max()),
                std=std,
                timestamp=timestamp,
                view_id=view_id,
            )
        )
    return out


def compare_masks(
    field: TemperatureField,
    gt: LabelMask,
    pred: LabelMask,
    *,
    image_id: str | None = None,
) -> list:
    """Per-class statistic deltas between predicted- and truth-mask extractions."""
    gt_stats = {s.class_id: s for s in extract_stats(field, gt)}
    pred_stats = {s.class_id: s for s in extract_stats(field, pred)}
    records = []
    for c in sorted(set(gt_stats) | set(pred_stats)):
        if c in gt_stats and c in pred_stats:
            g, p = gt_stats[c], pred_stats[c]
            records.append(
                StatErrorRecord(
                    class_id=c,
                    one_sided=False,
                    d_mean=p.mean - g.mean,
                    d_median=p.median - g.median,
                    d_min=p.min - g.min,
                    d_max=p.max - g.max,
                    d_std=p.std - g.std,
                    image_id=image_id,
                )
            )
        else:
            records.append(
                StatErrorRecord(c, True, None, None, None, None, None, image_id=image_id)
            )
    return records


@dataclass(frozen=True)
class BucketSummary:
    """Five-number summary of per-image mean temperatures in one bucket."""

    bucket_hour: float
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


def diurnal_profile(
    stats: Iterable[FeatureStats],
    class_id: int,
    bucket_hours: Sequence[float] = DEFAULT_BUCKET_HOURS,
    tz=timezone.utc,
) -> dict:
    """Group one class's per-image means into local-hour buckets.

    Assignment is nearest-bucket by circular hour distance with ties
    going to the earlier bucket, so 23:30 lands in the midnight bucket.
    Buckets that catch no images are omitted (with a warning). Returns
    {bucket_hour: BucketSummary}, box-plot ready.
    """
    records = [s for s in stats if s.class_id == class_id]
    if not records:
        raise EmptyInputError(f"no statistics for class {class_name(class_id)}")
    if len(set(bucket_hours)) != len(bucket_hours):
        raise ValueError("bucket hours must be distinct")
    buckets: dict = {b: [] for b in bucket_hours}
    for record in records:
        if record.timestamp is None:
            raise ValueError("diurnal_profile needs timestamped statistics")
        hour = local_hour(record.timestamp, tz)
        buckets[nearest_bucket(hour, bucket_hours)].append(record.mean)
    out = {}
    for b in bucket_hours:
        means = buckets[b]
        if not means:
            logger.warning("bucket %s h caught no images; omitted", b)
            continue
        q = np.percentile(np.sort(np.asarray(means)), [0, 25, 50, 75, 100])
        out[b] = BucketSummary(
            bucket_hour=b,
            count=len(means),
            min=float(q[0]),
            q1=float(q[1]),
            median=float(q[2]),
            q3=float(q[3]),
            max=float(q[4]),
        )
    return out


def write_stats_csv(rows, path) -> None:
    """``rows``: iterable of (image_id, stats). Celsius columns are derived here."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "image_id", "view", "timestamp", "class", "class_name", "count",
                "mean_K", "median_K", "min_K", "max_K", "std_K",
                "mean_C", "median_C", "min_C", "max_C", "std_C",
            ]
        )
        for image_id, s in rows:
            ts = s.timestamp.isoformat() if s.timestamp else ""
            writer.writerow(
                [
                    image_id,
                    "" if s.view_id is None else s.view_id,
                    ts,
                    s.class_id,
                    CLASS_NAMES[s.class_id],
                    s.count,
                ]
                + [f"{v:.6f}" for v in (s.mean, s.median, s.min, s.max, s.std)]
                + [
                    f"{float(kelvin_to_celsius(v)):.6f}"
                    for v in (s.mean, s.median, s.min, s.max)
                ]
                + [f"{s.std:.6f}"]
            )


def write_stat_errors_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "class", "class_name", "one_sided",
             "d_mean_K", "d_median_K", "d_min_K", "d_max_K", "d_std_K"]
        )
        for r in records:
            deltas = (r.d_mean, r.d_median, r.d_min, r.d_max, r.d_std)
            writer.writerow(
                [r.image_id or "", r.class_id, CLASS_NAMES[r.class_id], int(r.one_sided)]
                + ["" if d is None else f"{d:.6f}" for d in deltas]
            )


def diurnal_to_json(profiles: dict, path) -> None:
    """``profiles``: {class_id: {bucket: BucketSummary}} -> box-plot JSON."""
    doc = {
        class_name(c): {
            str(b): {
                "count": s.count, "min": s.min, "q1": s.q1,
                "median": s.median, "q3": s.q3, "max": s.max,
            }
            for b, s in sorted(buckets.items())
        }
        for c, buckets in sorted(profiles.items())
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
