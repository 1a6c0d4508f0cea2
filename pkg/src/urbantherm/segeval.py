"""Scoring predicted masks against ground truth.

Per class c the intersection-over-union is

    IoU_c = |gt == c  and  pred == c| / |gt == c  or  pred == c|

Classes absent from both masks are excluded from the mean rather than
counted as 0 or 1; the mean IoU divides by the number of classes that
actually appear (``k_effective``). Pixel accuracy counts every pixel,
background included.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResultError, DimensionMismatchError, EmptyInputError
from .maskcore import ALL_CLASSES, CLASS_NAMES, NUM_CLASSES, LabelMask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IoUReport:
    per_class_iou: dict       # class id -> float, or None when the class is absent
    miou: float
    pixel_accuracy: float
    confusion: np.ndarray     # (6, 6) int64; rows ground truth, columns prediction
    k_effective: int


@dataclass(frozen=True)
class BatchReport:
    reports: tuple            # one IoUReport per pair, input order
    per_view_miou: dict       # view id -> mean of that view's per-image mIoUs
    overall_miou: float       # unweighted mean of the per-view means


def confusion_matrix(gt: LabelMask, pred: LabelMask) -> np.ndarray:
    if gt.shape != pred.shape:
        raise DimensionMismatchError(f"gt {gt.shape} and pred {pred.shape} shapes differ")
    idx = gt.classes.ravel().astype(np.int64) * NUM_CLASSES + pred.classes.ravel()
    counts = np.bincount(idx, minlength=NUM_CLASSES * NUM_CLASSES)
    return counts.reshape(NUM_CLASSES, NUM_CLASSES)


def evaluate(gt: LabelMask, pred: LabelMask) -> IoUReport:
    """Score one predicted mask against its ground truth."""
    confusion = confusion_matrix(gt, pred)
    inter = np.diag(confusion).astype(np.float64)
    union = confusion.sum(axis=1) + confusion.sum(axis=0) - np.diag(confusion)
    present = union > 0
    k_effective = int(present.sum())
    if k_effective == 0:
        raise DegenerateResultError("no class present in either mask; mIoU undefined")
    iou = np.full(NUM_CLASSES, np.nan)
    iou[present] = inter[present] / union[present]
    per_class = {c: (float(iou[c]) if present[c] else None) for c in ALL_CLASSES}
    miou = float(iou[present].mean())
    accuracy = float(inter.sum() / confusion.sum())
    return IoUReport(per_class, miou, accuracy, confusion, k_effective)


def evaluate_batch(pairs, view_ids=None) -> BatchReport:
    """Score a batch and aggregate the way the per-view comparison tables do.

    ``pairs`` is a sequence of (gt, pred); ``view_ids`` an optional parallel
    sequence of view labels (one group when omitted). The overall mean is
    the unweighted mean of the per-view means, so small views count as much
    as large ones.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInputError("evaluate_batch needs at least one (gt, pred) pair")
    return aggregate_reports([evaluate(gt, pred) for gt, pred in pairs], view_ids)


def aggregate_reports(reports, view_ids=None) -> BatchReport:
    """Fold already-computed per-image reports into a BatchReport."""
    reports = tuple(reports)
    if not reports:
        raise EmptyInputError("need at least one report to aggregate")
    if view_ids is None:
        view_ids = [0] * len(reports)
    view_ids = list(view_ids)
    if len(view_ids) != len(reports):
        raise DimensionMismatchError(
            f"{len(reports)} reports but {len(view_ids)} view ids"
        )
    by_view: dict = {}
    for view, report in zip(view_ids, reports):
        by_view.setdefault(view, []).append(report.miou)
    per_view = {view: float(np.mean(mious)) for view, mious in sorted(by_view.items())}
    overall = float(np.mean(list(per_view.values())))
    return BatchReport(reports, per_view, overall)


def write_iou_csv(rows, path) -> None:
    """One row per image per class: utility export for report bundles.

    ``rows`` is an iterable of (image_id, view_id, model, report).
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "view", "model", "class", "class_name", "iou", "miou", "pixel_accuracy"]
        )
        for image_id, view_id, model, report in rows:
            for c in ALL_CLASSES:
                iou = report.per_class_iou[c]
                writer.writerow(
                    [
                        image_id,
                        view_id,
                        model,
                        c,
                        CLASS_NAMES[c],
                        "" if iou is None else f"{iou:.6f}",
                        f"{report.miou:.6f}",
                        f"{report.pixel_accuracy:.6f}",
                    ]
                )


def write_view_model_table(per_model: dict, path) -> None:
    """Summary table: one row per view, one column per model, plus a Mean row.

    ``per_model`` maps model name -> BatchReport. Views missing from a model
    leave an empty cell; the Mean row averages each model's per-view means.
    """
    models = sorted(per_model)
    views = sorted({v for rep in per_model.values() for v in rep.per_view_miou})
    if not views:
        logger.warning("no views to tabulate; skipping %s", path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["view"] + models)
        for view in views:
            row = [f"View {view}"]
            for model in models:
                miou = per_model[model].per_view_miou.get(view)
                row.append("" if miou is None else f"{miou:.4f}")
            writer.writerow(row)
        writer.writerow(["Mean"] + [f"{per_model[m].overall_miou:.4f}" for m in models])
