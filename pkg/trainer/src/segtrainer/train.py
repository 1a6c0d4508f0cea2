"""The training protocol, kept deliberately fixed.

Cross-entropy with equal class weights, Adam at a constant learning rate,
a set number of epochs; after every epoch the validation set is predicted,
exported as mask files, and scored by the urbantherm CLI. The curve written
per run is (epoch, train loss, val mIoU).
"""

from __future__ import annotations

import csv
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from . import scoring
from .data import SegDataset, SplitManifests
from .errors import DataError, TrainingDiverged
from .models import SegModel, build_model
from .predict import export_predictions
from .spec import TrainSpec

logger = logging.getLogger(__name__)

CURVES_NAME = "curves.csv"
CHECKPOINT_NAME = "checkpoint.pt"


@dataclass(frozen=True)
class TrainResult:
    model_dir: Path
    checkpoint: Path
    curves: Path
    history: tuple           # (epoch, train_loss, val_miou) per epoch
    final_val_miou: float


def save_checkpoint(model: SegModel, spec: TrainSpec, path) -> Path:
    """Write-temp-then-rename: a crash mid-save never leaves a torn file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "spec": spec.to_dict(),
        "num_classes": model.num_classes,
        "state_dict": model.state_dict(),
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_curves(history, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_miou"])
        for epoch, loss, miou in history:
            writer.writerow([epoch, repr(float(loss)), repr(float(miou))])
    return path


def read_curves(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(int(r["epoch"]), float(r["train_loss"]), float(r["val_miou"]))
                for r in csv.DictReader(fh)]


def evaluate(model: SegModel, spec: TrainSpec, root, items, out_dir) -> float:
    """Export predictions for ``items`` and return the toolkit's overall mIoU."""
    items = list(items)
    if not items:
        raise DataError("nothing to evaluate: empty item list")
    pairs = export_predictions(model, spec, root, items, out_dir)
    summary = scoring.score_pairs(pairs, Path(out_dir) / "scoring")
    return float(summary["overall_miou"])


def train(spec: TrainSpec, root, manifests: SplitManifests, out_root, *,
          device="cpu", pretrained: bool = True) -> TrainResult:
    """Run the full protocol; artifacts land under ``<out_root>/<model>/``.

    Loss going NaN/inf aborts immediately with the epoch, step, and recent
    loss values in the exception — a diverging run should die loudly, not
    export garbage masks.
    """
    if not manifests.train:
        raise DataError("training manifest is empty")
    if not manifests.val:
        raise DataError("validation manifest is empty")
    torch.manual_seed(spec.seed)
    model_dir = Path(out_root) / spec.model
    model_dir.mkdir(parents=True, exist_ok=True)

    model = build_model(spec, pretrained=pretrained).to(device)
    dataset = SegDataset(root, manifests.train, spec)
    generator = torch.Generator().manual_seed(spec.seed)
    loader = DataLoader(dataset, batch_size=spec.batch_size, shuffle=True,
                        generator=generator)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.lr)
    criterion = torch.nn.CrossEntropyLoss()

    history = []
    checkpoint = model_dir / CHECKPOINT_NAME
    for epoch in range(1, spec.epochs + 1):
        model.train()
        losses = []
        for step, (x, y) in enumerate(loader, start=1):
            optimizer.zero_grad()
            loss = criterion(model(x.to(device)), y.to(device))
            value = float(loss.detach())
            if not math.isfinite(value):
                raise TrainingDiverged(
                    f"loss became non-finite at epoch {epoch} step {step} "
                    f"(lr={spec.lr}, recent losses: "
                    f"{[round(v, 4) for v in losses[-5:]] or 'none'})",
                    epoch=epoch, step=step, last_losses=losses[-5:],
                )
            loss.backward()
            optimizer.step()
            losses.append(value)
        train_loss = float(np.mean(losses))
        val_miou = evaluate(model, spec, root, manifests.val,
                            model_dir / "val-masks")
        history.append((epoch, train_loss, val_miou))
        logger.info("epoch %d/%d: train loss %.4f, val mIoU %.4f",
                    epoch, spec.epochs, train_loss, val_miou)
        save_checkpoint(model, spec, checkpoint)

    curves = write_curves(history, model_dir / CURVES_NAME)
    return TrainResult(model_dir=model_dir, checkpoint=checkpoint, curves=curves,
                       history=tuple(history), final_val_miou=history[-1][2])
