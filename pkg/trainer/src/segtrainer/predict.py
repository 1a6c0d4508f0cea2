"""Inference and mask export in the catalog's file format."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import frame_to_input, read_frame, write_mask_png
from .errors import DataError
from .models import SegModel, build_model
from .spec import TrainSpec


def predict_array(model: SegModel, frame: np.ndarray, spec: TrainSpec,
                  device="cpu") -> np.ndarray:
    """Class indices (uint8, same H×W as the frame) for one raw frame."""
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.size == 0:
        raise DataError(f"frame must be a non-empty 2-D raster, got shape {frame.shape}")
    x = torch.from_numpy(frame_to_input(frame, spec))[None].to(device)
    model.eval()
    with torch.no_grad():
        logits = model(x)
    classes = logits.argmax(dim=1)[0].to(torch.uint8).cpu().numpy()
    if classes.shape != frame.shape:
        raise DataError(
            f"prediction shape {classes.shape} does not match input {frame.shape}"
        )
    return classes


def export_predictions(model: SegModel, spec: TrainSpec, root, items, out_dir,
                       device="cpu") -> list:
    """Predict every item, write indexed-PNG masks under ``out_dir``.

    Returns (gt_path, pred_path, view) triples ready for scoring. Masks are
    grouped by view to keep timestamp-named files from colliding.
    """
    root = Path(root)
    out_dir = Path(out_dir)
    pairs = []
    for item in items:
        frame = read_frame(root / item.frame)
        classes = predict_array(model, frame, spec, device)
        pred_path = out_dir / str(item.view) / f"{Path(item.frame).stem}.png"
        write_mask_png(classes, pred_path)
        pairs.append(((root / item.mask).resolve(), pred_path.resolve(), item.view))
    return pairs


def predict_files(model: SegModel, spec: TrainSpec, frame_paths, out_dir,
                  device="cpu") -> list:
    """Predict loose frame files; masks land at ``out_dir/<stem>.png``."""
    out_dir = Path(out_dir)
    written = []
    for path in frame_paths:
        path = Path(path)
        classes = predict_array(model, read_frame(path), spec, device)
        mask_path = out_dir / f"{path.stem}.png"
        write_mask_png(classes, mask_path)
        written.append(mask_path)
    return written


def load_checkpoint(path, device="cpu"):
    """(model, spec) from a checkpoint; never touches the network."""
    try:
        payload = torch.load(Path(path), map_location=device)
    except Exception as exc:
        raise DataError(f"cannot load checkpoint {path}: {exc}") from exc
    spec = TrainSpec.from_dict(payload["spec"])
    model = build_model(spec, pretrained=False)
    model.load_state_dict(payload["state_dict"])
    model.to(device)
    model.eval()
    return model, spec
