"""mIoU scoring through the urbantherm CLI.

The metric has exactly one implementation — the analysis toolkit's. This
module never computes IoU itself: predicted masks go to disk, the toolkit's
``eval --list --json`` scores them, and the numbers come back verbatim.
"""

from __future__ import annotations

import csv
import json
import os
import shlex
import subprocess
import sys
from pathlib import Path

from .errors import ScoringError

# override when the toolkit is not importable by this interpreter,
# e.g. SEGTRAINER_URBANTHERM_CLI="/opt/tools/bin/urbantherm"
ENV_OVERRIDE = "SEGTRAINER_URBANTHERM_CLI"


def scorer_command() -> list:
    override = os.environ.get(ENV_OVERRIDE)
    if override:
        return shlex.split(override)
    return [sys.executable, "-m", "urbantherm.cli"]


def score_pairs(pairs, workdir) -> dict:
    """Score (gt_path, pred_path, view) triples as one batch.

    Returns the scorer's summary: overall_miou, per_view_miou,
    per_image_miou, n_images — all at full float precision.
    """
    pairs = list(pairs)
    if not pairs:
        raise ScoringError("nothing to score: empty pair list")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    listing = workdir / "pairs.csv"
    with open(listing, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "gt", "pred", "view"])
        for gt, pred, view in pairs:
            gt = Path(gt).resolve()
            writer.writerow([f"{view}/{gt.stem}", str(gt), str(Path(pred).resolve()), view])
    summary_path = workdir / "score.json"
    cmd = scorer_command() + ["eval", "--list", str(listing), "--json", str(summary_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        detail = proc.stderr.strip() or proc.stdout.strip() or "no output"
        raise ScoringError(f"scorer exited {proc.returncode}: {detail}")
    try:
        return json.loads(summary_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ScoringError(f"unreadable scorer summary {summary_path}: {exc}") from exc
