"""Shared fixtures: synthetic catalogs generated through the urbantherm CLI.

The trainer only ever sees the files — catalog.json, PGM frames, indexed
PNG masks — exactly as a real deployment would.
"""

import json
import subprocess
import sys

import pytest
import torch

torch.set_num_threads(1)

BACKGROUND, BUILDING, VEGETATION, ROAD = 0, 1, 2, 3

# one diurnal model per class, shared phase: pairwise gaps never close,
# so scenes stay near-separable at any hour
THERMAL = {
    str(BACKGROUND): {"base_kelvin": 286.0, "amplitude": 1.0, "peak_hour": 15.0},
    str(BUILDING): {"base_kelvin": 303.0, "amplitude": 3.0, "peak_hour": 15.0},
    str(VEGETATION): {"base_kelvin": 294.0, "amplitude": 2.0, "peak_hour": 15.0},
    str(ROAD): {"base_kelvin": 313.0, "amplitude": 4.0, "peak_hour": 15.0},
}

# four distinct 96x64 arrangements so the models see layout variety
LAYOUTS = {
    1: [[BUILDING, [8, 8, 40, 40]], [VEGETATION, [56, 12, 32, 36]],
        [ROAD, [0, 52, 96, 12]]],
    2: [[VEGETATION, [4, 4, 36, 28]], [BUILDING, [48, 4, 40, 28]],
        [ROAD, [0, 40, 96, 14]]],
    3: [[BUILDING, [4, 6, 28, 46]], [BUILDING, [64, 6, 28, 46]],
        [VEGETATION, [36, 10, 24, 30]], [ROAD, [0, 56, 96, 8]]],
    4: [[ROAD, [40, 0, 16, 64]], [BUILDING, [4, 8, 30, 40]],
        [VEGETATION, [62, 30, 30, 30]]],
}


def urbantherm(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "urbantherm.cli", *map(str, argv)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def scene_spec(view, width=96, height=64, noise=0.4):
    # layouts are authored on the 96x64 canvas; scale for other sizes
    sx, sy = width / 96.0, height / 64.0
    layout = [[c, [int(x * sx), int(y * sy), max(1, int(w * sx)), max(1, int(h * sy))]]
              for c, (x, y, w, h) in LAYOUTS[view]]
    return {
        "width": width,
        "height": height,
        "layout": layout,
        "thermal": THERMAL,
        "noise_sigma": noise,
        "seed": 100 + view,
        "view_id": view,
        "timezone": "UTC",
    }


def synth_views(root, views, frames_per_view, **spec_kwargs):
    """Generate one catalog with several views; returns the root."""
    root.mkdir(parents=True, exist_ok=True)
    for view in views:
        spec_path = root / f"spec-view{view}.json"
        spec_path.write_text(json.dumps(scene_spec(view, **spec_kwargs)))
        urbantherm("synth", "--out", root, "--spec", spec_path,
                   "--frames", frames_per_view)
        spec_path.unlink()       # not part of the dataset
    return root


@pytest.fixture(scope="session")
def small_catalog(tmp_path_factory):
    """2 views x 10 frames at 64x48 — enough for split/data/CLI tests."""
    root = tmp_path_factory.mktemp("small") / "scenes"
    return synth_views(root, views=(1, 2), frames_per_view=10,
                       width=64, height=48)


@pytest.fixture(scope="session")
def protocol_catalog(tmp_path_factory):
    """The 200-image set (4 views x 50 frames, 96x64) for the training run."""
    root = tmp_path_factory.mktemp("protocol") / "scenes"
    return synth_views(root, views=(1, 2, 3, 4), frames_per_view=50)
