"""Dataset bridge: catalog manifest, split logic, raster I/O, model input prep.

This package deliberately never imports the analysis toolkit. The contract
is the files: ``catalog.json`` written by ``urbantherm catalog``, 16-bit
binary PGM (or PNG) frames, and 8-bit palette-indexed PNG label masks.
Everything in here reads or writes those formats directly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

from .errors import DataError
from .spec import TrainSpec

logger = logging.getLogger(__name__)

MANIFEST_NAME = "catalog.json"
TAXONOMY_VERSION = "urban-6class-1"
NUM_CLASSES = 6
CLASS_NAMES = ("background", "building", "vegetation", "road", "sky", "offshore")

# mask file-format contract: 8-bit indexed PNG whose first six palette
# entries are exactly these colors, padded with zeros to 256 entries
PALETTE = (
    (0, 0, 0),
    (0, 255, 0),
    (0, 255, 255),
    (0, 0, 255),
    (255, 0, 0),
    (255, 192, 203),
)

MIN_STRATUM = 5


@dataclass(frozen=True)
class FrameItem:
    """One labeled frame out of the catalog manifest."""

    view: int
    timestamp: str
    frame: str   # path relative to the dataset root
    mask: str

    def to_dict(self) -> dict:
        return {"view": self.view, "timestamp": self.timestamp,
                "frame": self.frame, "mask": self.mask}

    @classmethod
    def from_dict(cls, d: dict) -> "FrameItem":
        return cls(int(d["view"]), d["timestamp"], d["frame"], d["mask"])


def read_manifest(root) -> list:
    """Labeled entries from ``<root>/catalog.json``, in manifest order.

    Entries without a ground-truth mask are skipped (nothing to train on).
    """
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise DataError(
            f"no {MANIFEST_NAME} under {root}; run `urbantherm catalog {root}` first"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataError(f"unreadable manifest {path}: {exc}") from exc
    version = doc.get("taxonomy_version")
    if version != TAXONOMY_VERSION:
        raise DataError(
            f"manifest taxonomy {version!r} is not the supported {TAXONOMY_VERSION!r}"
        )
    items = []
    for e in doc.get("entries", ()):
        if not e.get("mask"):
            continue
        items.append(FrameItem(int(e["view"]), e["timestamp"], e["frame"], e["mask"]))
    if not items:
        raise DataError(f"manifest {path} lists no frames with ground-truth masks")
    return items


# -- train/val/test split -------------------------------------------------------

@dataclass(frozen=True)
class SplitManifests:
    train: tuple
    val: tuple
    test: tuple

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "val", tuple(self.val))
        object.__setattr__(self, "test", tuple(self.test))

    def to_dict(self) -> dict:
        return {name: [i.to_dict() for i in getattr(self, name)]
                for name in ("train", "val", "test")}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitManifests":
        return cls(*[tuple(FrameItem.from_dict(i) for i in d[name])
                     for name in ("train", "val", "test")])


def _cut(items, rng, test_fraction, val_fraction):
    """Shuffle one stratum and cut test off the whole, val off the remainder."""
    order = rng.permutation(len(items))
    n_test = round(test_fraction * len(items))
    n_val = round(val_fraction * (len(items) - n_test))
    test = [items[i] for i in order[:n_test]]
    val = [items[i] for i in order[n_test:n_test + n_val]]
    train = [items[i] for i in order[n_test + n_val:]]
    return train, val, test


def split(items, spec: TrainSpec) -> SplitManifests:
    """Deterministic seeded split, stratified by view.

    Each view is cut separately so every view contributes to every subset
    in the spec's proportions (within one image). A view with fewer than
    five images makes per-stratum ratios meaningless; in that case the
    whole set is pooled and split globally, with a warning.
    """
    items = list(items)
    if not items:
        raise DataError("nothing to split: the item list is empty")
    by_view: dict = {}
    for item in items:
        by_view.setdefault(item.view, []).append(item)

    thin = sorted(v for v, members in by_view.items() if len(members) < MIN_STRATUM)
    if thin:
        logger.warning(
            "view(s) %s have fewer than %d images; falling back to a global split",
            ", ".join(map(str, thin)), MIN_STRATUM,
        )
        rng = np.random.default_rng(spec.seed)
        train, val, test = _cut(items, rng, spec.test_fraction, spec.val_fraction)
    else:
        train, val, test = [], [], []
        for view in sorted(by_view):
            rng = np.random.default_rng([spec.seed, view])
            tr, va, te = _cut(by_view[view], rng, spec.test_fraction, spec.val_fraction)
            train += tr
            val += va
            test += te

    def key(i):
        return (i.view, i.timestamp)

    return SplitManifests(sorted(train, key=key), sorted(val, key=key),
                          sorted(test, key=key))


def write_split(manifests: SplitManifests, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifests.to_dict(), fh, indent=2)
        fh.write("\n")
    return path


def read_split(path) -> SplitManifests:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return SplitManifests.from_dict(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"unreadable split manifest {path}: {exc}") from exc


# -- raster I/O -----------------------------------------------------------------

def read_frame(path) -> np.ndarray:
    """A 16-bit radiometric frame as float32, shape (H, W).

    Binary PGM (P5) is parsed directly; anything else goes through PIL.
    """
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        data = path.read_bytes()
        if not data.startswith(b"P5"):
            raise DataError(f"{path} is not a binary PGM")
        fields = []
        pos = 2
        while len(fields) < 3 and pos < len(data):
            while pos < len(data) and data[pos:pos + 1].isspace():
                pos += 1
            if data[pos:pos + 1] == b"#":        # comment line
                pos = data.index(b"\n", pos) + 1
                continue
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            fields.append(data[start:pos])
        try:
            width, height, maxval = (int(f) for f in fields)
        except ValueError as exc:
            raise DataError(f"bad PGM header in {path}") from exc
        pos += 1                                 # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = width * height * dtype.itemsize
        body = data[pos:pos + expected]
        if len(body) != expected:
            raise DataError(f"{path}: truncated pixel data")
        arr = np.frombuffer(body, dtype=dtype).reshape(height, width)
    else:
        try:
            with Image.open(path) as im:
                arr = np.asarray(im)
        except Exception as exc:
            raise DataError(f"cannot read frame {path}: {exc}") from exc
        if arr.ndim != 2:
            raise DataError(f"{path}: expected a single-channel frame, got shape {arr.shape}")
    return arr.astype(np.float32)


def read_mask_png(path) -> np.ndarray:
    """Label mask as uint8 (H, W); every value must be a taxonomy index."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode not in ("P", "L"):
                raise DataError(f"{path}: mask must be indexed or grayscale, got {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"cannot read mask {path}: {exc}") from exc
    if arr.max(initial=0) >= NUM_CLASSES:
        raise DataError(f"{path}: class index {int(arr.max())} outside the 6-class taxonomy")
    return arr


def write_mask_png(classes: np.ndarray, path) -> None:
    """Write class indices as 8-bit indexed PNG with the taxonomy palette."""
    classes = np.asarray(classes)
    if classes.ndim != 2 or classes.dtype != np.uint8:
        raise DataError(f"mask writer needs 2-D uint8, got {classes.dtype} {classes.shape}")
    if classes.max(initial=0) >= NUM_CLASSES:
        raise DataError(f"class index {int(classes.max())} outside the 6-class taxonomy")
    im = Image.fromarray(classes, mode="P")
    flat = [v for rgb in PALETTE for v in rgb]
    im.putpalette(flat + [0] * (768 - len(flat)))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    im.save(Path(path), format="PNG")


# -- model input preparation ----------------------------------------------------

def frame_to_input(frame: np.ndarray, spec: TrainSpec) -> np.ndarray:
    """(H, W) counts -> (3, H, W) float32 ready for a pretrained backbone.

    Per-frame min-max to [0, 1] (the raw count range varies per camera and
    scene), replicated to three channels, then normalized with the spec's
    mean/std.
    """
    frame = np.asarray(frame, dtype=np.float32)
    lo = float(frame.min())
    hi = float(frame.max())
    scaled = (frame - lo) / (hi - lo) if hi > lo else np.zeros_like(frame)
    normed = (scaled - spec.norm_mean) / spec.norm_std
    return np.repeat(normed[None, :, :], 3, axis=0)


class SegDataset(Dataset):
    """(input tensor, label tensor) pairs for a list of FrameItems."""

    def __init__(self, root, items, spec: TrainSpec):
        self.root = Path(root)
        self.items = list(items)
        self.spec = spec

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        item = self.items[i]
        frame = read_frame(self.root / item.frame)
        mask = read_mask_png(self.root / item.mask)
        if frame.shape != mask.shape:
            raise DataError(
                f"{item.frame}: frame {frame.shape} and mask {mask.shape} disagree"
            )
        x = torch.from_numpy(frame_to_input(frame, self.spec))
        y = torch.from_numpy(mask.astype(np.int64))
        return x, y


def pad_to_multiple(x: torch.Tensor, multiple: int = 32):
    """Pad (B, C, H, W) on the bottom/right so H and W divide ``multiple``.

    Returns (padded, (H, W)) so logits can be cropped back. Reflection
    padding, unless the image is smaller than the pad (reflection needs
    pad < dim), in which case edge replication is used.
    """
    h, w = x.shape[-2:]
    pad_h = (multiple - h % multiple) % multiple
    pad_w = (multiple - w % multiple) % multiple
    if pad_h == 0 and pad_w == 0:
        return x, (h, w)
    mode = "reflect" if pad_h < h and pad_w < w else "replicate"
    return torch.nn.functional.pad(x, (0, pad_w, 0, pad_h), mode=mode), (h, w)


def crop_to(x: torch.Tensor, size) -> torch.Tensor:
    h, w = size
    return x[..., :h, :w]
