"""Raster and sidecar file I/O.

Radiometric frames travel as 16-bit single-channel rasters: binary
portable graymap (P5, maxval 65535) or 16-bit grayscale PNG. Each frame
may carry a JSON sidecar with its timestamp, view id, and optional
calibration-constant overrides. Temperature fields export as 32-bit
float TIFF (unit recorded in the image description) or CSV with the
unit declared in a header comment.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError
from .radiometric import PlanckConstants, TemperatureField
from .utils import ensure_utc, kelvin_to_celsius

_PGM_MAGIC = b"P5"


def _pgm_tokens(data: bytes, path):
    """Yield header tokens (magic, width, height, maxval), skipping comments."""
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"truncated PGM header in {path}", path=str(path))
        tokens.append(data[start:pos])
    return tokens, pos + 1  # single whitespace byte after maxval


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a uint16 array (8-bit files are widened)."""
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(_PGM_MAGIC):
        raise FormatError(f"{path} is not a binary PGM (bad magic)", path=str(path))
    tokens, offset = _pgm_tokens(data, path)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"non-numeric PGM header field in {path}", path=str(path)) from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: non-positive dimensions {width}x{height}", path=str(path))
    if not 0 < maxval <= 65535:
        raise FormatError(f"{path}: maxval {maxval} outside (0, 65535]", path=str(path))
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    body = data[offset : offset + expected]
    if len(body) != expected:
        raise FormatError(
            f"{path}: expected {expected} sample bytes for {width}x{height}, got {len(body)}",
            path=str(path),
        )
    arr = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16)


def write_pgm(counts: np.ndarray, path) -> None:
    """Write a uint16 array as binary PGM, maxval 65535, big-endian."""
    counts = np.asarray(counts)
    if counts.dtype != np.uint16 or counts.ndim != 2:
        raise FormatError(f"PGM writer needs a 2-D uint16 array, got {counts.dtype} {counts.shape}")
    h, w = counts.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + counts.astype(">u2").tobytes())


def read_counts(path) -> np.ndarray:
    """Read a 16-bit raster (PGM or PNG) into uint16."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)
    try:
        im = Image.open(path)
        im.load()
    except Exception as exc:
        raise FormatError(f"cannot read raster {path}: {exc}", path=str(path)) from exc
    arr = np.asarray(im)
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected single-channel raster, got shape {arr.shape}", path=str(path))
    if arr.dtype == np.uint16:
        return arr
    if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 65535:
        return arr.astype(np.uint16)
    raise FormatError(f"{path}: samples do not fit unsigned 16-bit", path=str(path))


def write_counts(counts: np.ndarray, path) -> None:
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        write_pgm(counts, path)
    else:
        Image.fromarray(np.ascontiguousarray(counts)).save(path, format="PNG")


def probe_raster(path) -> tuple:
    """Cheap header check; returns (width, height) or raises FormatError."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        data = path.read_bytes()
        if not data.startswith(_PGM_MAGIC):
            raise FormatError(f"{path} is not a binary PGM (bad magic)", path=str(path))
        tokens, offset = _pgm_tokens(data, path)
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        itemsize = 2 if maxval > 255 else 1
        if len(data) - offset != width * height * itemsize:
            raise FormatError(f"{path}: sample data length does not match header", path=str(path))
        return width, height
    try:
        with Image.open(path) as im:
            return im.size
    except Exception as exc:
        raise FormatError(f"cannot read raster header of {path}: {exc}", path=str(path)) from exc


# -- sidecar metadata ---------------------------------------------------------

def write_sidecar(path, timestamp: datetime, view_id: int, constants: PlanckConstants | None = None) -> None:
    doc = {"timestamp": ensure_utc(timestamp).isoformat(), "view_id": int(view_id)}
    if constants is not None:
        doc["constants"] = constants.to_dict()
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_sidecar(path) -> dict:
    """Parse a sidecar; returns keys timestamp/view_id/constants when present."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except Exception as exc:
        raise FormatError(f"unreadable sidecar {path}: {exc}", path=str(path)) from exc
    if not isinstance(doc, dict):
        raise FormatError(f"sidecar {path} is not a key-value document", path=str(path))
    out = {}
    if "timestamp" in doc:
        try:
            out["timestamp"] = ensure_utc(datetime.fromisoformat(doc["timestamp"]))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"sidecar {path}: bad timestamp {doc['timestamp']!r}", path=str(path)) from exc
    if "view_id" in doc:
        try:
            out["view_id"] = int(doc["view_id"])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"sidecar {path}: bad view_id {doc['view_id']!r}", path=str(path)) from exc
    if "constants" in doc:
        try:
            out["constants"] = PlanckConstants.from_dict(doc["constants"])
        except Exception as exc:
            raise FormatError(f"sidecar {path}: bad constants block: {exc}", path=str(path)) from exc
    return out


# -- temperature export -------------------------------------------------------

def write_temperature_tiff(field: TemperatureField, path, unit: str = "kelvin") -> None:
    """32-bit float raster; invalid pixels are NaN; unit goes in the header."""
    data = field.kelvin if unit == "kelvin" else kelvin_to_celsius(field.kelvin)
    data = np.where(field.valid, data, np.nan).astype(np.float32)
    Image.fromarray(data, mode="F").save(Path(path), format="TIFF", tiffinfo={270: f"unit={unit}"})


def write_temperature_csv(field: TemperatureField, path, unit: str = "kelvin") -> None:
    data = field.kelvin if unit == "kelvin" else kelvin_to_celsius(field.kelvin)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# unit: {unit}\n")
        fh.write(f"# invalid pixels: empty cells\n")
        writer = csv.writer(fh)
        for y in range(field.height):
            writer.writerow(
                ["" if not field.valid[y, x] else f"{data[y, x]:.4f}" for x in range(field.width)]
            )
