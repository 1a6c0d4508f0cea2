"""Dataset catalog and deterministic batch analysis.

A longitudinal dataset lives on disk as

    <root>/<view_id>/<YYYYMMDD-HHMMSS>.pgm            raw counts (or .png)
    <root>/<view_id>/<YYYYMMDD-HHMMSS>.mask.png      ground-truth mask
    <root>/<view_id>/<YYYYMMDD-HHMMSS>.pred-<m>.png  predicted mask of model m
    <root>/<view_id>/<YYYYMMDD-HHMMSS>.meta.json     optional sidecar

Filenames are the source of truth for view and timestamp; sidecars may
override both and may carry per-frame calibration constants. Catalog
construction quarantines malformed files with a reason instead of
dropping them, and analysis isolates per-frame failures so one bad
frame never aborts a months-long batch. For a fixed catalog and config
the report bundle is byte-identical regardless of worker count.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image

from . import hotspot, rasters, segeval, thermstats
from .errors import (
    CatalogError,
    ConfigurationError,
    EmptyInputError,
    FormatError,
    UrbanthermError,
)
from .maskcore import (
    ALL_CLASSES,
    BACKGROUND,
    TAXONOMY,
    class_name,
    validate_mask_file,
)
from .radiometric import (
    EmissivityTable,
    PlanckConstants,
    RadiometricFrame,
    correct_emissivity,
    counts_to_temperature,
)
from .utils import ensure_utc, format_stamp, parse_stamp, parse_timezone

logger = logging.getLogger(__name__)

FRAME_SUFFIX = ".pgm"
FRAME_SUFFIXES = (".pgm", ".pnm", ".png")
MASK_SUFFIX = ".mask.png"
SIDECAR_SUFFIX = ".meta.json"
MANIFEST_NAME = "catalog.json"

_STAMP = r"\d{8}-\d{6}"
_FRAME_RE = re.compile(rf"^({_STAMP})(\.pgm|\.pnm|\.png)$")
_MASK_RE = re.compile(rf"^({_STAMP})\.mask\.png$")
_PRED_RE = re.compile(rf"^({_STAMP})\.pred-([A-Za-z0-9][A-Za-z0-9_+~-]*)\.png$")
_SIDECAR_RE = re.compile(rf"^({_STAMP})\.meta\.json$")


def pred_suffix(model: str) -> str:
    if not re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_+~-]*", model):
        raise ConfigurationError(f"model name {model!r} not usable in filenames")
    return f".pred-{model}.png"


@dataclass(frozen=True)
class QuarantineRecord:
    path: str                 # relative to the catalog root
    reason: str


@dataclass(frozen=True)
class CatalogEntry:
    """One frame with whatever companions were found next to it."""

    view_id: int
    timestamp: datetime       # UTC
    frame_path: Path
    width: int
    height: int
    mask_path: Path | None = None
    pred_paths: Mapping[str, Path] = field(default_factory=dict)
    sidecar_path: Path | None = None
    constants: PlanckConstants | None = None

    @property
    def has_constants_override(self) -> bool:
        return self.constants is not None

    @property
    def image_id(self) -> str:
        return f"{self.view_id}/{format_stamp(self.timestamp)}"


@dataclass(frozen=True)
class Catalog:
    root: Path
    entries: tuple
    quarantine: tuple

    def __len__(self):
        return len(self.entries)

    @property
    def discovered(self) -> int:
        return len(self.entries) + len(self.quarantine)

    def views(self) -> list:
        return sorted({e.view_id for e in self.entries})

    def model_names(self) -> list:
        return sorted({m for e in self.entries for m in e.pred_paths})

    def select(self, views=None, start=None, end=None) -> "Catalog":
        """Restrict to views and a closed UTC time range; quarantine is kept."""
        wanted = None if views is None else {int(v) for v in views}
        picked = []
        for e in self.entries:
            if wanted is not None and e.view_id not in wanted:
                continue
            if start is not None and e.timestamp < ensure_utc(start):
                continue
            if end is not None and e.timestamp > ensure_utc(end):
                continue
            picked.append(e)
        return Catalog(self.root, tuple(picked), self.quarantine)

    def stratified_sample(self, per_stratum: int, seed: int = 0) -> "Catalog":
        """At most ``per_stratum`` frames from each (view, UTC day) stratum.

        Deterministic for a seed; frames keep catalog order. This is a
        generic downsampling filter for large longitudinal archives; the
        exact strata proportions of any published dataset are a property
        of that dataset, not of this tool.
        """
        if per_stratum < 1:
            raise ConfigurationError(f"per_stratum must be >= 1, got {per_stratum}")
        strata: dict = {}
        for i, e in enumerate(self.entries):
            strata.setdefault((e.view_id, e.timestamp.date()), []).append(i)
        rng = np.random.default_rng(seed)
        keep: list = []
        for key in sorted(strata):
            members = strata[key]
            if len(members) <= per_stratum:
                keep += members
            else:
                keep += sorted(rng.choice(members, size=per_stratum, replace=False).tolist())
        return Catalog(self.root, tuple(self.entries[i] for i in sorted(keep)), self.quarantine)

    def to_dict(self) -> dict:
        def rel(p):
            return None if p is None else Path(p).relative_to(self.root).as_posix()

        return {
            "taxonomy_version": TAXONOMY.version,
            "entry_count": len(self.entries),
            "entries": [
                {
                    "view": e.view_id,
                    "timestamp": e.timestamp.isoformat(),
                    "frame": rel(e.frame_path),
                    "width": e.width,
                    "height": e.height,
                    "mask": rel(e.mask_path),
                    "predictions": {m: rel(p) for m, p in sorted(e.pred_paths.items())},
                    "sidecar": rel(e.sidecar_path),
                    "constants_override": e.has_constants_override,
                }
                for e in self.entries
            ],
            "quarantine": [{"path": q.path, "reason": q.reason} for q in self.quarantine],
        }

    def write_manifest(self, path=None) -> Path:
        path = Path(path) if path else self.root / MANIFEST_NAME
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def build_catalog(root, *, write_manifest: bool = True) -> Catalog:
    """Scan a dataset root, quarantining malformed files with a reason.

    Raises CatalogError for a missing root or a duplicate (view,
    timestamp); an existing-but-empty root is an empty catalog plus a
    warning, so routine automation over a not-yet-filled drop directory
    does not die.
    """
    root = Path(root)
    if not root.is_dir():
        raise CatalogError(f"catalog root {root} is not a directory")
    entries: list = []
    quarantine: list = []
    seen: dict = {}

    def bad(path: Path, reason: str):
        quarantine.append(QuarantineRecord(path.relative_to(root).as_posix(), reason))

    for view_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            view_from_name = int(view_dir.name)
        except ValueError:
            logger.warning("ignoring non-view directory %s", view_dir.name)
            continue
        frames: dict = {}
        masks: dict = {}
        preds: dict = {}
        sidecars: dict = {}
        for f in sorted(p for p in view_dir.iterdir() if p.is_file()):
            name = f.name
            if m := _FRAME_RE.match(name):
                frames.setdefault(m.group(1), []).append(f)
            elif m := _MASK_RE.match(name):
                masks[m.group(1)] = f
            elif m := _PRED_RE.match(name):
                preds.setdefault(m.group(1), {})[m.group(2)] = f
            elif m := _SIDECAR_RE.match(name):
                sidecars[m.group(1)] = f
            else:
                bad(f, "unrecognized file name (expected <YYYYMMDD-HHMMSS> layout)")
        for stamp in sorted(set(masks) | set(preds) | set(sidecars)):
            if stamp not in frames:
                for orphan in filter(None, [masks.get(stamp), sidecars.get(stamp),
                                            *preds.get(stamp, {}).values()]):
                    bad(orphan, "orphan companion: no frame with this stamp")
        for stamp, paths in sorted(frames.items()):
            if len(paths) > 1:
                raise CatalogError(
                    f"duplicate frame for view {view_from_name} at {stamp}: "
                    + ", ".join(p.name for p in paths)
                )
            frame = paths[0]
            try:
                width, height = rasters.probe_raster(frame)
            except FormatError as exc:
                bad(frame, f"unreadable frame: {exc}")
                continue
            try:
                timestamp = parse_stamp(stamp)
            except ValueError as exc:
                bad(frame, f"invalid timestamp in filename: {exc}")
                continue
            view_id = view_from_name
            constants = None
            sidecar = sidecars.get(stamp)
            if sidecar is not None:
                try:
                    meta = rasters.read_sidecar(sidecar)
                except FormatError as exc:
                    bad(sidecar, f"unreadable sidecar; frame {frame.name} excluded: {exc}")
                    continue
                timestamp = meta.get("timestamp", timestamp)
                view_id = meta.get("view_id", view_id)
                constants = meta.get("constants")
            key = (view_id, timestamp)
            if key in seen:
                raise CatalogError(
                    f"duplicate (view {view_id}, {timestamp.isoformat()}): "
                    f"{seen[key].name} and {frame.name}"
                )
            seen[key] = frame
            entries.append(
                CatalogEntry(
                    view_id=view_id,
                    timestamp=timestamp,
                    frame_path=frame,
                    width=width,
                    height=height,
                    mask_path=masks.get(stamp),
                    pred_paths=preds.get(stamp, {}),
                    sidecar_path=sidecar,
                    constants=constants,
                )
            )
    entries.sort(key=lambda e: (e.view_id, e.timestamp, e.frame_path.name))
    catalog = Catalog(root, tuple(entries), tuple(quarantine))
    if not entries and not quarantine:
        logger.warning("catalog root %s holds no frames", root)
    if write_manifest:
        catalog.write_manifest()
    return catalog


# -- run configuration ----------------------------------------------------------

_HOTSPOT_DEFAULT = tuple(c for c in ALL_CLASSES if c != BACKGROUND)


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run needs beyond the catalog itself.

    Validated on construction so a bad config fails before any frame
    work starts, not three hours into a batch.
    """

    emissivity: EmissivityTable = field(default_factory=EmissivityTable.default)
    k_sigma: float = 0.0
    min_area: int = hotspot.DEFAULT_MIN_AREA
    connectivity: int = hotspot.DEFAULT_CONNECTIVITY
    persistence_threshold: float = hotspot.DEFAULT_PERSISTENCE
    group_by: str = "month"
    timezone: str = "UTC"
    bucket_hours: tuple = thermstats.DEFAULT_BUCKET_HOURS
    hotspot_classes: tuple = _HOTSPOT_DEFAULT
    models: tuple | None = None
    taxonomy_version: str = TAXONOMY.version
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bucket_hours", tuple(float(b) for b in self.bucket_hours))
        object.__setattr__(self, "hotspot_classes", tuple(int(c) for c in self.hotspot_classes))
        if self.models is not None:
            object.__setattr__(self, "models", tuple(self.models))
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.connectivity not in (4, 8):
            raise ConfigurationError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_area < 1:
            raise ConfigurationError(f"min_area must be >= 1, got {self.min_area}")
        if not np.isfinite(self.k_sigma):
            raise ConfigurationError(f"k_sigma must be finite, got {self.k_sigma}")
        if not 0.0 <= self.persistence_threshold <= 1.0:
            raise ConfigurationError(
                f"persistence threshold must be in [0, 1], got {self.persistence_threshold}"
            )
        if self.group_by not in ("month", "hour"):
            raise ConfigurationError(f"group_by must be 'month' or 'hour', got {self.group_by!r}")
        if len(set(self.bucket_hours)) != len(self.bucket_hours) or not self.bucket_hours:
            raise ConfigurationError("bucket hours must be non-empty and distinct")
        for b in self.bucket_hours:
            if not 0.0 <= b < 24.0:
                raise ConfigurationError(f"bucket hour {b} outside [0, 24)")
        for c in self.hotspot_classes:
            if c not in ALL_CLASSES:
                raise ConfigurationError(f"unknown hotspot class id {c}")
        if self.taxonomy_version != TAXONOMY.version:
            raise ConfigurationError(
                f"config targets taxonomy {self.taxonomy_version!r}; "
                f"this build provides {TAXONOMY.version!r}"
            )
        parse_timezone(self.timezone)

    def to_dict(self) -> dict:
        return {
            "emissivity": self.emissivity.to_dict(),
            "k_sigma": self.k_sigma,
            "min_area": self.min_area,
            "connectivity": self.connectivity,
            "persistence_threshold": self.persistence_threshold,
            "group_by": self.group_by,
            "timezone": self.timezone,
            "bucket_hours": list(self.bucket_hours),
            "hotspot_classes": list(self.hotspot_classes),
            "models": None if self.models is None else list(self.models),
            "taxonomy_version": self.taxonomy_version,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        kwargs = dict(d)
        if "emissivity" in kwargs:
            kwargs["emissivity"] = EmissivityTable.from_dict(kwargs["emissivity"])
        for key in ("bucket_hours", "hotspot_classes", "models"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigurationError(f"config {path} must be a JSON object")
        return cls.from_dict(doc)


# -- per-frame work -------------------------------------------------------------

@dataclass(frozen=True)
class FrameResult:
    entry: CatalogEntry
    stats: tuple              # FeatureStats, class order
    maps: Mapping[int, hotspot.HotspotMap]
    regions: Mapping[int, list]
    iou: Mapping[str, segeval.IoUReport]
    stat_errors: Mapping[str, tuple]
    mask_warnings: tuple


@dataclass(frozen=True)
class FrameFailure:
    entry: CatalogEntry
    stage: str
    message: str


def _process_frame(entry: CatalogEntry, config: RunConfig):
    stage = "decode"
    try:
        counts = rasters.read_counts(entry.frame_path)
        frame = RadiometricFrame(
            counts,
            timestamp=entry.timestamp,
            view_id=entry.view_id,
            constants=entry.constants or PlanckConstants(),
        )
        field_ = counts_to_temperature(frame)
        stage = "mask"
        if entry.mask_path is None:
            raise CatalogError("no ground-truth mask next to the frame")
        mask, warnings = validate_mask_file(entry.mask_path)
        stage = "stats"
        corrected = correct_emissivity(field_, mask, config.emissivity)
        stats = thermstats.extract_stats(
            corrected, mask, timestamp=entry.timestamp, view_id=entry.view_id
        )
        stage = "hotspot"
        maps: dict = {}
        region_lists: dict = {}
        for c in config.hotspot_classes:
            try:
                m = hotspot.detect(
                    corrected, mask, c, config.k_sigma,
                    timestamp=entry.timestamp, view_id=entry.view_id,
                )
            except EmptyInputError:
                continue
            maps[c] = m
            region_lists[c] = hotspot.regions(m, config.min_area, config.connectivity)
        stage = "evaluate"
        iou: dict = {}
        errors: dict = {}
        for model, pred_path in sorted(entry.pred_paths.items()):
            if config.models is not None and model not in config.models:
                continue
            pred, pred_warnings = validate_mask_file(pred_path)
            warnings = warnings + [f"{model}: {w}" for w in pred_warnings]
            iou[model] = segeval.evaluate(mask, pred)
            errors[model] = tuple(
                thermstats.compare_masks(corrected, mask, pred, image_id=entry.image_id)
            )
        return FrameResult(
            entry=entry,
            stats=tuple(stats),
            maps=maps,
            regions=region_lists,
            iou=iou,
            stat_errors=errors,
            mask_warnings=tuple(warnings),
        )
    except UrbanthermError as exc:
        return FrameFailure(entry, stage, f"{type(exc).__name__}: {exc}")
    except Exception as exc:  # frame isolation: a bug in one frame must not kill the batch
        logger.exception("unexpected failure on %s", entry.image_id)
        return FrameFailure(entry, stage, f"internal {type(exc).__name__}: {exc}")


# -- the batch ------------------------------------------------------------------

@dataclass(frozen=True)
class ReportBundle:
    """Everything run_analysis produced, plus the writers for it."""

    config: RunConfig
    catalog_root: Path
    quarantine: tuple
    results: tuple
    failures: tuple
    stats_rows: tuple         # (image_id, FeatureStats)
    diurnal: Mapping[int, dict]
    per_model: Mapping[str, segeval.BatchReport]
    iou_rows: tuple           # (image_id, view, model, IoUReport)
    stat_errors: Mapping[str, tuple]
    persistence: Mapping[tuple, hotspot.PersistenceResult]

    @property
    def processed(self) -> int:
        return len(self.results)

    @property
    def failed(self) -> int:
        return len(self.failures)

    def summary(self) -> dict:
        doc = {
            "catalog_root": self.catalog_root.as_posix(),
            "counts": {
                "discovered": self.processed + self.failed + len(self.quarantine),
                "processed": self.processed,
                "failed": self.failed,
                "quarantined": len(self.quarantine),
            },
            # worker count is an execution detail: the report must be
            # byte-identical however the pool was sized
            "config": {k: v for k, v in self.config.to_dict().items() if k != "workers"},
            "views": sorted({r.entry.view_id for r in self.results}),
            "models": {
                model: {
                    "overall_miou": report.overall_miou,
                    "per_view_miou": {str(v): m for v, m in report.per_view_miou.items()},
                }
                for model, report in sorted(self.per_model.items())
            },
            "failures": [
                {"image_id": f.entry.image_id, "stage": f.stage, "message": f.message}
                for f in self.failures
            ],
            "quarantine": [{"path": q.path, "reason": q.reason} for q in self.quarantine],
            "persistence": {
                f"{view}/{class_name(c)}": {
                    "n_maps": p.n_maps,
                    "threshold": p.threshold,
                    "recurrent_area": int(p.recurrent.size),
                    "group_hot_area": {str(g): a for g, a in p.group_hot_area.items()},
                }
                for (view, c), p in sorted(self.persistence.items())
            },
        }
        return doc

    def write(self, out_dir) -> list:
        """Write the full bundle; returns the paths written, in order."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []

        def emit(name, payload):
            path = out / name
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(path)

        emit("summary.json", self.summary())
        thermstats.write_stats_csv(self.stats_rows, out / "stats.csv")
        written.append(out / "stats.csv")
        if self.diurnal:
            thermstats.diurnal_to_json(dict(self.diurnal), out / "diurnal.json")
            written.append(out / "diurnal.json")
        if self.iou_rows:
            segeval.write_iou_csv(self.iou_rows, out / "miou_images.csv")
            written.append(out / "miou_images.csv")
        if self.per_model:
            segeval.write_view_model_table(dict(self.per_model), out / "miou_table.csv")
            written.append(out / "miou_table.csv")
        for model, records in sorted(self.stat_errors.items()):
            path = out / f"stat_errors-{model}.csv"
            thermstats.write_stat_errors_csv(records, path)
            written.append(path)
        regions_doc = {}
        for r in self.results:
            for c, region_list in sorted(r.regions.items()):
                if region_list:
                    key = f"{r.entry.image_id}/{class_name(c)}"
                    regions_doc[key] = hotspot.regions_to_json(region_list)
        emit("regions.json", regions_doc)
        for (view, c), p in sorted(self.persistence.items()):
            raster = np.round(p.persistence * 255).astype(np.uint8)
            path = out / f"persistence-{view}-{class_name(c)}.png"
            Image.fromarray(raster).save(path, format="PNG")
            written.append(path)
        return written


def run_analysis(
    catalog: Catalog,
    config: RunConfig,
    *,
    views=None,
    start=None,
    end=None,
) -> ReportBundle:
    """Process every selected frame and fold the results deterministically.

    Work is parallel over frames (bounded thread pool; the heavy lifting
    releases the interpreter lock inside numpy); the fold always walks
    catalog order, so the bundle does not depend on worker count or on
    completion order. Per-frame failures are recorded, never raised.
    """
    selected = catalog.select(views=views, start=start, end=end)
    if not selected.entries:
        raise EmptyInputError("no frames selected; check view/time filters")
    entries = selected.entries
    if config.workers == 1:
        outcomes = [_process_frame(e, config) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(lambda e: _process_frame(e, config), entries))

    results = tuple(o for o in outcomes if isinstance(o, FrameResult))
    failures = tuple(o for o in outcomes if isinstance(o, FrameFailure))
    assert len(results) + len(failures) == len(entries)
    for f in failures:
        logger.warning("frame %s failed at %s: %s", f.entry.image_id, f.stage, f.message)

    stats_rows = tuple((r.entry.image_id, s) for r in results for s in r.stats)
    tz = parse_timezone(config.timezone)
    all_stats = [s for _, s in stats_rows]
    diurnal = {
        c: thermstats.diurnal_profile(all_stats, c, config.bucket_hours, tz)
        for c in sorted({s.class_id for s in all_stats})
    }

    iou_rows = tuple(
        (r.entry.image_id, r.entry.view_id, model, report)
        for r in results
        for model, report in sorted(r.iou.items())
    )
    per_model: dict = {}
    for model in sorted({m for r in results for m in r.iou}):
        scored = [(r.entry.view_id, r.iou[model]) for r in results if model in r.iou]
        per_model[model] = segeval.aggregate_reports(
            [rep for _, rep in scored], [v for v, _ in scored]
        )
    stat_errors: dict = {}
    for r in results:
        for model, records in sorted(r.stat_errors.items()):
            stat_errors.setdefault(model, []).extend(records)
    stat_errors = {m: tuple(rs) for m, rs in stat_errors.items()}

    by_view_class: dict = {}
    for r in results:
        for c, m in sorted(r.maps.items()):
            by_view_class.setdefault((r.entry.view_id, c), []).append(m)
    persistence = {
        key: hotspot.longitudinal_compare(
            maps, group_by=config.group_by,
            persistence_threshold=config.persistence_threshold,
        )
        for key, maps in sorted(by_view_class.items())
    }

    return ReportBundle(
        config=config,
        catalog_root=catalog.root,
        quarantine=catalog.quarantine,
        results=results,
        failures=failures,
        stats_rows=stats_rows,
        diurnal=diurnal,
        per_model=per_model,
        iou_rows=iou_rows,
        stat_errors=stat_errors,
        persistence=persistence,
    )
