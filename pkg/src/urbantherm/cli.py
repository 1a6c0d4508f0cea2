"""Command-line surface.

Thin wrappers over the library, one subcommand per workflow stage:
synth, catalog, decode, eval, stats, hotspot, report. Exit codes are
stable: 0 success, 1 usage, 2 data problems, 3 internal faults. A JSON
run config is picked up from --config or the URBANTHERM_CONFIG
environment variable; individual flags override single fields.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import hotspot, maskcore, pipeline, rasters, segeval, synthgen, thermstats
from .errors import UrbanthermError
from .maskcore import CLASS_NAMES, class_name, render_overlay, validate_mask_file, write_overlay
from .pipeline import MASK_SUFFIX, RunConfig, build_catalog, run_analysis
from .radiometric import (
    PlanckConstants,
    RadiometricFrame,
    correct_emissivity,
    counts_to_temperature,
)
from .utils import ensure_utc, parse_stamp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

CONFIG_ENV = "URBANTHERM_CONFIG"

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; usage errors here are exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    config = RunConfig.from_json(path) if path else RunConfig()
    overrides = {}
    for name in ("k_sigma", "min_area", "connectivity", "workers", "timezone"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(config, **overrides) if overrides else config


def _frame_timestamp(path: Path) -> datetime:
    stem = path.name.split(".")[0]
    try:
        return parse_stamp(stem)
    except ValueError:
        logger.warning("%s: filename carries no timestamp; using epoch", path.name)
        return datetime(1970, 1, 1, tzinfo=timezone.utc)


def _sibling_mask(frame: Path) -> Path:
    return frame.parent / (frame.name.split(".")[0] + MASK_SUFFIX)


def _load_corrected(frame_path: Path, mask_path: Path, config: RunConfig):
    counts = rasters.read_counts(frame_path)
    sidecar = frame_path.parent / (frame_path.name.split(".")[0] + pipeline.SIDECAR_SUFFIX)
    constants, timestamp, view_id = None, _frame_timestamp(frame_path), 0
    if sidecar.is_file():
        meta = rasters.read_sidecar(sidecar)
        constants = meta.get("constants")
        timestamp = meta.get("timestamp", timestamp)
        view_id = meta.get("view_id", view_id)
    frame = RadiometricFrame(
        counts, timestamp=timestamp, view_id=view_id,
        constants=constants or PlanckConstants(),
    )
    field = counts_to_temperature(frame)
    mask, warnings = validate_mask_file(mask_path)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return correct_emissivity(field, mask, config.emissivity), mask, frame


def _class_id(value: str) -> int:
    if value.isdigit():
        c = int(value)
    elif value in CLASS_NAMES:
        c = CLASS_NAMES.index(value)
    else:
        raise UrbanthermError(f"unknown class {value!r}; know {', '.join(CLASS_NAMES)}")
    if c not in maskcore.ALL_CLASSES:
        raise UrbanthermError(f"class id {c} outside 0..{maskcore.NUM_CLASSES - 1}")
    return c


# -- subcommands ----------------------------------------------------------------

def _cmd_synth(args) -> int:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = synthgen.SceneSpec.from_dict(json.load(fh))
        spec = replace(spec, seed=args.seed if args.seed is not None else spec.seed)
    else:
        spec = synthgen.demo_scene(
            seed=args.seed or 0, width=args.width, height=args.height,
            noise_sigma=args.noise,
        )
    day = datetime.fromisoformat(args.day).replace(tzinfo=timezone.utc)
    step = 24.0 / args.frames
    stamps = synthgen.day_of_timestamps(day, [k * step for k in range(args.frames)])
    predicted = (args.pred_model, args.erosion) if args.pred_model else None
    synthgen.write_scene(spec, stamps, args.out, predicted_from=predicted)
    print(f"wrote {args.frames} frames (view {spec.view_id}) under {args.out}")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    catalog = build_catalog(args.root, write_manifest=not args.no_manifest)
    print(f"{len(catalog)} entries, {len(catalog.quarantine)} quarantined "
          f"({len(catalog.views())} views, models: {', '.join(catalog.model_names()) or 'none'})")
    for q in catalog.quarantine:
        print(f"quarantined {q.path}: {q.reason}", file=sys.stderr)
    return EXIT_OK


def _cmd_decode(args) -> int:
    config = _load_config(args)
    frame_path = Path(args.frame)
    mask_path = Path(args.mask) if args.mask else _sibling_mask(frame_path)
    if args.raw or not mask_path.is_file():
        if not args.raw:
            print(f"no mask at {mask_path}; exporting uncorrected temperatures",
                  file=sys.stderr)
        counts = rasters.read_counts(frame_path)
        frame = RadiometricFrame(counts, timestamp=_frame_timestamp(frame_path))
        field = counts_to_temperature(frame)
    else:
        field, _, _ = _load_corrected(frame_path, mask_path, config)
    out = Path(args.out)
    if out.suffix.lower() in (".tif", ".tiff"):
        rasters.write_temperature_tiff(field, out, unit=args.unit)
    elif out.suffix.lower() == ".csv":
        rasters.write_temperature_csv(field, out, unit=args.unit)
    else:
        raise UrbanthermError(f"unsupported output {out.name}; use .tiff or .csv")
    valid = field.kelvin[field.valid]
    if valid.size:
        lo, hi = float(valid.min()), float(valid.max())
        if args.unit == "celsius":
            lo, hi = lo - 273.15, hi - 273.15
        print(f"wrote {out} ({args.unit}); valid pixels {valid.size}, "
              f"range {lo:.2f}..{hi:.2f}")
    else:
        print(f"wrote {out} ({args.unit}); no valid pixels")
    return EXIT_OK


def _eval_one(gt_path, pred_path):
    gt, gt_warn = validate_mask_file(gt_path)
    pred, pred_warn = validate_mask_file(pred_path)
    for w in gt_warn + pred_warn:
        print(f"warning: {w}", file=sys.stderr)
    return segeval.evaluate(gt, pred)


def _cmd_eval(args) -> int:
    if args.list and (args.gt or args.pred):
        raise _UsageError("use either --gt/--pred or --list, not both")
    if not args.list and not (args.gt and args.pred):
        raise _UsageError("supply --gt and --pred, or --list")
    rows = []
    if args.list:
        base = Path(args.list).parent
        with open(args.list, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"gt", "pred"} <= set(reader.fieldnames):
                raise UrbanthermError(f"{args.list} needs header columns gt,pred[,view]")
            for record in reader:
                gt_path = (base / record["gt"]).resolve()
                pred_path = (base / record["pred"]).resolve()
                view = int(record["view"]) if record.get("view") else 0
                rows.append((record.get("image_id") or gt_path.stem, view,
                             _eval_one(gt_path, pred_path)))
        if not rows:
            raise UrbanthermError(f"{args.list} lists no pairs")
        batch = segeval.aggregate_reports([r for _, _, r in rows],
                                          [v for _, v, _ in rows])
    else:
        if not (args.gt and args.pred):
            raise _UsageError("--gt and --pred are both required")
        rows.append((Path(args.gt).stem, 0, _eval_one(args.gt, args.pred)))
        batch = segeval.aggregate_reports([rows[0][2]], [0])
    if args.out:
        segeval.write_iou_csv(
            [(image_id, view, args.model_name, report) for image_id, view, report in rows],
            args.out,
        )
    if args.json:
        # full-precision summary for downstream tooling; stdout rounds to 4dp
        payload = {
            "n_images": len(rows),
            "overall_miou": batch.overall_miou,
            "per_view_miou": {str(v): m for v, m in batch.per_view_miou.items()},
            "per_image_miou": {image_id: r.miou for image_id, _, r in rows},
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    if args.per_class:
        summed = sum(r.confusion for _, _, r in rows)
        inter = summed.diagonal()
        union = summed.sum(0) + summed.sum(1) - inter
        for c in maskcore.ALL_CLASSES:
            if union[c]:
                print(f"iou {class_name(c)} {inter[c] / union[c]:.4f}")
            else:
                print(f"iou {class_name(c)} absent")
    print(f"mIoU {batch.overall_miou:.4f}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    config = _load_config(args)
    frame_path = Path(args.frame)
    mask_path = Path(args.mask) if args.mask else _sibling_mask(frame_path)
    field, mask, frame = _load_corrected(frame_path, mask_path, config)
    stats = thermstats.extract_stats(field, mask, timestamp=frame.timestamp,
                                     view_id=frame.view_id)
    if args.out:
        thermstats.write_stats_csv([(frame_path.name, s) for s in stats], args.out)
    print("class        count    mean_K  median_K     min_K     max_K     std_K")
    for s in stats:
        print(f"{class_name(s.class_id):<12}{s.count:>6}"
              f"{s.mean:>10.3f}{s.median:>10.3f}{s.min:>10.3f}{s.max:>10.3f}{s.std:>10.3f}")
    return EXIT_OK


def _cmd_hotspot(args) -> int:
    config = _load_config(args)
    frame_path = Path(args.frame)
    mask_path = Path(args.mask) if args.mask else _sibling_mask(frame_path)
    field, mask, frame = _load_corrected(frame_path, mask_path, config)
    c = _class_id(args.cls)
    spot = hotspot.detect(field, mask, c, config.k_sigma,
                          timestamp=frame.timestamp, view_id=frame.view_id)
    region_list = hotspot.regions(spot, config.min_area, config.connectivity)
    if args.out_raster:
        from PIL import Image

        Image.fromarray(hotspot.spot_raster(spot)).save(args.out_raster, format="PNG")
    if args.out_regions:
        hotspot.regions_to_json(region_list, args.out_regions)
    if args.out_boxes:
        base = render_overlay(frame.counts, mask, alpha=0.35)
        write_overlay(hotspot.draw_boxes(base, region_list), args.out_boxes)
    hot_n = len([r for r in region_list if r.polarity == "hot"])
    print(f"{class_name(c)}: threshold {spot.threshold:.3f} K, "
          f"{int(spot.hot.sum())} hot px, {int(spot.cool.sum())} cool px, "
          f"{hot_n} hot / {len(region_list) - hot_n} cool regions >= {config.min_area} px")
    return EXIT_OK


def _cmd_report(args) -> int:
    config = _load_config(args)
    catalog = build_catalog(args.root, write_manifest=False)
    views = [int(v) for v in args.views.split(",")] if args.views else None
    start = ensure_utc(datetime.fromisoformat(args.start)) if args.start else None
    end = ensure_utc(datetime.fromisoformat(args.end)) if args.end else None
    bundle = run_analysis(catalog, config, views=views, start=start, end=end)
    written = bundle.write(args.out)
    print(f"processed {bundle.processed}, failed {bundle.failed}, "
          f"quarantined {len(bundle.quarantine)}")
    for path in written:
        print(f"  {path}")
    if bundle.processed == 0:
        print("no frame processed successfully", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


# -- wiring ---------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="urbantherm",
                     description="Longitudinal thermal-image analysis toolkit")
    parser.add_argument("--config", help=f"JSON run config (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic labeled scene")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=24, help="frames over one day")
    p.add_argument("--day", default="2021-06-21", help="UTC date of the synthetic day")
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--noise", type=float, default=0.5, help="pixel noise sigma, K")
    p.add_argument("--spec", help="scene spec JSON instead of the built-in demo scene")
    p.add_argument("--pred-model", help="also write perturbed masks as this model's predictions")
    p.add_argument("--erosion", type=int, default=1, help="perturbation erosion, px")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("catalog", help="scan a dataset root and write its manifest")
    p.add_argument("root")
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("decode", help="convert raw counts to temperatures")
    p.add_argument("frame")
    p.add_argument("--out", required=True, help=".tiff or .csv")
    p.add_argument("--unit", choices=("kelvin", "celsius"), default="kelvin")
    p.add_argument("--mask", help="mask for emissivity correction (default: sibling)")
    p.add_argument("--raw", action="store_true", help="skip emissivity correction")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--gt")
    p.add_argument("--pred")
    p.add_argument("--list", help="CSV of gt,pred[,view] pairs scored as one batch")
    p.add_argument("--out", help="per-image per-class CSV")
    p.add_argument("--json", help="full-precision summary JSON")
    p.add_argument("--model-name", default="model", help="label used in --out")
    p.add_argument("--per-class", action="store_true", help="print pooled per-class IoU")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="per-class temperature statistics of one frame")
    p.add_argument("frame")
    p.add_argument("--mask")
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("hotspot", help="hot/cool partition of one feature")
    p.add_argument("frame")
    p.add_argument("--mask")
    p.add_argument("--class", dest="cls", default="building",
                   help="class name or id (default building)")
    p.add_argument("--k-sigma", type=float, default=None)
    p.add_argument("--min-area", type=int, default=None)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=None)
    p.add_argument("--out-raster", help="PNG: 255 hot / 0 cool / 128 outside")
    p.add_argument("--out-regions", help="regions JSON")
    p.add_argument("--out-boxes", help="annotated overlay PNG")
    p.set_defaults(func=_cmd_hotspot)

    p = sub.add_parser("report", help="batch analysis over a dataset root")
    p.add_argument("root")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--views", help="comma-separated view ids")
    p.add_argument("--start", help="ISO timestamp, inclusive")
    p.add_argument("--end", help="ISO timestamp, inclusive")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--k-sigma", type=float, default=None)
    p.add_argument("--min-area", type=int, default=None)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=None)
    p.add_argument("--timezone", default=None, help="bucket hours in this zone")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UrbanthermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
