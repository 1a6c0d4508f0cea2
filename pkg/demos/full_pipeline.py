"""The whole workflow on disk: synthesize, catalog, analyze, report.

Everything downstream of the camera: a dataset root full of 16-bit
frames with mask sidecars, a manifest built by scanning it (bad files
go to quarantine, never silently dropped), and one deterministic
analysis pass that writes the report files the CLI `report` subcommand
would. Re-running produces byte-identical output.
"""

import json
from datetime import datetime, timezone
from pathlib import Path

from urbantherm import RunConfig, build_catalog, run_analysis
from urbantherm.synthgen import day_of_timestamps, demo_scene, write_scene

out_root = Path(__file__).parent / "out" / "pipeline"
dataset = out_root / "dataset"
report = out_root / "report"

day = datetime(2021, 6, 21, tzinfo=timezone.utc)
if not dataset.exists():
    write_scene(demo_scene(seed=21, width=160, height=120),
                day_of_timestamps(day, range(0, 24, 2)),
                dataset, predicted_from=("demo", 1))
    print(f"synthesized {len(list(dataset.rglob('*.pgm')))} frames into {dataset}")

catalog = build_catalog(dataset)
print(f"catalog: {len(catalog)} entries, {len(catalog.quarantine)} quarantined, "
      f"views {catalog.views()}, models {catalog.model_names()}")

config = RunConfig(k_sigma=0.5, min_area=10)
bundle = run_analysis(catalog, config)
print(f"analysis: {bundle.processed} processed, {bundle.failed} failed")
print(f"model scores: "
      + ", ".join(f"{m}={r.overall_miou:.3f}" for m, r in bundle.per_model.items()))

written = bundle.write(report)
print(f"\nreport files:")
for path in written:
    print(f"  {path.relative_to(out_root)}")

summary = json.loads((report / "summary.json").read_text())
print("\npersistence (view/class -> recurrent hot pixels):")
for key, entry in sorted(summary["persistence"].items()):
    print(f"  {key}: {entry['recurrent_area']}")
