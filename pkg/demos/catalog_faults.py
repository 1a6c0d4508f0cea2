"""What the catalog does with files it cannot trust.

Corrupt frames, orphaned masks, stray files, and broken sidecars are
quarantined with a reason — listed in the manifest, never silently
dropped — while every healthy frame still gets processed. Duplicate
(view, timestamp) pairs are the one unrecoverable case: the dataset
itself is ambiguous, so cataloging refuses.
"""

import shutil
from datetime import datetime, timezone
from pathlib import Path

from urbantherm import build_catalog
from urbantherm.errors import CatalogError
from urbantherm.synthgen import day_of_timestamps, demo_scene, write_scene

root = Path(__file__).parent / "out" / "faults"
shutil.rmtree(root, ignore_errors=True)

day = datetime(2021, 6, 21, tzinfo=timezone.utc)
write_scene(demo_scene(seed=2, width=80, height=60),
            day_of_timestamps(day, range(0, 24, 3)), root)

view_dir = root / "1"
frames = sorted(view_dir.glob("*.pgm"))
print(f"healthy dataset: {len(frames)} frames")

# sabotage: truncate one frame, break one sidecar, drop in junk
frames[2].write_bytes(frames[2].read_bytes()[:25])
(view_dir / frames[5].name.replace(".pgm", ".meta.json")).write_text("{oops")
(view_dir / "thumbs.db").write_bytes(b"\x00")
(view_dir / "19990101-000000.mask.png").write_bytes(
    (view_dir / frames[0].name.replace(".pgm", ".mask.png")).read_bytes())

catalog = build_catalog(root)
print(f"\nafter sabotage: {len(catalog)} entries, "
      f"{len(catalog.quarantine)} quarantined")
for record in catalog.quarantine:
    print(f"  {record.path}: {record.reason}")

# accounting always balances
assert len(catalog) + len(catalog.quarantine) == catalog.discovered

# duplicates are a hard error, not a quarantine
duplicate = view_dir / frames[0].name.replace(".pgm", ".png")
shutil.copyfile(view_dir / frames[0].name.replace(".pgm", ".mask.png"), duplicate)
try:
    build_catalog(root)
except CatalogError as exc:
    print(f"\nduplicate stamp refused: {exc}")
