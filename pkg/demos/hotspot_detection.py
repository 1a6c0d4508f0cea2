"""Hot/cool spots of one surface class, and their persistence over a day.

A hot spot is a contiguous patch of a feature sitting above that
feature's own mean (plus an optional k*sigma margin) — not above some
global threshold, so a cool vegetated area can still have hot spots
relative to itself. Persistence then asks which pixels stay hot across
many instants; those are the ones worth a site visit.
"""

from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from urbantherm import (
    BUILDING,
    correct_emissivity,
    counts_to_temperature,
    demo_scene,
    hotspot,
    maskcore,
)
from urbantherm.synthgen import day_of_timestamps, generate

out_dir = Path(__file__).parent / "out" / "hotspots"
out_dir.mkdir(parents=True, exist_ok=True)

day = datetime(2021, 6, 21, tzinfo=timezone.utc)
samples = generate(demo_scene(seed=8), day_of_timestamps(day, range(24)))

# one instant in detail
noon = samples[12]
field = correct_emissivity(counts_to_temperature(noon.frame), noon.mask)
spot_map = hotspot.detect(field, noon.mask, BUILDING, k_sigma=1.0,
                          timestamp=noon.frame.timestamp, view_id=1)
print(f"building threshold at noon: {spot_map.threshold:.2f} K "
      f"(mean + 1.0 sigma), hot pixels: {int(spot_map.hot.sum())}")

region_list = hotspot.regions(spot_map, min_area=25, connectivity=4)
for r in region_list[:5]:
    x, y, w, h = r.bbox
    print(f"  {r.polarity:4s} {r.area:5d} px at ({x},{y}) {w}x{h}, {r.mean_kelvin:.2f} K")

boxed = hotspot.draw_boxes(maskcore.render_overlay(field.kelvin, noon.mask, alpha=0.3),
                           [r for r in region_list if r.polarity == "hot"])
maskcore.write_overlay(boxed, out_dir / "noon_hot_boxes.png")

# which building pixels are hot in at least 75% of the day's frames?
maps = []
for sample in samples:
    f = correct_emissivity(counts_to_temperature(sample.frame), sample.mask)
    maps.append(hotspot.detect(f, sample.mask, BUILDING, k_sigma=0.5,
                               timestamp=sample.frame.timestamp, view_id=1))

result = hotspot.longitudinal_compare(maps, group_by="hour",
                                      persistence_threshold=0.75)
print(f"\npersistence over {result.n_maps} frames:")
print(f"  recurrent-hot pixels: {result.recurrent.size}")
print(f"  persistence range: {result.persistence.min():.2f}.."
      f"{result.persistence.max():.2f}")
hours = sorted(result.group_hot_area.items())
print("  hot area by hour: " + ", ".join(f"{h:02d}h {a}" for h, a in hours[:6]) + ", ...")

raster = np.round(result.persistence * 255).astype(np.uint8)
maskcore.write_overlay(np.stack([raster] * 3, axis=-1), out_dir / "persistence.png")
print(f"\nwrote {sorted(p.name for p in out_dir.iterdir())} to {out_dir}")
