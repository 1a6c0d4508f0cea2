"""Scoring predicted label masks against ground truth.

Ground truth comes from the scene generator; "predictions" are the same
masks degraded by boundary erosion plus a sprinkle of interior label
flips, which is roughly what a decent segmentation model gets wrong.
"""

from datetime import datetime, timedelta, timezone

from urbantherm import CLASS_NAMES, demo_scene, generate, perturb_mask, segeval

base = datetime(2021, 6, 21, 6, tzinfo=timezone.utc)
stamps = [base + timedelta(hours=3 * i) for i in range(4)]
samples = generate(demo_scene(seed=12), stamps)

pairs = []
for i, sample in enumerate(samples):
    pred = perturb_mask(sample.mask, erosion_px=1, seed=i)
    pairs.append((sample.mask, pred))

# single-pair report first: per-class IoU and the confusion matrix
report = segeval.evaluate(*pairs[0])
print("one frame:")
for c, iou in report.per_class_iou.items():
    shown = "absent" if iou is None else f"{iou:.4f}"
    print(f"  {CLASS_NAMES[c]:10s} {shown}")
print(f"  mIoU {report.miou:.4f}, pixel accuracy {report.pixel_accuracy:.4f}")

batch = segeval.evaluate_batch(pairs)
print(f"\nbatch of {len(pairs)}: overall mIoU {batch.overall_miou:.4f}")

# heavier degradation, lower score
worse = [(gt, perturb_mask(gt, erosion_px=3, seed=99)) for gt, _ in pairs]
print(f"erosion 3 px instead of 1: {segeval.evaluate_batch(worse).overall_miou:.4f}")
