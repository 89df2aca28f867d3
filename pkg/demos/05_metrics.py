"""
Segmentation metrics on crafted cases
=====================================

Computes the pixel-wise metrics (confusion matrix, per-class IoU, mIoU,
mean precision/recall) and the instance metrics (AP/AR by greedy mask
matching, absolute difference in count) on small cases where the right
answers are easy to see.
"""

import numpy as np

from fieldaug import metrics as mx

# --- semantic: 0 = soil, 1 = crop, 2 = weed -------------------------------
gt = np.zeros((12, 12), np.int64)
gt[2:7, 2:7] = 1      # a crop plant
gt[8:11, 8:11] = 2    # a weed

pred = gt.copy()
pred[2:7, 2:4] = 0    # miss part of the crop
pred[0:2, 0:2] = 2    # hallucinate some weed

cm = mx.confusion_matrix(pred, gt)
print("confusion matrix (rows gt, cols pred):")
print(cm)
print("per-class IoU:", np.round(mx.per_class_iou(cm), 3))
print(f"mIoU {mx.miou(cm):.3f}  mP {mx.mean_precision(cm):.3f}  mR {mx.mean_recall(cm):.3f}")

# --- instances: leaves as disks -------------------------------------------
def disk(cv, cu, r, shape=(16, 16)):
    vv, uu = np.mgrid[0 : shape[0], 0 : shape[1]]
    return (vv - cv) ** 2 + (uu - cu) ** 2 <= r ** 2

gt_leaves = [disk(4, 4, 3), disk(11, 11, 3), disk(4, 11, 2)]
pred_leaves = [disk(4, 4, 3), disk(11, 10, 3)]  # one exact, one offset, one missed
scores = [0.9, 0.7]

ap, ar = mx.instance_ap_ar(pred_leaves, gt_leaves, scores)
print(f"\ninstance AP {ap:.3f}  AR {ar:.3f}  "
      f"|DiC| {mx.abs_dic(len(pred_leaves), len(gt_leaves))}")

# greedy matching is checked against exhaustive optimal matching
optimal = mx.optimal_match_count(pred_leaves, gt_leaves)
print(f"greedy matched {round(ar * len(gt_leaves))} masks, optimal matching finds {optimal}")

for threshold in (0.3, 0.5, 0.7, 0.9):
    ap_t, ar_t = mx.instance_ap_ar(pred_leaves, gt_leaves, scores, iou_threshold=threshold)
    print(f"  threshold {threshold:.1f}: AP {ap_t:.2f} AR {ar_t:.2f}")
