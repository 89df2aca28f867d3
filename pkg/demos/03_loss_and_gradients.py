"""
The redundancy-reduction loss, by hand
======================================

Evaluates the loss on matrices where the answer is known, then verifies
the analytic gradients against central finite differences. This is the
same machinery the training loop differentiates through.
"""

import numpy as np

from fieldaug import twins as tw

# the loss is zero exactly when the cross-correlation is the identity
print("loss(identity)   =", tw.bt_loss(np.eye(8)))
print("loss(zeros, d=8) =", tw.bt_loss(np.zeros((8, 8))), "(one unit per diagonal entry)")

c = np.array([[1.0, 0.5], [0.5, 1.0]])
print("loss([[1,.5],[.5,1]], lambda=5e-3) =", tw.bt_loss(c, 5e-3), "(= 5e-3 * 0.5)")

# batch-normalize two random embedding batches and correlate them
rng = np.random.default_rng(0)
z1 = rng.standard_normal((64, 4)) * 3 + 1
z2 = z1 + 0.5 * rng.standard_normal((64, 4))
c = tw.cross_correlation(tw.batch_normalize(z1), tw.batch_normalize(z2))
print("\ncorrelated batches: diag mean", f"{tw.diag_mean(c):.3f},",
      "offdiag mean", f"{tw.offdiag_mean_abs(c):.3f}")

# analytic vs finite-difference gradients on a handful of random instances
worst = 0.0
for trial in range(5):
    n, d = int(rng.integers(4, 17)), int(rng.integers(2, 9))
    a = rng.standard_normal((n, d))
    b = rng.standard_normal((n, d))
    err = tw.finite_diff_check(a, b, h=1e-4)
    worst = max(worst, err)
    print(f"trial {trial}: n={n:2d} d={d} max relative error {err:.2e}")
print(f"worst over 5 trials: {worst:.2e} (tolerance 1e-4)")

# a coarse step reports its honest, larger error instead of clamping
coarse = tw.finite_diff_check(z1[:8, :3], z2[:8, :3], h=1.0)
print(f"finite differences at h=1.0 (deliberately coarse): {coarse:.2e}")
