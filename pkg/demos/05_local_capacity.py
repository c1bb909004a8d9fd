"""Local capacity of a saturating detector.

A tanh detector is linearised at its operating point; its Jacobian is
sech^2(X) times the identity. Driven hard (X = 2) the gain falls to 0.07,
below a threshold of 0.1, and every mode is lost locally.
"""

import numpy as np

from opgauge import GridSpec, NonlinearStage, ThresholdPolicy, local_capacity

grid = GridSpec((8,))
policy = ThresholdPolicy(0.1)
for x in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
    r = local_capacity(NonlinearStage("tanh", x), grid, policy)
    print(f"X={x:3.1f}  gain sech^2={1 / np.cosh(x) ** 2:.4f}  rank_eps={r.rank_eps}  I={r.irreversibility:.2f}")
