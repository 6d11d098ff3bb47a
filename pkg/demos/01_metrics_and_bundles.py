"""Trajectories, the two trajectory metrics, and Hausdorff distance between bundles.

Run: python demos/01_metrics_and_bundles.py
"""

import numpy as np

from bundlegame import Bundle, Trajectory, co_metric, hausdorff, make_grid, restrict, sup_distance
from bundlegame.bundle import hausdorff_profile

grid = make_grid(horizon=4, steps_per_unit=32)
x = Trajectory.from_function(grid, lambda t: np.sin(t), "sin")
y = Trajectory.from_function(grid, lambda t: np.sin(t) + 0.1 * t, "drift")

# The sup metric looks at one window [0, n]; the compact-open metric weighs all of them.
for n in range(1, 5):
    print(f"sup distance on [0, {n}]: {sup_distance(x, y, n):.4f}")
print(f"compact-open distance: {co_metric(x, y):.4f}")

# Restricting to a shorter window never increases the distance.
print("restricted to [0, 2]:", sup_distance(restrict(x, 2), restrict(y, 2)))

# Bundles are finite sets of trajectories; duplicates collapse.
a = Bundle((x, y, x), "A")
b = Bundle((Trajectory.constant(grid, 0.0), y), "B")
print(f"|A| = {len(a)}")
print(f"Hausdorff(A, B): sup {hausdorff(a, b):.4f}, compact-open {hausdorff(a, b, 'co'):.4f}")
print("per-horizon Hausdorff profile:", np.round(hausdorff_profile(a, b), 4))
