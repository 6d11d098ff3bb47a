"""Closing a family of bundles makes the maximin attained.

The family {y_p : p in (0, 1]}, y_p(t) = (p t - 1)^2, has no best bundle for the
cost min(1, min_{t <= 1} |x(t)|): the value creeps up to 1 as p -> 0 but never
gets there.  Its closure adds the constant y_0 = 1, which attains it.

Run: python demos/02_closure_and_maximin.py
"""

from bundlegame import Bundle, CostFunctional, Trajectory, closure_family, member_of_extension, theorem1_check
from bundlegame.fixtures import example2

fx = example2(p_min=1e-3)
cost = CostFunctional.min_gauge(horizon=1.0, cap=1.0)

report = theorem1_check(fx.family, cost, tol=2e-2)
print(f"sampled sup over p >= 1e-3 : {report.original.value:.6f} ({report.original.bundle_label})")
print(f"max over the closure       : {report.extended.value} at {report.extended.bundle_label!r}")
print(f"gap {report.gap:.2e}, agree = {report.agree}")

closure = closure_family(fx.family)
print("closure gaps per horizon:", {n: round(g, 5) for n, g in closure.gaps.items()})

grid = closure.sampled[0].grid
for value in (1.0, 2.0):
    phi = Bundle((Trajectory.constant(grid, value),), f"constant {value}")
    m = member_of_extension(phi, closure, range(1, 5))
    print(f"{phi.label}: member = {m.member}, gaps = { {n: round(g, 4) for n, g in m.gaps.items()} }")
