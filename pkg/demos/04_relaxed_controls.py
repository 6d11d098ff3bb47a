"""Relaxed controls for x' = u + v: measures, selections, continuity and closedness.

Run: python demos/04_relaxed_controls.py
"""

from bundlegame import NuMeasure, Selection, bundle_of_nu, consistent_etas, continuity_probe, proposition1_check
from bundlegame.fixtures import bilinear_system
from bundlegame.relaxed import gronwall_bound
from bundlegame.trajectory import TimeGrid

fx = bilinear_system()
dyn = fx.extras["dynamics"]

# The evader fixes nu; the pursuer answers with any eta whose v-marginal is nu.
nu = NuMeasure.uniform(TimeGrid(2, 1), 3)
etas = consistent_etas(nu, dyn.n_p, Selection("sample", count=8, seed=0))
print(f"{len(etas)} etas, worst marginal error {max(e.consistency_error(nu) for e in etas):.1e}")

bundle = bundle_of_nu(nu, dyn, Selection("all"))
ends = sorted({round(float(x.points[-1, 0]), 6) for x in bundle})
print(f"uniform nu: {len(bundle)} trajectories, terminal values from {ends[0]} to {ends[-1]}")

# Moving nu by delta in total variation moves the bundle by O(delta).
up = NuMeasure.dirac(TimeGrid(2, 1), 3, 2)
for delta, shift in continuity_probe(up, dyn, [0.1, 0.05, 0.025], Selection("all")).items():
    print(f"delta {delta:<6} shift {shift:.4f}  bound {gronwall_bound(dyn, 2, delta):.4f}")

# The family over a path of measures is closed, so exactness and robustness agree.
rep = proposition1_check(dyn, fx.target, fx.extras["nu_samples"], fx.eps_list, fx.horizons,
                         fx.extras["strategy"], fx.extras["steps_per_unit"])
print(f"closure adds nothing: {rep.closure_adds_nothing}; exact {rep.exact.holds}, "
      f"robust {rep.robust.holds} -> {rep.verdict}")
