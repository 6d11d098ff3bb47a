"""Maximin games over trajectory bundles, their closures, and pursuit-evasion checks."""

from .bundle import (
    Bundle,
    ClosureReport,
    ExplicitFamily,
    ParametricBundle,
    ParametricFamily,
    closure_family,
    hausdorff,
    limit_bundle,
    member_of_extension,
    restrict_bundle,
)
from .game import CostFunctional, GameValue, extended_maximin, inf_over_bundle, maximin, theorem1_check
from .pursuit import (
    TargetSet,
    corollary_checks,
    exit_time,
    hitting_time,
    is_exact,
    is_robust,
    theorem2_check,
    value_CM,
)
from .relaxed import (
    Dynamics,
    EtaMeasure,
    NuMeasure,
    Selection,
    bundle_of_nu,
    consistent_etas,
    continuity_probe,
    family_V,
    proposition1_check,
    traj_of_eta,
)
from .trajectory import TimeGrid, Trajectory, co_metric, make_grid, restrict, sup_distance

__version__ = "0.1.0"
