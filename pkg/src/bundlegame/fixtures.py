"""Ready-made games with known answers.

``example1``: one bundle of nonzero constants; evasion from ``{0}`` is exact but
not robust, and the closure of the bundle contains the zero path.

``example2``: singleton bundles ``{y_p}``, ``y_p(t) = (p t - 1)^2`` for
``p in (0, 1]``; every ``y_p`` reaches ``0`` at ``t = 1/p`` so evasion is not
exact, yet it survives inflating the target, and the closure adds ``y_0 = 1``.

``bilinear_system``: ``x' = u + v`` with relaxed controls, whose family of
bundles is already closed, so exactness and robustness coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bundle import Bundle, BundleFamily, ExplicitFamily, ParametricBundle, ParametricFamily
from .pursuit import TargetSet
from .relaxed import NuMeasure, Selection, linear_dynamics, nu_path_family
from .trajectory import TimeGrid, Trajectory


@dataclass(frozen=True)
class Fixture:
    name: str
    family: BundleFamily
    target: TargetSet
    expected: dict
    eps_list: tuple
    horizons: tuple
    notes: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.expected["robust_original"] != self.expected["exact_extended"]:
            raise ValueError(f"{self.name}: expected verdicts contradict the robust/exact equivalence")


def example1(horizon: int = 8, steps_per_unit: int = 64, inset: float = 1 / 128,
             resolution: int = 64) -> Fixture:
    """Constants ``r`` with ``0 < |r| < 1`` against the target ``T x {0}``.

    The bundle is sampled at ``r = +-rho`` on a net of ``resolution`` points in
    ``[inset, 1 - inset]``; the default gives the odd multiples of ``1/128``,
    so the smallest ``|r|`` sits below every tested inflation.
    """
    grid = TimeGrid(horizon, steps_per_unit)

    def pair(rho):
        return Bundle((Trajectory.constant(grid, rho, f"r={rho:.6g}"),
                       Trajectory.constant(grid, -rho, f"r={-rho:.6g}")))

    pieces = ParametricFamily((0.0,), (1.0,), pair, open_lower=True, open_upper=True,
                              inset=inset, resolution=(resolution,), name="|r| in (0, 1)")
    family = ExplicitFamily((ParametricBundle(pieces, "Phi"),), name="example1")
    return Fixture(
        "example1", family, TargetSet.point(0.0),
        expected={"exact_original": True, "robust_original": False, "exact_extended": False},
        eps_list=(0.2, 0.1, 0.05, 0.01),
        horizons=tuple(range(1, horizon + 1)),
        notes=(
            "The bundle is not closed: its restrictions miss the zero constant. "
            "Sampled at a net avoiding 0 whose smallest |r| lies below every tested eps."
        ),
    )


def y_p(grid: TimeGrid, p: float) -> Trajectory:
    return Trajectory.from_function(grid, lambda t: (p * t - 1.0) ** 2, f"y_{p:.6g}")


def example2(p_min: float = 1e-3, horizon: int = 8, steps_per_unit: int = 64) -> Fixture:
    """Singleton bundles ``{y_p}`` for ``p in (0, 1]``, sampled down to ``p_min``.

    The variant ``(t - p)^2 / p^2`` tends to ``+inf`` pointwise (for ``t > 0``)
    and has no constant-1 limit; ``(p t - 1)^2`` tends to ``y_0 = 1``, hits
    ``0`` exactly at ``t = 1/p`` and is robust but not exact, so it is used.
    """
    grid = TimeGrid(horizon, steps_per_unit)
    family = ParametricFamily((0.0,), (1.0,), lambda p: Bundle((y_p(grid, p),), f"{{y_{p:.6g}}}"),
                              open_lower=True, inset=p_min, name="example2")
    return Fixture(
        "example2", family, TargetSet.point(0.0),
        expected={"exact_original": False, "robust_original": True, "exact_extended": True},
        eps_list=(0.1,),
        horizons=tuple(range(1, horizon + 1)),
        notes=(
            "y_p(t) = (p t - 1)^2 is used rather than (t - p)^2 / p^2, which blows up pointwise "
            "as p -> 0 instead of tending to y_0 = 1. Non-exactness is certified on the p-net {1/n : n <= N_max}; "
            "smaller p hit only after the tested horizon."
        ),
        extras={"exact_probe": family.sample_at([1.0 / n for n in range(1, horizon + 1)])},
    )


def bilinear_system(horizon: int = 6, control_steps_per_unit: int = 1, steps_per_unit: int = 64,
                    strategy: Selection = Selection("sample", count=32, seed=0)) -> Fixture:
    """``x' = u + v`` from ``x0 = 1`` with ``u, v`` atoms ``{-1, 0, 1}``, target ``T x {0}``."""
    dyn = linear_dynamics((-1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), x0=1.0)
    grid = TimeGrid(horizon, control_steps_per_unit)
    nus = (
        NuMeasure.dirac(grid, 3, 2, "v=+1"),
        NuMeasure.dirac(grid, 3, 1, "v=0"),
        NuMeasure.dirac(grid, 3, 0, "v=-1"),
        NuMeasure.uniform(grid, 3),
    )
    family = nu_path_family(nus, dyn, strategy, steps_per_unit)
    return Fixture(
        "bilinear_system", family, TargetSet.point(0.0),
        expected={"exact_original": True, "robust_original": True, "exact_extended": True},
        eps_list=(0.5, 0.25, 0.1),
        horizons=tuple(range(1, horizon + 1)),
        notes="The evader's v = +1 keeps x(t) >= 1 whatever the pursuer mixes in.",
        extras={"dynamics": dyn, "nu_samples": nus, "strategy": strategy,
                "steps_per_unit": steps_per_unit},
    )


FIXTURES = {"example1": example1, "example2": example2, "bilinear_system": bilinear_system}


def get_fixture(name: str, **kwargs) -> Fixture:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}")
    return FIXTURES[name](**kwargs)
