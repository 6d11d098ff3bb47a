"""Cost functionals and the sup-inf value of choosing a bundle against a trajectory."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bundle import Bundle, BundleFamily, ClosureReport, ExplicitFamily, ParametricFamily, closure_family
from .trajectory import Trajectory, co_weights, horizon_sups


class CostEvaluationError(RuntimeError):
    """A cost functional failed on a particular trajectory."""


def _gauge_values(gauge, x: Trajectory, horizon: float) -> np.ndarray:
    k = int(math.floor(horizon * x.grid.steps_per_unit + 1e-9)) + 1
    k = min(k, x.grid.size)
    return np.asarray(gauge(x.grid.times[:k], x.points[:k]), dtype=float).reshape(k)


def norm_gauge(center=0.0):
    """Gauge ``(t, x) -> |x - center|``."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return lambda t, x: np.linalg.norm(x - center, axis=-1)


@dataclass(frozen=True)
class CostFunctional:
    """A real-valued criterion on trajectories.

    ``horizon`` is the time span the value depends on; builtins depend on a
    finite span, which makes them continuous in the compact-open topology.
    ``continuous`` is the caller's declaration for user-supplied functions.
    """

    fn: Callable[[Trajectory], float]
    name: str = "cost"
    horizon: float | None = None
    continuous: bool = True

    def __call__(self, x: Trajectory) -> float:
        return float(self.fn(x))

    def scaled(self, factor: float) -> "CostFunctional":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        fn = self.fn
        return CostFunctional(lambda x: factor * fn(x), f"{factor}*{self.name}", self.horizon, self.continuous)

    @classmethod
    def min_gauge(cls, gauge=None, horizon: float = 1.0, cap: float = math.inf, name: str = "") -> "CostFunctional":
        """``min(cap, min_{t_k <= horizon} gauge(t_k, x(t_k)))``."""
        gauge = norm_gauge() if gauge is None else gauge

        def fn(x):
            return min(cap, float(_gauge_values(gauge, x, horizon).min()))

        return cls(fn, name or f"min-gauge[0,{horizon}]", horizon, True)

    @classmethod
    def terminal_gauge(cls, gauge=None, time: float = 1.0, name: str = "") -> "CostFunctional":
        """``gauge(T, x(T))`` at the node ``T = time``."""
        gauge = norm_gauge() if gauge is None else gauge

        def fn(x):
            return float(_gauge_values(gauge, x, time)[-1])

        return cls(fn, name or f"terminal-gauge@{time}", time, True)

    @classmethod
    def weighted(cls, gauge=None, horizon: int = 4, name: str = "") -> "CostFunctional":
        """``sum_{n=1..horizon} 2^-n min(1, max_{t_k <= n} |gauge|)``.

        With ``gauge = |x - y(t)|`` this is the compact-open distance to ``y``.
        """
        gauge = norm_gauge() if gauge is None else gauge

        def fn(x):
            vals = np.abs(_gauge_values(gauge, x, horizon))
            sups = horizon_sups(vals, x.grid.steps_per_unit, horizon)
            return float(np.minimum(1.0, sups) @ co_weights(horizon))

        return cls(fn, name or f"weighted[{horizon}]", horizon, True)


@dataclass(frozen=True)
class GameValue:
    value: float
    attained: bool
    bundle_index: int | None = None
    trajectory_index: int | None = None
    bundle_label: str = ""

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "attained": self.attained,
            "bundle_index": self.bundle_index,
            "trajectory_index": self.trajectory_index,
            "bundle_label": self.bundle_label,
        }


def inf_over_bundle(cost: CostFunctional, bundle: Bundle) -> tuple[float, int]:
    """Smallest cost over the bundle and the lowest index attaining it."""
    best, arg = math.inf, 0
    for i, x in enumerate(bundle):
        try:
            value = cost(x)
        except Exception as exc:
            raise CostEvaluationError(
                f"{cost.name} failed on trajectory {i} {x.label!r} of bundle {bundle.label!r}: {exc}"
            ) from exc
        if value < best or i == 0:
            best, arg = value, i
    return best, arg


def maximin(family: ExplicitFamily | Sequence[Bundle], cost: CostFunctional) -> GameValue:
    """``max`` over bundles of ``min`` over members; ties go to the lowest index."""
    if isinstance(family, ParametricFamily):
        raise TypeError("maximin needs an explicit family; sample it or use extended_maximin")
    if isinstance(family, ExplicitFamily):
        family = family.sample()
    bundles = list(family)
    if not bundles:
        raise ValueError("maximin over an empty family")
    best = None
    for i, bundle in enumerate(bundles):
        value, j = inf_over_bundle(cost, bundle)
        if best is None or value > best.value:
            best = GameValue(value, True, i, j, bundle.label)
    return best


def extended_maximin(family: BundleFamily, cost: CostFunctional, net_eps: float = 1e-3,
                     cluster_tol: float = 1e-6) -> tuple[GameValue, ClosureReport]:
    """Maximin over the closure of ``family``."""
    if not cost.continuous:
        raise ValueError(f"{cost.name} is not declared continuous")
    report = closure_family(family, net_eps, cluster_tol)
    return maximin(report.family, cost), report


@dataclass(frozen=True)
class Theorem1Report:
    """Sampled original sup against the extended max.

    ``agree`` holds when ``gap <= tol + net_bound``; ``net_bound`` is the
    caller's estimate of what the parameter net can miss.
    """

    original: GameValue
    extended: GameValue
    gap: float
    tol: float
    net_eps: float
    net_bound: float
    closure: ClosureReport

    @property
    def agree(self) -> bool:
        return self.gap <= self.tol + self.net_bound

    def to_dict(self) -> dict:
        return {
            "original_value": self.original.value,
            "original_witness": self.original.bundle_label,
            "extended_value": self.extended.value,
            "attained": self.extended.attained,
            "extended_witness": self.extended.bundle_label,
            "gap": self.gap,
            "tol": self.tol,
            "net_eps": self.net_eps,
            "net_bound": self.net_bound,
            "agree": self.agree,
            "closure": self.closure.to_dict(),
        }


def theorem1_check(family: BundleFamily, cost: CostFunctional, tol: float = 2e-2,
                   net_eps: float = 1e-3, cluster_tol: float = 1e-6,
                   net_bound: float = 0.0) -> Theorem1Report:
    """Compare the maximin over a sample of ``family`` with the maximin over its closure."""
    extended, report = extended_maximin(family, cost, net_eps, cluster_tol)
    original = maximin(report.sampled, cost)
    return Theorem1Report(original, extended, abs(extended.value - original.value),
                          tol, net_eps, net_bound, report)
