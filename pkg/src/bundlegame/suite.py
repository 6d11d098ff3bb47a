"""Randomized check of the metric axioms for trajectories and bundles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import Bundle, hausdorff
from .trajectory import TimeGrid, Trajectory, co_metric, sup_distance


def random_trajectory(rng: np.random.Generator, grid: TimeGrid, dim: int) -> Trajectory:
    """Random walk started near the origin; step scales vary so distances straddle 1."""
    scale = rng.choice([0.02, 0.1, 0.5])
    steps = rng.normal(0.0, scale, size=(grid.size, dim))
    steps[0] = rng.uniform(-1, 1, size=dim)
    return Trajectory(grid, np.cumsum(steps, axis=0))


@dataclass
class MetricSuiteResult:
    trials: int
    tol: float
    checks: int = 0
    worst: dict = field(default_factory=dict)

    def record(self, name: str, violation: float) -> None:
        self.checks += 1
        self.worst[name] = max(self.worst.get(name, 0.0), float(violation))

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.worst.values())

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "checks": self.checks,
            "tol": self.tol,
            "worst_violation": dict(sorted(self.worst.items())),
            "passed": self.passed,
        }


def _axioms(res: MetricSuiteResult, name: str, d, x, y, z) -> None:
    dxy, dyx, dxz, dyz = d(x, y), d(y, x), d(x, z), d(y, z)
    res.record(f"{name}:nonnegative", max(0.0, -dxy))
    res.record(f"{name}:identity", abs(d(x, x)))
    res.record(f"{name}:symmetry", abs(dxy - dyx))
    res.record(f"{name}:triangle", max(0.0, dxz - dxy - dyz))


def metric_suite(trials: int = 200, seed: int = 0, horizon: int = 4, steps_per_unit: int = 32,
                 max_dim: int = 3, tol: float = 1e-12) -> MetricSuiteResult:
    """Axioms of the sup, compact-open and Hausdorff distances on random triples.

    Also checks ``co <= 1`` and the tail bound ``co <= 2^-k + sup_k`` for every
    ``k`` up to the horizon.
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid(horizon, steps_per_unit)
    res = MetricSuiteResult(trials, tol)
    for _ in range(trials):
        dim = int(rng.integers(1, max_dim + 1))
        x, y, z = (random_trajectory(rng, grid, dim) for _ in range(3))
        n = int(rng.integers(1, horizon + 1))
        _axioms(res, "sup", lambda a, b: sup_distance(a, b), x, y, z)
        _axioms(res, "sup@n", lambda a, b: sup_distance(a, b, n), x, y, z)
        _axioms(res, "co", co_metric, x, y, z)
        co = co_metric(x, y)
        res.record("co:bounded", max(0.0, co - 1.0))
        for k in range(1, horizon + 1):
            res.record("co:tail", max(0.0, co - 2.0**-k - sup_distance(x, y, k)))

        bundles = [Bundle(tuple(random_trajectory(rng, grid, dim) for _ in range(rng.integers(1, 4))))
                   for _ in range(3)]
        bundles[1] = Bundle(bundles[1].trajectories + (x,))
        bundles[2] = Bundle(bundles[2].trajectories + (y,))
        _axioms(res, "hausdorff-sup", lambda a, b: hausdorff(a, b, "sup"), *bundles)
        _axioms(res, "hausdorff-co", lambda a, b: hausdorff(a, b, "co"), *bundles)
    return res
