"""Uniform time grids, sampled trajectories and the two trajectory metrics.

A trajectory is stored as its node samples on the grid ``t_k = k / m``; between
nodes it is the piecewise-linear interpolant.  All suprema are taken over nodes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np


class IncompatibleTrajectoriesError(ValueError):
    """Raised when two trajectories do not share time step or dimension."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, horizon]`` with ``steps_per_unit`` steps per time unit."""

    horizon: int
    steps_per_unit: int

    def __post_init__(self):
        for name in ("horizon", "steps_per_unit"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def size(self) -> int:
        return self.horizon * self.steps_per_unit + 1

    @property
    def step(self) -> float:
        return 1.0 / self.steps_per_unit

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.size) / self.steps_per_unit

    def time(self, k: int) -> Fraction:
        """Exact time of node ``k``."""
        return Fraction(k, self.steps_per_unit)

    def last_node(self, n: int) -> int:
        """Index of the node sitting at integer time ``n``."""
        return n * self.steps_per_unit

    def restrict(self, n: int) -> "TimeGrid":
        if not 1 <= n <= self.horizon:
            raise ValueError(f"horizon {n} outside [1, {self.horizon}]")
        return TimeGrid(n, self.steps_per_unit)


def make_grid(horizon: int, steps_per_unit: int) -> TimeGrid:
    return TimeGrid(horizon, steps_per_unit)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Node samples of a continuous path ``[0, horizon] -> R^d``.

    ``points`` has shape ``(grid.size, d)``; a 1-D array is read as ``d = 1``.
    The stored array is read-only.
    """

    grid: TimeGrid
    points: np.ndarray
    label: str = ""
    _key: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"points must have shape (nodes, d), got {pts.shape}")
        if pts.shape[0] != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} points for {self.grid}, got {pts.shape[0]}"
            )
        # adding 0.0 maps -0.0 to 0.0 so set identity matches numeric equality
        pts = pts + 0.0
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_key", pts.tobytes())

    @classmethod
    def from_function(cls, grid: TimeGrid, fn, label: str = "") -> "Trajectory":
        """Sample ``fn(t)`` (vectorised over ``t``) at the grid nodes."""
        values = np.asarray(fn(grid.times), dtype=float)
        if values.ndim == 0:
            values = np.full(grid.size, float(values))
        if values.ndim == 2 and values.shape[0] != grid.size:
            values = values.T
        return cls(grid, values, label)

    @classmethod
    def constant(cls, grid: TimeGrid, value, label: str = "") -> "Trajectory":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(grid, np.tile(value, (grid.size, 1)), label)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def horizon(self) -> int:
        return self.grid.horizon

    def __call__(self, t):
        """Evaluate the piecewise-linear interpolant at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.stack(
            [np.interp(t, self.grid.times, self.points[:, i]) for i in range(self.dim)],
            axis=-1,
        )
        return out

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.grid == other.grid and self._key == other._key

    def __hash__(self):
        return hash((self.grid, self._key))

    def to_csv(self, path) -> None:
        """Write ``t,x1,...,xd`` rows with round-trip float precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)])
            for t, row in zip(self.grid.times, self.points):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, label: str | None = None) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t" or len(body) < 2:
            raise ValueError(f"{path}: not a trajectory dump")
        data = np.array(body, dtype=float)
        step = Fraction(data[1, 0]).limit_denominator(10**9)
        if step.numerator != 1:
            raise ValueError(f"{path}: time step {step} is not 1/m")
        m = step.denominator
        horizon = Fraction(data[-1, 0]).limit_denominator(10**9)
        if horizon.denominator != 1:
            raise ValueError(f"{path}: final time {horizon} is not an integer")
        grid = TimeGrid(int(horizon), m)
        return cls(grid, data[:, 1:], Path(path).stem if label is None else label)


def check_compatible(x: Trajectory, y: Trajectory) -> None:
    if x.grid.steps_per_unit != y.grid.steps_per_unit:
        raise IncompatibleTrajectoriesError(
            f"time steps differ: 1/{x.grid.steps_per_unit} vs 1/{y.grid.steps_per_unit}"
        )
    if x.dim != y.dim:
        raise IncompatibleTrajectoriesError(f"dimensions differ: {x.dim} vs {y.dim}")


def horizon_sups(norms: np.ndarray, steps_per_unit: int, horizon: int) -> np.ndarray:
    """Running maxima of ``norms`` (last axis = nodes) read off at ``t = 1..horizon``."""
    running = np.maximum.accumulate(norms, axis=-1)
    return running[..., steps_per_unit * np.arange(1, horizon + 1)]


def co_weights(horizon: int) -> np.ndarray:
    return 0.5 ** np.arange(1, horizon + 1)


def co_from_sups(sups: np.ndarray) -> np.ndarray:
    """Weighted sum ``sum_n 2^-n min(1, sups[..., n-1])``."""
    return np.minimum(1.0, sups) @ co_weights(sups.shape[-1])


def sup_distance(x: Trajectory, y: Trajectory, n: int | None = None) -> float:
    """Max over nodes ``t_k <= n`` of the Euclidean gap ``|x(t_k) - y(t_k)|``.

    ``n`` defaults to the shorter horizon.
    """
    check_compatible(x, y)
    common = min(x.horizon, y.horizon)
    if n is None:
        n = common
    if not 0 <= n <= common:
        raise ValueError(f"horizon {n} outside [0, {common}]")
    k = x.grid.last_node(n) + 1
    return float(np.max(np.linalg.norm(x.points[:k] - y.points[:k], axis=1)))


def co_metric(x: Trajectory, y: Trajectory) -> float:
    """Compact-open metric ``sum_{n=1..N} 2^-n min(1, sup_distance(x, y, n))``.

    ``N`` is the common horizon; the metric induces uniform convergence on
    every ``[0, n]`` with ``n <= N``.
    """
    check_compatible(x, y)
    n = min(x.horizon, y.horizon)
    k = x.grid.last_node(n) + 1
    norms = np.linalg.norm(x.points[:k] - y.points[:k], axis=1)
    return float(co_from_sups(horizon_sups(norms, x.grid.steps_per_unit, n)))


def restrict(x: Trajectory, n: int) -> Trajectory:
    """Truncate ``x`` to ``[0, n]``."""
    if n == x.horizon:
        return x
    grid = x.grid.restrict(n)
    return Trajectory(grid, x.points[: grid.size], x.label)
