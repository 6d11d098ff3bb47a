"""Measure-valued controls for the discriminated pursuit-evasion game.

The evader picks ``nu``, a probability on the ``v``-atoms for every control
cell; the pursuer then picks ``eta``, a probability on ``(u, v)``-atoms per cell
whose ``v``-marginal equals ``nu``.  ``eta`` drives the cell-averaged field

    x' = sum_ij eta_ij f(t, x, u_i, v_j),

integrated by explicit Euler.  The trajectories reachable from one ``nu`` form
a bundle; the bundles over all ``nu`` form the family the evader chooses from.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from .bundle import Bundle, ClosureReport, ExplicitFamily, ParametricFamily, closure_family, hausdorff
from .pursuit import Certificate, TargetSet, corollary_checks
from .trajectory import TimeGrid, Trajectory

DEFAULT_STEPS_PER_UNIT = 64


class IntegrationBlowupError(ArithmeticError):
    """The Euler state stopped being finite."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state after Euler step {step}")
        self.step = step


class SelectionCapError(ValueError):
    """Enumerating every selection would exceed the configured cap."""


class ContractViolation(ValueError):
    """Declared Lipschitz or growth constant fails on a sampled point."""


def _atoms(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    return a[:, None] if a.ndim == 1 else a


@dataclass(frozen=True)
class Dynamics:
    """Right-hand side ``f(t, x, u, v)`` with finite control atom sets.

    ``field`` must broadcast over a leading batch axis of ``x``: it receives
    ``x`` of shape ``(B, d)`` and single atoms ``u``, ``v`` and returns
    ``(B, d)``.  ``lipschitz`` and ``growth`` are the declared constants in
    ``|f(t,x1,u,v) - f(t,x2,u,v)| <= L |x1 - x2|`` and
    ``|f(t,x,u,v)| <= a (1 + |x|)``; ``speed_bound``, when given, bounds ``|f|``
    on the region the trajectories visit.
    """

    field: Callable
    p_atoms: np.ndarray
    q_atoms: np.ndarray
    x0: np.ndarray
    lipschitz: float
    growth: float
    speed_bound: float | None = None
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "p_atoms", _atoms(self.p_atoms))
        object.__setattr__(self, "q_atoms", _atoms(self.q_atoms))
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    @property
    def n_p(self) -> int:
        return self.p_atoms.shape[0]

    @property
    def n_q(self) -> int:
        return self.q_atoms.shape[0]

    def check_contracts(self, samples: int = 200, radius: float = 10.0, horizon: float = 10.0,
                        seed: int = 0) -> dict:
        """Test the declared constants on random points; raise on a violation.

        Returns the worst observed ratios (``<= 1`` when the contracts hold).
        """
        rng = np.random.default_rng(seed)
        worst_lip, worst_growth = 0.0, 0.0
        for _ in range(samples):
            t = rng.uniform(0, horizon)
            u = self.p_atoms[rng.integers(self.n_p)]
            v = self.q_atoms[rng.integers(self.n_q)]
            xs = rng.uniform(-radius, radius, size=(2, self.dim))
            f = self.field(t, xs, u, v)
            gap = np.linalg.norm(xs[0] - xs[1])
            lip = np.linalg.norm(f[0] - f[1]) / max(self.lipschitz * gap, 1e-300)
            growth = np.linalg.norm(f, axis=1) / (self.growth * (1 + np.linalg.norm(xs, axis=1)))
            worst_lip = max(worst_lip, lip if gap > 0 else 0.0)
            worst_growth = max(worst_growth, float(growth.max()))
        if worst_lip > 1 + 1e-12 or worst_growth > 1 + 1e-12:
            raise ContractViolation(
                f"{self.name}: Lipschitz ratio {worst_lip:.3g}, growth ratio {worst_growth:.3g}"
            )
        return {"lipschitz_ratio": worst_lip, "growth_ratio": worst_growth}


def linear_dynamics(p_atoms=(-1.0, 0.0, 1.0), q_atoms=(-1.0, 0.0, 1.0), x0=1.0) -> Dynamics:
    """``x' = u + v``."""
    p, q = _atoms(p_atoms), _atoms(q_atoms)
    speed = float(np.abs(p).max() + np.abs(q).max())
    return Dynamics(lambda t, x, u, v: np.broadcast_to(u + v, x.shape).copy(),
                    p, q, x0, lipschitz=0.0, growth=max(speed, 1e-12), speed_bound=speed, name="linear")


def bilinear_dynamics(a: float = 1.0, p_atoms=(-1.0, 0.0, 1.0), q_atoms=(-1.0, 0.0, 1.0),
                      x0=1.0) -> Dynamics:
    """``x' = a x + u + v``."""
    p, q = _atoms(p_atoms), _atoms(q_atoms)
    control = float(np.abs(p).max() + np.abs(q).max())
    return Dynamics(lambda t, x, u, v: a * x + (u + v), p, q, x0,
                    lipschitz=abs(a), growth=max(abs(a), control, 1e-12), name=f"bilinear(a={a})")


DYNAMICS = {"linear": linear_dynamics, "bilinear": bilinear_dynamics}


def register_dynamics(name: str, factory: Callable[..., Dynamics]) -> None:
    DYNAMICS[name] = factory


def get_dynamics(name: str, **kwargs) -> Dynamics:
    try:
        factory = DYNAMICS[name]
    except KeyError:
        raise KeyError(f"unknown dynamics {name!r}; known: {sorted(DYNAMICS)}") from None
    return factory(**kwargs)


# --------------------------------------------------------------------------
# measures


def _check_grid(grid: TimeGrid) -> int:
    return grid.horizon * grid.steps_per_unit


@dataclass(frozen=True, eq=False)
class NuMeasure:
    """Per-cell probability weights over the ``v``-atoms, shape ``(cells, n_q)``."""

    grid: TimeGrid
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        cells = _check_grid(self.grid)
        if w.ndim != 2 or w.shape[0] != cells:
            raise ValueError(f"weights must have shape ({cells}, n_q), got {w.shape}")
        if (w < 0).any() or not np.allclose(w.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("each cell must carry a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_q(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def dirac(cls, grid: TimeGrid, n_q: int, index, label: str = "") -> "NuMeasure":
        """Point mass on atom ``index`` (an int, or one int per cell)."""
        cells = _check_grid(grid)
        idx = np.broadcast_to(np.asarray(index), (cells,))
        w = np.zeros((cells, n_q))
        w[np.arange(cells), idx] = 1.0
        return cls(grid, w, label or f"dirac{np.unique(idx).tolist()}")

    @classmethod
    def uniform(cls, grid: TimeGrid, n_q: int, label: str = "uniform") -> "NuMeasure":
        return cls(grid, np.full((_check_grid(grid), n_q), 1.0 / n_q), label)

    def restrict(self, n: int) -> "NuMeasure":
        grid = self.grid.restrict(n)
        return NuMeasure(grid, self.weights[: _check_grid(grid)], self.label)

    def mix(self, other: "NuMeasure", s: float, label: str = "") -> "NuMeasure":
        """``(1 - s) self + s other``."""
        w = (1.0 - s) * self.weights + s * other.weights
        w = w / w.sum(axis=1, keepdims=True)
        return NuMeasure(self.grid, w, label or f"{self.label}~{other.label}@{s:.6g}")

    def perturbed(self, delta: float) -> "NuMeasure":
        """Move each cell towards the point mass on its lightest atom.

        The per-cell total-variation norm of the change is at most ``delta``.
        """
        if not 0 <= delta <= 2:
            raise ValueError("delta must lie in [0, 2]")
        target = np.zeros_like(self.weights)
        target[np.arange(len(target)), self.weights.argmin(axis=1)] = 1.0
        w = self.weights + 0.5 * delta * (target - self.weights)
        return NuMeasure(self.grid, w / w.sum(axis=1, keepdims=True), f"{self.label}+{delta:g}")


@dataclass(frozen=True, eq=False)
class EtaMeasure:
    """Per-cell joint weights over ``(u, v)``-atoms, shape ``(cells, n_p, n_q)``."""

    grid: TimeGrid
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        cells = _check_grid(self.grid)
        if w.ndim != 3 or w.shape[0] != cells:
            raise ValueError(f"weights must have shape ({cells}, n_p, n_q), got {w.shape}")
        if (w < 0).any() or not np.allclose(w.sum(axis=(1, 2)), 1.0, rtol=0, atol=1e-12):
            raise ValueError("each cell must carry a probability matrix")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, grid: TimeGrid, n_p: int, n_q: int, p_index, q_index) -> "EtaMeasure":
        cells = _check_grid(grid)
        w = np.zeros((cells, n_p, n_q))
        w[np.arange(cells), np.broadcast_to(p_index, (cells,)), np.broadcast_to(q_index, (cells,))] = 1.0
        return cls(grid, w)

    def marginal(self) -> np.ndarray:
        """``v``-marginal per cell."""
        return self.weights.sum(axis=1)

    def consistency_error(self, nu: NuMeasure) -> float:
        return float(np.abs(self.marginal() - nu.weights).max())


@dataclass(frozen=True)
class Selection:
    """How ``eta`` measures consistent with a ``nu`` are generated.

    ``"all"`` enumerates every deterministic choice of a ``u``-atom for each
    charged ``(cell, v-atom)`` pair and refuses when that count exceeds ``cap``.
    ``"sample"`` draws ``count`` random conditional kernels (seeded per cell)
    and adds every selection that is constant across cells.  ``"auto"`` picks
    ``"all"`` when within the cap.
    """

    kind: str = "all"
    count: int = 32
    seed: int = 0
    cap: int = 3**8

    def __post_init__(self):
        if self.kind not in ("all", "sample", "auto"):
            raise ValueError(f"unknown selection kind {self.kind!r}")


def selection_count(nu: NuMeasure, n_p: int) -> int:
    """Number of distinct deterministic selections for ``nu``."""
    return n_p ** int((nu.weights > 0).sum())


def _all_selection_weights(nu: NuMeasure, n_p: int, cap: int) -> np.ndarray:
    charged = np.argwhere(nu.weights > 0)
    total = selection_count(nu, n_p)
    if total > cap:
        raise SelectionCapError(
            f"{total} selections exceed the cap {cap}; use Selection('sample', ...)"
        )
    choices = np.array(list(itertools.product(range(n_p), repeat=len(charged))), dtype=int)
    choices = choices.reshape(total, len(charged))
    cells, n_q = nu.weights.shape
    w = np.zeros((total, cells, n_p, n_q))
    rows = np.arange(total)
    for a, (c, q) in enumerate(charged):
        w[rows, c, choices[:, a], q] = nu.weights[c, q]
    return w


def _sampled_kernels(cells: int, n_p: int, n_q: int, count: int, seed: int) -> np.ndarray:
    constant = list(itertools.product(range(n_p), repeat=n_q))
    k = np.zeros((len(constant) + count, cells, n_p, n_q))
    for b, sigma in enumerate(constant):
        k[b, :, list(sigma), np.arange(n_q)] = 1.0
    for c in range(cells):
        rng = np.random.default_rng([seed, c])
        draws = rng.dirichlet(np.ones(n_p), size=(count, n_q))  # (count, n_q, n_p)
        k[len(constant):, c] = draws.transpose(0, 2, 1)
    return k


def eta_weights(nu: NuMeasure, n_p: int, strategy: Selection = Selection()) -> np.ndarray:
    """Stacked ``eta`` weights, shape ``(B, cells, n_p, n_q)``."""
    kind = strategy.kind
    if kind == "auto":
        kind = "all" if selection_count(nu, n_p) <= strategy.cap else "sample"
    if kind == "all":
        return _all_selection_weights(nu, n_p, strategy.cap)
    cells, n_q = nu.weights.shape
    kernels = _sampled_kernels(cells, n_p, n_q, strategy.count, strategy.seed)
    return kernels * nu.weights[None, :, None, :]


def consistent_etas(nu: NuMeasure, n_p: int, strategy: Selection = Selection()) -> list:
    """``eta`` measures whose ``v``-marginal equals ``nu`` in every cell."""
    return [EtaMeasure(nu.grid, w) for w in eta_weights(nu, n_p, strategy)]


# --------------------------------------------------------------------------
# trajectories


def _integrate(weights: np.ndarray, grid: TimeGrid, dyn: Dynamics, steps_per_unit: int) -> np.ndarray:
    """Euler states for a batch of ``eta`` weights, shape ``(B, nodes, d)``."""
    if steps_per_unit % grid.steps_per_unit:
        raise ValueError(
            f"integration steps per unit {steps_per_unit} must be a multiple of "
            f"the control steps per unit {grid.steps_per_unit}"
        )
    if weights.shape[2:] != (dyn.n_p, dyn.n_q):
        raise ValueError(f"eta weights {weights.shape[2:]} do not match atoms ({dyn.n_p}, {dyn.n_q})")
    sub = steps_per_unit // grid.steps_per_unit
    h = 1.0 / steps_per_unit
    steps = grid.horizon * steps_per_unit
    batch = weights.shape[0]
    out = np.empty((batch, steps + 1, dyn.dim))
    x = np.tile(dyn.x0, (batch, 1))
    out[:, 0] = x
    for k in range(steps):
        t = k / steps_per_unit
        cell = weights[:, k // sub]
        acc = np.zeros_like(x)
        for i in range(dyn.n_p):
            for j in range(dyn.n_q):
                w = cell[:, i, j]
                if not w.any():
                    continue
                acc = acc + w[:, None] * dyn.field(t, x, dyn.p_atoms[i], dyn.q_atoms[j])
        x = x + h * acc
        if not np.isfinite(x).all():
            raise IntegrationBlowupError(k + 1)
        out[:, k + 1] = x
    return out


def traj_of_eta(eta: EtaMeasure, dyn: Dynamics, steps_per_unit: int = DEFAULT_STEPS_PER_UNIT) -> Trajectory:
    """Euler solution of ``x(t) = x0 + int f d eta`` on the integration grid."""
    pts = _integrate(eta.weights[None], eta.grid, dyn, steps_per_unit)[0]
    return Trajectory(TimeGrid(eta.grid.horizon, steps_per_unit), pts)


def bundle_of_nu(nu: NuMeasure, dyn: Dynamics, strategy: Selection = Selection(),
                 steps_per_unit: int = DEFAULT_STEPS_PER_UNIT) -> Bundle:
    """Trajectories of the ``eta`` measures generated for ``nu``."""
    if nu.n_q != dyn.n_q:
        raise ValueError(f"nu has {nu.n_q} atoms, dynamics has {dyn.n_q}")
    pts = _integrate(eta_weights(nu, dyn.n_p, strategy), nu.grid, dyn, steps_per_unit)
    grid = TimeGrid(nu.grid.horizon, steps_per_unit)
    return Bundle.from_points(grid, pts, nu.label)


def family_V(nu_samples: Sequence[NuMeasure], dyn: Dynamics, strategy: Selection = Selection(),
             steps_per_unit: int = DEFAULT_STEPS_PER_UNIT) -> ExplicitFamily:
    nu_samples = list(nu_samples)
    if not nu_samples:
        raise ValueError("need at least one nu")
    return ExplicitFamily(tuple(bundle_of_nu(nu, dyn, strategy, steps_per_unit) for nu in nu_samples),
                          name=f"V[{dyn.name}]")


def gronwall_bound(dyn: Dynamics, horizon: float, delta: float) -> float:
    """``e^(L T) T F delta`` with ``F`` a bound on ``|f|`` along trajectories.

    Without a declared ``speed_bound``, ``F`` comes from the growth constant
    and the a priori bound ``|x(t)| <= (|x0| + a t) e^(a t)``.
    """
    speed = dyn.speed_bound
    if speed is None:
        a = dyn.growth
        radius = (np.linalg.norm(dyn.x0) + a * horizon) * math.exp(a * horizon)
        speed = a * (1 + radius)
    return math.exp(dyn.lipschitz * horizon) * horizon * speed * delta


def continuity_probe(nu: NuMeasure, dyn: Dynamics, deltas: Sequence[float],
                     strategy: Selection = Selection(),
                     steps_per_unit: int = DEFAULT_STEPS_PER_UNIT) -> dict:
    """Hausdorff shift of the bundle when ``nu`` moves by ``delta`` in total variation.

    Every rebuild uses the same strategy and seed.  Returns ``{delta: shift}``.
    """
    base = bundle_of_nu(nu, dyn, strategy, steps_per_unit)
    table = {}
    for delta in deltas:
        if delta == 0:
            table[delta] = 0.0
            continue
        moved = bundle_of_nu(nu.perturbed(delta), dyn, strategy, steps_per_unit)
        table[delta] = hausdorff(base, moved, "sup")
    return table


# --------------------------------------------------------------------------
# the closure-adds-nothing check


def nu_path_family(nu_samples: Sequence[NuMeasure], dyn: Dynamics, strategy: Selection,
                   steps_per_unit: int = DEFAULT_STEPS_PER_UNIT,
                   points_per_segment: int = 4) -> ParametricFamily:
    """Bundles along the polygonal path through ``nu_samples``.

    The parameter ``s`` runs over ``[0, K - 1]`` and the closed box makes the
    family compact; integer ``s`` gives the samples themselves.
    """
    nus = list(nu_samples)
    if not nus:
        raise ValueError("need at least one nu")
    last = max(len(nus) - 1, 1)

    def generator(s):
        i = min(int(math.floor(s)), len(nus) - 2) if len(nus) > 1 else 0
        frac = s - i
        if len(nus) == 1 or frac == 0.0:
            nu = nus[i]
        elif frac == 1.0:
            nu = nus[i + 1]
        else:
            nu = nus[i].mix(nus[i + 1], frac)
        return bundle_of_nu(nu, dyn, strategy, steps_per_unit)

    return ParametricFamily((0.0,), (float(last),), generator,
                            resolution=(last * points_per_segment + 1,), name=f"V[{dyn.name}]")


@dataclass(frozen=True)
class Proposition1Report:
    closure: ClosureReport
    exact: Certificate
    robust: Certificate
    membership_tol: float

    @property
    def closure_adds_nothing(self) -> bool:
        return self.closure.adds_nothing(self.membership_tol)

    @property
    def verdict(self) -> str:
        if not self.closure_adds_nothing:
            return "SKIPPED"
        return "AGREE" if self.exact.holds == self.robust.holds else "DISAGREE"

    def to_dict(self) -> dict:
        return {
            "closure_adds_nothing": self.closure_adds_nothing,
            "closure": self.closure.to_dict(),
            "exact": {"holds": self.exact.holds, "witness": self.exact.witness,
                      "bundle_label": self.exact.detail.get("bundle_label")},
            "robust": {"holds": self.robust.holds, "witness": self.robust.witness},
            "horizon": self.exact.horizon,
            "membership_tol": self.membership_tol,
            "verdict": self.verdict,
        }


def proposition1_check(dyn: Dynamics, target: TargetSet, nu_samples: Sequence[NuMeasure],
                       eps_list: Sequence[float], horizons: Sequence[int],
                       strategy: Selection = Selection("sample"),
                       steps_per_unit: int = DEFAULT_STEPS_PER_UNIT, points_per_segment: int = 4,
                       net_eps: float = 1e-3, cluster_tol: float = 1e-6,
                       membership_tol: float = 1e-2) -> Proposition1Report:
    """Close the relaxed-control family, then compare exactness with robustness.

    The comparison is only asserted when the closure adds nothing beyond
    ``membership_tol``; otherwise the verdict is ``SKIPPED``.
    """
    family = nu_path_family(nu_samples, dyn, strategy, steps_per_unit, points_per_segment)
    report = closure_family(family, net_eps, cluster_tol)
    cor = corollary_checks(family, target, eps_list, horizons, membership_tol=membership_tol,
                           closure=report)
    return Proposition1Report(report, cor.exact, cor.robust, membership_tol)


# --------------------------------------------------------------------------
# nu files


def load_nu(path) -> NuMeasure:
    """Read ``horizon``, ``steps_per_unit`` and per-cell ``weights`` rows from YAML."""
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping")
    missing = {"horizon", "steps_per_unit", "weights"} - set(data)
    if missing:
        raise ValueError(f"{path}: missing keys {sorted(missing)}")
    grid = TimeGrid(data["horizon"], data["steps_per_unit"])
    return NuMeasure(grid, data["weights"], data.get("label", Path(path).stem))


def dump_nu(nu: NuMeasure, path) -> None:
    data = {
        "label": nu.label,
        "horizon": nu.grid.horizon,
        "steps_per_unit": nu.grid.steps_per_unit,
        "weights": [[float(v) for v in row] for row in nu.weights],
    }
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
