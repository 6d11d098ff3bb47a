"""Trajectory bundles, bundle families and their closures.

A bundle is a finite set of trajectories on one grid.  A family of bundles is
either an explicit list or a generator over a box of parameters; the closure of
a parameterized family is approximated by a parameter net plus the limits of
bundle sequences that run into each face of the box.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .trajectory import (
    IncompatibleTrajectoriesError,
    TimeGrid,
    Trajectory,
    co_from_sups,
    horizon_sups,
    restrict,
)

# element budget for one block of the (|A|, |B|, nodes) distance tensor
_BLOCK_ELEMENTS = 4_000_000


class GeneratorError(RuntimeError):
    """A bundle generator failed at a given parameter."""

    def __init__(self, param, cause):
        super().__init__(f"generator failed at parameter {param!r}: {cause}")
        self.param = param


@dataclass(frozen=True, eq=False)
class Bundle:
    """Finite nonempty set of trajectories sharing grid and dimension.

    Duplicate trajectories are dropped (first occurrence kept), so the bundle
    has set semantics while keeping a deterministic order.
    """

    trajectories: tuple
    label: str = ""
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        members = []
        seen = set()
        for x in self.trajectories:
            if x not in seen:
                seen.add(x)
                members.append(x)
        if not members:
            raise ValueError("a bundle must contain at least one trajectory")
        grid, dim = members[0].grid, members[0].dim
        for x in members[1:]:
            if x.grid != grid or x.dim != dim:
                raise IncompatibleTrajectoriesError(
                    f"bundle members disagree: {x.grid}/d={x.dim} vs {grid}/d={dim}"
                )
        pts = np.stack([x.points for x in members])
        pts.setflags(write=False)
        object.__setattr__(self, "trajectories", tuple(members))
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, grid: TimeGrid, points, label: str = "") -> "Bundle":
        """Build from an array of shape ``(members, nodes, d)``."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 2:
            points = points[:, :, None]
        return cls(tuple(Trajectory(grid, p) for p in points), label)

    @property
    def grid(self) -> TimeGrid:
        return self.trajectories[0].grid

    @property
    def dim(self) -> int:
        return self.trajectories[0].dim

    @property
    def horizon(self) -> int:
        return self.grid.horizon

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def __eq__(self, other):
        if not isinstance(other, Bundle):
            return NotImplemented
        return set(self.trajectories) == set(other.trajectories)

    def __hash__(self):
        return hash(frozenset(self.trajectories))


def _check_bundles(a: Bundle, b: Bundle) -> None:
    if a.grid.steps_per_unit != b.grid.steps_per_unit or a.dim != b.dim:
        raise IncompatibleTrajectoriesError(
            f"incompatible bundles: step 1/{a.grid.steps_per_unit}, d={a.dim} "
            f"vs step 1/{b.grid.steps_per_unit}, d={b.dim}"
        )


def _sup_profiles(a: Bundle, b: Bundle, horizon: int) -> np.ndarray:
    """Pairwise sup distances at horizons ``1..horizon``, shape ``(|a|, |b|, horizon)``."""
    _check_bundles(a, b)
    m = a.grid.steps_per_unit
    k = horizon * m + 1
    pa, pb = a.points[:, :k], b.points[:, :k]
    out = np.empty((len(pa), len(pb), horizon))
    rows = max(1, _BLOCK_ELEMENTS // max(1, len(pb) * k))
    for start in range(0, len(pa), rows):
        block = pa[start : start + rows]
        norms = np.linalg.norm(block[:, None] - pb[None], axis=-1)
        out[start : start + rows] = horizon_sups(norms, m, horizon)
    return out


def pairwise_distances(
    a: Bundle, b: Bundle, metric: str = "sup", horizon: int | None = None
) -> np.ndarray:
    """Matrix of trajectory distances between the members of ``a`` and ``b``.

    ``metric="sup"`` is the sup distance over ``[0, horizon]``; ``metric="co"``
    is the compact-open metric over the common horizon.
    """
    common = min(a.horizon, b.horizon)
    if metric == "co":
        return co_from_sups(_sup_profiles(a, b, common))
    if metric != "sup":
        raise ValueError(f"unknown metric {metric!r}")
    n = common if horizon is None else horizon
    if not 1 <= n <= common:
        raise ValueError(f"horizon {n} outside [1, {common}]")
    return _sup_profiles(a, b, n)[..., -1]


def _hausdorff_from_matrix(d: np.ndarray) -> float:
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def hausdorff(a: Bundle, b: Bundle, metric: str = "sup", horizon: int | None = None) -> float:
    """Hausdorff distance between two bundles under a trajectory metric."""
    return _hausdorff_from_matrix(pairwise_distances(a, b, metric, horizon))


def hausdorff_profile(a: Bundle, b: Bundle, horizon: int | None = None) -> np.ndarray:
    """Sup-metric Hausdorff distances at every integer horizon ``1..horizon``."""
    n = min(a.horizon, b.horizon) if horizon is None else horizon
    prof = _sup_profiles(a, b, n)
    return np.maximum(prof.min(axis=1).max(axis=0), prof.min(axis=0).max(axis=0))


def excess(a: Bundle, b: Bundle, metric: str = "co", horizon: int | None = None) -> float:
    """One-sided distance ``max_{x in a} min_{y in b} d(x, y)``.

    Zero exactly when ``a`` is contained in ``b`` (for finite bundles).
    """
    return float(pairwise_distances(a, b, metric, horizon).min(axis=1).max())


def restrict_bundle(bundle: Bundle, n: int) -> Bundle:
    """Restrict every member to ``[0, n]``; members that coincide merge."""
    if n == bundle.horizon:
        return bundle
    if not 1 <= n <= bundle.horizon:
        raise ValueError(f"horizon {n} outside [1, {bundle.horizon}]")
    return Bundle(tuple(restrict(x, n) for x in bundle), bundle.label)


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class ExplicitFamily:
    """A finite list of bundles; ``params`` records where sampled bundles came from.

    Members may be :class:`ParametricBundle` objects, which stand for bundles
    with infinitely many members; :meth:`sample` replaces them by finite nets.
    """

    bundles: tuple
    params: tuple | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))
        if not self.bundles:
            raise ValueError("a bundle family must be nonempty")
        if self.params is not None:
            object.__setattr__(self, "params", tuple(self.params))
            if len(self.params) != len(self.bundles):
                raise ValueError("params and bundles differ in length")

    def __len__(self):
        return len(self.bundles)

    def __iter__(self):
        return iter(self.bundles)

    def __getitem__(self, i):
        return self.bundles[i]

    @property
    def horizon(self) -> int:
        return min(b.horizon for b in self.bundles)

    @property
    def is_finite(self) -> bool:
        return all(isinstance(b, Bundle) for b in self.bundles)

    def sample(self, net_eps: float = 1e-3) -> "ExplicitFamily":
        if self.is_finite:
            return self
        bundles = tuple(b if isinstance(b, Bundle) else b.sample(net_eps) for b in self.bundles)
        return ExplicitFamily(bundles, self.params, self.name)

    def restricted(self, n: int) -> "ExplicitFamily":
        return ExplicitFamily(tuple(restrict_bundle(b, n) if isinstance(b, Bundle) else b.restricted(n)
                                    for b in self.bundles), self.params, self.name)


@dataclass(frozen=True)
class ParametricFamily:
    """Bundles ``generator(z)`` for ``z`` in a box of parameters.

    ``lower``/``upper`` bound the box.  Faces flagged in ``open_lower`` or
    ``open_upper`` are not part of the family: the parameter net stays ``inset``
    away from them, and the closure looks for limits there.  ``resolution``
    overrides the per-axis net counts derived from ``net_eps``.

    For a one-dimensional box the generator receives a float, otherwise a tuple.
    """

    lower: tuple
    upper: tuple
    generator: Callable
    open_lower: tuple = ()
    open_upper: tuple = ()
    inset: float = 0.0
    resolution: tuple | None = None
    name: str = ""

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper) or not lower:
            raise ValueError("lower and upper must have the same nonzero length")
        if any(hi <= lo for lo, hi in zip(lower, upper)):
            raise ValueError(f"degenerate parameter box {lower} x {upper}")
        d = len(lower)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        for name in ("open_lower", "open_upper"):
            flags = getattr(self, name)
            flags = (bool(flags),) * d if isinstance(flags, bool) else tuple(flags) or (False,) * d
            if len(flags) != d:
                raise ValueError(f"{name} needs {d} flags")
            object.__setattr__(self, name, flags)
        if self.resolution is not None:
            res = tuple(int(r) for r in np.atleast_1d(self.resolution))
            if len(res) != d or min(res) < 1:
                raise ValueError(f"resolution needs {d} positive counts")
            object.__setattr__(self, "resolution", res)

    @property
    def ndim(self) -> int:
        return len(self.lower)

    def _unpack(self, z):
        return float(z[0]) if self.ndim == 1 else tuple(float(v) for v in z)

    def __call__(self, z) -> Bundle:
        param = self._unpack(np.atleast_1d(z))
        try:
            bundle = self.generator(param)
        except Exception as exc:
            raise GeneratorError(param, exc) from exc
        if not isinstance(bundle, Bundle):
            raise GeneratorError(param, TypeError(f"generator returned {type(bundle).__name__}"))
        return bundle

    def axis_nets(self, net_eps: float) -> list:
        """Per-axis sample points, kept ``inset`` away from open faces."""
        nets = []
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            a = lo + self.inset if self.open_lower[i] else lo
            b = hi - self.inset if self.open_upper[i] else hi
            if b < a:
                raise ValueError(f"inset {self.inset} empties axis {i}")
            if self.resolution is not None:
                count = self.resolution[i]
            else:
                count = math.ceil((b - a) / net_eps - 1e-9) + 1
            nets.append(np.linspace(a, b, max(count, 1)) if b > a else np.array([a]))
        return nets

    def sample(self, net_eps: float = 1e-3) -> ExplicitFamily:
        if net_eps <= 0:
            raise ValueError("net_eps must be positive")
        params = [self._unpack(z) for z in itertools.product(*self.axis_nets(net_eps))]
        return self.sample_at(params)

    def sample_at(self, params: Sequence) -> ExplicitFamily:
        params = list(params)
        return ExplicitFamily(tuple(self(p) for p in params), tuple(params), self.name)

    def restricted(self, n: int) -> "ParametricFamily":
        gen = self.generator
        return ParametricFamily(
            self.lower, self.upper, lambda z: restrict_bundle(gen(z), n),
            self.open_lower, self.open_upper, self.inset, self.resolution, self.name,
        )

    def face_approaches(self, net_eps: float, max_terms: int):
        """Yield ``(face, params)`` for every face and every net point on it.

        ``params`` halves the distance to the face at every term and stops once
        the offset no longer changes the face coordinate.
        """
        nets = self.axis_nets(net_eps)
        for axis in range(self.ndim):
            width = self.upper[axis] - self.lower[axis]
            others = [nets[j] for j in range(self.ndim) if j != axis]
            for side, face_value, sign in (("lower", self.lower[axis], 1.0), ("upper", self.upper[axis], -1.0)):
                is_open = (self.open_lower if side == "lower" else self.open_upper)[axis]
                for rest in itertools.product(*others):
                    seq = []
                    for k in range(1, max_terms + 1):
                        coord = face_value + sign * width * 2.0**-k
                        if coord == face_value:
                            break
                        z = list(rest)
                        z.insert(axis, coord)
                        seq.append(self._unpack(z))
                    face = {"axis": axis, "side": side, "open": is_open, "at": face_value,
                            "others": [float(v) for v in rest]}
                    yield face, seq


@dataclass(frozen=True)
class ParametricBundle:
    """The union of the bundles of ``pieces``: one bundle indexed by a parameter box.

    With open faces this is a bundle that is not closed; its closure gains the
    limits of members running into those faces.
    """

    pieces: ParametricFamily
    label: str = ""

    @property
    def horizon(self) -> int:
        mid = [(lo + hi) / 2 for lo, hi in zip(self.pieces.lower, self.pieces.upper)]
        return self.pieces(mid).horizon

    def sample(self, net_eps: float = 1e-3) -> Bundle:
        return _union(self.pieces.sample(net_eps), self.label)

    def close(self, net_eps: float = 1e-3, cluster_tol: float = 1e-6,
              max_terms: int = 64) -> tuple[Bundle, Bundle, list]:
        """Return ``(sampled, closed, non_cauchy_faces)``."""
        report = closure_family(self.pieces, net_eps, cluster_tol, max_terms)
        return _union(report.sampled, self.label), _union(report.family, f"cl {self.label}"), report.flags

    def restricted(self, n: int) -> "ParametricBundle":
        return ParametricBundle(self.pieces.restricted(n), self.label)


def _union(bundles, label: str) -> Bundle:
    return Bundle(tuple(x for b in bundles for x in b), label)


BundleFamily = Union[ExplicitFamily, ParametricFamily]


def as_explicit(family: BundleFamily, net_eps: float = 1e-3) -> ExplicitFamily:
    """Finite stand-in for a family: sample parameters and parametric bundles."""
    return family.sample(net_eps)


# --------------------------------------------------------------------------
# limits and closures


def _monotone_tail(dists: Sequence[float], tail: int) -> bool:
    last = list(dists[-(tail + 1):])
    return all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(last, last[1:]))


def limit_bundle(seq: Sequence[Bundle], tol: float = 1e-6, tail: int = 3,
                 extrapolate: bool = True) -> Bundle | None:
    """Limit of a Hausdorff-Cauchy sequence of bundles, or ``None`` if it diverges.

    The sequence counts as convergent when its last consecutive compact-open
    Hausdorff distance is below ``tol`` and the last ``tail`` distances do not
    increase.  Every member of the last bundle is paired with its nearest
    member of the one before, and the limit is the extrapolation
    ``2 x_last - x_prev``, exact for sequences converging linearly in a
    halving parameter gap.  Nearest-neighbour pairing keeps each extrapolation
    step within the last Hausdorff distance even when rounding merges members
    and the cardinalities drift.  With ``extrapolate=False`` the last bundle is
    returned.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("limit of an empty sequence")
    if len(seq) == 1:
        return seq[0]
    dists = [hausdorff(a, b, "co") for a, b in zip(seq, seq[1:])]
    if dists[-1] >= tol or not _monotone_tail(dists, tail):
        return None
    prev, last = seq[-2], seq[-1]
    if not extrapolate or dists[-1] == 0.0:
        return last
    match = pairwise_distances(last, prev, "co").argmin(axis=1)
    limit = 2.0 * last.points - prev.points[match]
    return Bundle.from_points(last.grid, limit, last.label)


@dataclass
class ClosureReport:
    """Outcome of closing a family.

    ``closed`` holds the closure of each sampled bundle (``None`` when every
    sampled bundle is closed already); ``nonclosed`` lists the indices whose
    closure gained members.  ``appended`` holds limit bundles found at the
    faces of a parameter box.  ``gaps[n]`` is the largest sup-metric Hausdorff
    distance at horizon ``n`` between anything the closure added and the
    sampled bundles (0 when nothing was added).  ``flags`` lists faces whose
    approach sequence was not Cauchy.
    """

    sampled: ExplicitFamily
    closed: tuple | None = None
    nonclosed: list = field(default_factory=list)
    appended: list = field(default_factory=list)
    appended_faces: list = field(default_factory=list)
    gaps: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    net_eps: float = 0.0
    cluster_tol: float = 0.0

    @property
    def family(self) -> ExplicitFamily:
        """Closed bundles followed by appended limits."""
        base = tuple(self.sampled.bundles) if self.closed is None else tuple(self.closed)
        params = None
        if self.sampled.params is not None:
            params = tuple(self.sampled.params) + tuple(None for _ in self.appended)
        return ExplicitFamily(base + tuple(self.appended), params, self.sampled.name)

    def adds_nothing(self, tol: float) -> bool:
        return all(g <= tol for g in self.gaps.values())

    def to_dict(self) -> dict:
        return {
            "sampled_bundles": len(self.sampled),
            "nonclosed_bundles": [
                {"index": i, "sampled_size": len(self.sampled[i]), "closed_size": len(self.closed[i])}
                for i in self.nonclosed
            ],
            "appended_bundles": [
                {"label": b.label, "size": len(b), "face": face}
                for b, face in zip(self.appended, self.appended_faces)
            ],
            "gaps": {str(n): g for n, g in sorted(self.gaps.items())},
            "non_cauchy_faces": list(self.flags),
            "net_eps": self.net_eps,
            "cluster_tol": self.cluster_tol,
        }


def _nearest_co(bundle: Bundle, pool: Sequence[Bundle]) -> float:
    return min(hausdorff(bundle, other, "co") for other in pool)


def _added_profile(added: Bundle, base: Bundle, horizon: int) -> np.ndarray:
    """Per-horizon distance from the members of ``added`` to the nearest member of ``base``."""
    return _sup_profiles(added, base, horizon).min(axis=1).max(axis=0)


def _close_explicit(family: ExplicitFamily, net_eps, cluster_tol, max_terms) -> ClosureReport:
    sampled, closed, nonclosed, flags = [], [], [], []
    gaps = np.zeros(family.horizon)
    for i, b in enumerate(family):
        if isinstance(b, Bundle):
            sampled.append(b)
            closed.append(b)
            continue
        s, c, f = b.close(net_eps, cluster_tol, max_terms)
        sampled.append(s)
        closed.append(c)
        flags.extend(f)
        known = set(s.trajectories)
        added = [x for x in c if x not in known]
        if added:
            prof = _added_profile(Bundle(tuple(added)), s, family.horizon)
            gaps = np.maximum(gaps, prof)
            if excess(Bundle(tuple(added)), s, "co") > cluster_tol:
                nonclosed.append(i)
    report = ClosureReport(ExplicitFamily(tuple(sampled), family.params, family.name),
                           tuple(closed), nonclosed, flags=flags,
                           net_eps=net_eps, cluster_tol=cluster_tol)
    report.gaps = {n: float(g) for n, g in enumerate(gaps, start=1)}
    return report


def closure_family(family: BundleFamily, net_eps: float = 1e-3, cluster_tol: float = 1e-6,
                   max_terms: int = 64) -> ClosureReport:
    """Approximate the closure of a family in the Hausdorff metric.

    An explicit family of finite bundles is closed already and passes through;
    a :class:`ParametricBundle` member is replaced by its closure.  A
    parametric family is sampled on its net; then, for every face of the box
    and every net point on it, the bundles along a parameter sequence halving
    its distance to the face are generated (until two consecutive bundles
    coincide or ``max_terms`` is reached).  A Cauchy run contributes its limit
    bundle when that limit is farther than ``cluster_tol`` from every bundle
    held so far; a non-Cauchy run is recorded in ``flags``.
    """
    if net_eps <= 0 or cluster_tol <= 0:
        raise ValueError("net_eps and cluster_tol must be positive")
    if isinstance(family, ExplicitFamily):
        if not family.is_finite:
            return _close_explicit(family, net_eps, cluster_tol, max_terms)
        return ClosureReport(family, gaps={n: 0.0 for n in range(1, family.horizon + 1)},
                             net_eps=net_eps, cluster_tol=cluster_tol)

    sampled = family.sample(net_eps)
    report = ClosureReport(sampled, net_eps=net_eps, cluster_tol=cluster_tol)
    for face, params in family.face_approaches(net_eps, max_terms):
        seq = []
        for z in params:
            bundle = family(z)
            if seq and hausdorff(seq[-1], bundle, "co") == 0.0:
                seq.append(bundle)
                break
            seq.append(bundle)
        if not seq:
            continue
        limit = limit_bundle(seq, cluster_tol)
        if limit is None:
            report.flags.append(face)
            continue
        pool = list(sampled.bundles) + report.appended
        if _nearest_co(limit, pool) > cluster_tol:
            report.appended.append(
                Bundle(limit.trajectories, f"limit {face['side']} face axis {face['axis']}")
            )
            report.appended_faces.append(face)

    horizon = sampled.horizon
    gaps = np.zeros(horizon)
    for limit in report.appended:
        nearest = np.min([hausdorff_profile(limit, s, horizon) for s in sampled], axis=0)
        gaps = np.maximum(gaps, nearest)
    report.gaps = {n: float(g) for n, g in enumerate(gaps, start=1)}
    return report


@dataclass(frozen=True)
class Membership:
    member: bool
    gaps: dict
    tol: float

    def __bool__(self):
        return self.member


def member_of_extension(phi: Bundle, family: BundleFamily | ClosureReport, horizons: Sequence[int],
                        tol: float = 1e-2, net_eps: float = 1e-3,
                        cluster_tol: float = 1e-6) -> Membership:
    """Test whether every restriction ``phi_n`` lies within ``tol`` of the closed family.

    ``gaps[n]`` is the smallest sup-metric Hausdorff distance at horizon ``n``
    between ``phi`` and a member of the closure.  A precomputed
    :class:`ClosureReport` may be passed instead of a family.
    """
    report = family if isinstance(family, ClosureReport) else closure_family(family, net_eps, cluster_tol)
    horizons = sorted(set(int(n) for n in horizons))
    top = max(horizons)
    if top > phi.horizon or top > report.sampled.horizon:
        raise ValueError(f"horizon {top} exceeds the grids")
    profiles = np.min([hausdorff_profile(phi, psi, top) for psi in report.family], axis=0)
    gaps = {n: float(profiles[n - 1]) for n in horizons}
    return Membership(all(g <= tol for g in gaps.values()), gaps, tol)


# --------------------------------------------------------------------------
# dumps


def dump_bundle(bundle: Bundle, directory) -> Path:
    """Write one CSV per trajectory plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, x in enumerate(bundle):
        name = f"traj_{i:04d}.csv"
        x.to_csv(directory / name)
        entries.append({"file": name, "label": x.label})
    manifest = {
        "label": bundle.label,
        "horizon": bundle.grid.horizon,
        "steps_per_unit": bundle.grid.steps_per_unit,
        "dim": bundle.dim,
        "trajectories": entries,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_bundle(directory) -> Bundle:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    grid = TimeGrid(manifest["horizon"], manifest["steps_per_unit"])
    members = []
    for entry in manifest["trajectories"]:
        x = Trajectory.from_csv(directory / entry["file"], label=entry["label"])
        if x.grid != grid or x.dim != manifest["dim"]:
            raise ValueError(f"{entry['file']} does not match the manifest grid")
        members.append(x)
    return Bundle(tuple(members), manifest["label"])
