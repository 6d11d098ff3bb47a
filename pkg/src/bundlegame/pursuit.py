"""Target sets, hitting times and the exact/robust evasion checks.

Infinite-horizon statements are certified up to the largest tested horizon;
every result carries that horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .bundle import (
    Bundle,
    BundleFamily,
    ClosureReport,
    ExplicitFamily,
    as_explicit,
    closure_family,
    excess,
)
from .trajectory import Trajectory

INF = math.inf


@dataclass(frozen=True)
class TargetSet:
    """The closed set ``{(t, x) : gauge(t, x) <= 0}``.

    ``gauge(t, x)`` takes node times of shape ``(K,)`` and states of shape
    ``(K, d)`` and returns ``(K,)`` values.  Continuity is the caller's contract.
    """

    gauge: Callable
    description: str = ""

    def values(self, x: Trajectory, n: int | None = None) -> np.ndarray:
        k = x.grid.size if n is None else x.grid.last_node(n) + 1
        return np.asarray(self.gauge(x.grid.times[:k], x.points[:k]), dtype=float).reshape(k)

    def inflate(self, eps: float) -> "InflatedTarget":
        return InflatedTarget(self, eps)

    @classmethod
    def point(cls, center=0.0) -> "TargetSet":
        """``T x {center}`` with the distance gauge ``|x - center|``."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(lambda t, x: np.linalg.norm(x - c, axis=-1), f"T x {{{', '.join(map(str, c))}}}")

    @classmethod
    def empty(cls) -> "TargetSet":
        return cls(lambda t, x: np.ones(len(t)), "empty")

    @classmethod
    def everything(cls) -> "TargetSet":
        return cls(lambda t, x: -np.ones(len(t)), "T x X")


class InflatedTarget(TargetSet):
    """``{gauge <= eps}``; contains the base set in its interior for distance-like gauges."""

    def __init__(self, base: TargetSet, eps: float):
        if not eps > 0:
            raise ValueError("inflation eps must be positive")
        g = base.gauge
        super().__init__(lambda t, x: np.asarray(g(t, x), dtype=float) - eps,
                         f"{base.description} inflated by {eps}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "eps", float(eps))


def _first_node(mask: np.ndarray, x: Trajectory) -> float:
    hits = np.flatnonzero(mask)
    return float(hits[0] / x.grid.steps_per_unit) if hits.size else INF


def hitting_time(x: Trajectory, target: TargetSet, n: int | None = None) -> float:
    """First node time ``t_k <= n`` with ``(t_k, x(t_k))`` in the target, else ``inf``."""
    n = x.horizon if n is None else n
    if not 0 <= n <= x.horizon:
        raise ValueError(f"horizon {n} outside [0, {x.horizon}]")
    return _first_node(target.values(x, n) <= 0, x)


def exit_time(x: Trajectory, tube: TargetSet, n: int | None = None) -> float:
    """First node time where ``x`` leaves the tube ``{gauge <= 0}``, else ``inf``."""
    n = x.horizon if n is None else n
    if not 0 <= n <= x.horizon:
        raise ValueError(f"horizon {n} outside [0, {x.horizon}]")
    return _first_node(tube.values(x, n) > 0, x)


def _bundle_hits(bundle: Bundle, target: TargetSet, n: int) -> float:
    return min(hitting_time(x, target, n) for x in bundle)


def _check_horizons(family: ExplicitFamily, horizons: Sequence[int]) -> list:
    horizons = sorted(set(int(n) for n in horizons))
    if not horizons or horizons[0] < 1:
        raise ValueError("horizons must be positive integers")
    if horizons[-1] > family.horizon:
        raise ValueError(f"horizon {horizons[-1]} exceeds family horizon {family.horizon}")
    return horizons


class CMValue(NamedTuple):
    """Per-horizon values of the evasion game; ``infinite`` means infinite at every tested horizon."""

    values: dict
    infinite: bool
    horizon: int


def value_CM(family: BundleFamily, target: TargetSet, horizons: Sequence[int],
             net_eps: float = 1e-3) -> CMValue:
    """``sup`` over bundles of the earliest hitting time, per horizon.

    At horizon ``n`` a bundle whose members all avoid the target on ``[0, n]``
    makes the value ``inf``.
    """
    family = as_explicit(family, net_eps)
    horizons = _check_horizons(family, horizons)
    top = horizons[-1]
    firsts = np.array([_bundle_hits(b, target, top) for b in family])
    values = {}
    for n in horizons:
        capped = np.where(firsts <= n, firsts, INF)
        values[n] = float(capped.max())
    return CMValue(values, all(math.isinf(v) for v in values.values()), top)


class Certificate(NamedTuple):
    """Finite-horizon certificate: ``holds`` up to ``horizon`` with ``witness``."""

    holds: bool
    witness: object
    horizon: int
    detail: dict = {}


def is_exact(family: BundleFamily, target: TargetSet, horizons: Sequence[int],
             margin: float = 0.0, net_eps: float = 1e-3) -> Certificate:
    """Is there one bundle whose members keep ``gauge > margin`` on all of ``[0, N_max]``?

    A bundle's clearance is the smallest gauge value its members reach up to
    ``N_max``.  The witness is the bundle of largest clearance (lowest index on
    ties), so the most comfortable evader is reported rather than the first.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    family = as_explicit(family, net_eps)
    top = _check_horizons(family, horizons)[-1]
    clearance = [min(float(target.values(x, top).min()) for x in bundle) for bundle in family]
    best = int(np.argmax(clearance))
    if clearance[best] > margin:
        return Certificate(True, best, top, {"bundle_label": family[best].label, "margin": margin,
                                             "clearance": clearance[best]})
    return Certificate(False, None, top, {"margin": margin, "clearance": clearance[best]})


def is_robust(family: BundleFamily, target: TargetSet, eps_list: Sequence[float],
              horizons: Sequence[int], net_eps: float = 1e-3) -> Certificate:
    """Does avoidance survive inflating the target by some ``eps`` from ``eps_list``?

    ``eps_list`` is scanned in descending order; the witness is the first
    (largest) ``eps`` whose inflated game is infinite at every tested horizon.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if not eps_list or eps_list[-1] <= 0:
        raise ValueError("eps_list must hold positive values")
    family = as_explicit(family, net_eps)
    sweep = {}
    witness = None
    for eps in eps_list:
        cm = value_CM(family, target.inflate(eps), horizons)
        sweep[eps] = cm.values
        if cm.infinite:
            witness = eps
            break
    return Certificate(witness is not None, witness, cm.horizon, {"sweep": sweep})


@dataclass(frozen=True)
class EvasionReport:
    values: CMValue
    exact_original: Certificate
    robust_original: Certificate
    exact_extended: Certificate
    closure: ClosureReport | None

    @property
    def verdict(self) -> str:
        return "AGREE" if self.robust_original.holds == self.exact_extended.holds else "DISAGREE"

    @property
    def classification(self) -> str:
        return "infinite-up-to-horizon" if self.values.infinite else "finite"

    def to_dict(self) -> dict:
        def cert(c):
            detail = {k: v for k, v in c.detail.items() if k != "sweep"}
            if "sweep" in c.detail:
                detail["sweep"] = {repr(e): _table(v) for e, v in c.detail["sweep"].items()}
            return {"holds": c.holds, "witness": c.witness, "horizon": c.horizon, **detail}

        return {
            "horizon": self.values.horizon,
            "values": _table(self.values.values),
            "classification": self.classification,
            "exact_original": cert(self.exact_original),
            "robust_original": cert(self.robust_original),
            "exact_extended": cert(self.exact_extended),
            "verdict": self.verdict,
            "closure": None if self.closure is None else self.closure.to_dict(),
        }


def _table(values: dict) -> dict:
    return {str(n): ("INF" if math.isinf(v) else v) for n, v in sorted(values.items())}


def theorem2_check(family: BundleFamily, target: TargetSet, eps_list: Sequence[float],
                   horizons: Sequence[int], net_eps: float = 1e-3, cluster_tol: float = 1e-6,
                   margin: float = 0.0, probe: ExplicitFamily | None = None) -> EvasionReport:
    """Robustness of the original family against exactness of its closure.

    Exactness of the original family is also reported, certified on ``probe``
    when given: a finite horizon cannot see a bundle that fails only later,
    so a probe net whose failures fall inside the horizon is more telling.
    """
    report = closure_family(family, net_eps, cluster_tol)
    original = report.sampled
    return EvasionReport(
        values=value_CM(original, target, horizons),
        exact_original=is_exact(original if probe is None else probe, target, horizons, margin),
        robust_original=is_robust(original, target, eps_list, horizons),
        exact_extended=is_exact(report.family, target, horizons, margin),
        closure=report,
    )


@dataclass(frozen=True)
class CorollaryReport:
    """Verdicts are ``AGREE``, ``DISAGREE`` or ``SKIPPED`` (precondition not met)."""

    corollary1: str
    corollary2: str
    exact: Certificate
    robust: Certificate
    closure_gaps: dict
    contained: list

    def to_dict(self) -> dict:
        return {
            "corollary1": self.corollary1,
            "corollary2": self.corollary2,
            "exact": {"holds": self.exact.holds, "witness": self.exact.witness},
            "robust": {"holds": self.robust.holds, "witness": self.robust.witness},
            "horizon": self.exact.horizon,
            "closure_gaps": {str(n): g for n, g in sorted(self.closure_gaps.items())},
            "appended_contain_original": self.contained,
        }


def corollary_checks(family: BundleFamily, target: TargetSet, eps_list: Sequence[float],
                     horizons: Sequence[int], net_eps: float = 1e-3, cluster_tol: float = 1e-6,
                     membership_tol: float = 1e-2, containment_tol: float | None = None,
                     margin: float = 0.0, closure: ClosureReport | None = None) -> CorollaryReport:
    """Exactness against robustness when the closure adds nothing, or only supersets.

    Both need every sampled bundle to be closed.  The first check applies
    when every closure gap is within ``membership_tol``.  The second applies when each appended limit contains
    a sampled bundle up to ``containment_tol`` (one-sided compact-open distance).
    """
    report = closure if closure is not None else closure_family(family, net_eps, cluster_tol)
    containment_tol = cluster_tol if containment_tol is None else containment_tol
    original = report.sampled
    exact = is_exact(original, target, horizons, margin)
    robust = is_robust(original, target, eps_list, horizons)
    verdict = "AGREE" if exact.holds == robust.holds else "DISAGREE"

    # a bundle that is not closed takes the family outside the setting of both corollaries
    closed_members = not report.nonclosed
    cor1 = verdict if closed_members and report.adds_nothing(membership_tol) else "SKIPPED"
    contained = []
    for limit in report.appended:
        gaps = [excess(s, limit, "co") for s in original]
        j = int(np.argmin(gaps))
        contained.append({"limit": limit.label, "nearest_subset": j, "excess": float(gaps[j]),
                          "ok": bool(gaps[j] <= containment_tol)})
    cor2 = verdict if closed_members and all(c["ok"] for c in contained) else "SKIPPED"
    return CorollaryReport(cor1, cor2, exact, robust, dict(report.gaps), contained)
