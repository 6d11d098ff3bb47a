"""Acceptance checks, one test per criterion; each records a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np

from bundlegame.bundle import Bundle, closure_family, hausdorff, member_of_extension
from bundlegame.cli import main
from bundlegame.fixtures import bilinear_system, example1, example2
from bundlegame.game import CostFunctional, theorem1_check
from bundlegame.pursuit import theorem2_check
from bundlegame.relaxed import (
    EtaMeasure,
    NuMeasure,
    Selection,
    bilinear_dynamics,
    consistent_etas,
    continuity_probe,
    gronwall_bound,
    linear_dynamics,
    proposition1_check,
    selection_count,
    traj_of_eta,
)
from bundlegame.reports import report_diff
from bundlegame.suite import metric_suite
from bundlegame.trajectory import TimeGrid, Trajectory

LIN = linear_dynamics((-1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), x0=1.0)


def test_criterion_1_metric_suite(report_line):
    start = time.perf_counter()
    res = metric_suite(trials=200, seed=0, horizon=4, steps_per_unit=32, max_dim=3, tol=1e-12)
    elapsed = time.perf_counter() - start
    worst = max(res.worst.values())
    ok = res.passed and elapsed < 5.0 and "co:tail" in res.worst
    report_line(1, ok, f"{res.checks} axiom checks, worst violation {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_2_theorem1_example2(report_line):
    cost = CostFunctional.min_gauge(horizon=1.0, cap=1.0)
    start = time.perf_counter()
    r = theorem1_check(example2(p_min=1e-3, steps_per_unit=64).family, cost, tol=2e-2, net_eps=1e-3)
    elapsed = time.perf_counter() - start
    witness = r.closure.family[r.extended.bundle_index]
    is_appended = r.extended.bundle_index >= len(r.closure.sampled)
    constant_one = len(witness) == 1 and np.abs(witness.points - 1.0).max() <= 1e-12
    ok = (r.extended.value == 1.0 and r.extended.attained and is_appended and constant_one
          and 0.98 <= r.original.value < 1.0 and r.gap <= 2e-2 and elapsed < 10.0)
    report_line(2, ok, f"extended {r.extended.value} attained={r.extended.attained} at {witness.label!r}, "
                       f"sampled sup {r.original.value:.6f}, gap {r.gap:.2e} (<= 2e-2), {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_3_membership(report_line):
    fx = example2()
    report = closure_family(fx.family)
    grid = TimeGrid(8, 64)
    one = Bundle((Trajectory.constant(grid, 1.0),))
    two = Bundle((Trajectory.constant(grid, 2.0),))
    yes = member_of_extension(one, report, range(1, 5), tol=1e-2)
    no = member_of_extension(two, report, range(1, 5), tol=1e-2)
    ok = yes.member and max(yes.gaps.values()) <= 1e-2 and not no.member and min(no.gaps.values()) >= 0.9
    report_line(3, ok, f"constant 1 gaps max {max(yes.gaps.values()):.2e} (<= 1e-2); "
                       f"constant 2 gaps min {min(no.gaps.values()):.3f} (>= 0.9)")
    assert ok


def test_criterion_4_theorem2(report_line):
    fx1 = example1()
    start = time.perf_counter()
    r1 = theorem2_check(fx1.family, fx1.target, [0.2, 0.1, 0.05, 0.01], range(1, 9))
    t1 = time.perf_counter() - start
    ok1 = (r1.exact_original.holds and not r1.robust_original.holds and not r1.exact_extended.holds
           and r1.verdict == "AGREE" and t1 < 10.0)

    fx2 = example2()
    eps = 0.1
    start = time.perf_counter()
    r2 = theorem2_check(fx2.family, fx2.target, [eps], range(1, 9), margin=eps,
                        probe=fx2.extras["exact_probe"])
    t2 = time.perf_counter() - start
    witness = r2.closure.family[r2.exact_extended.witness] if r2.exact_extended.holds else None
    y0 = witness is not None and np.abs(witness.points - 1.0).max() <= 1e-12
    ok2 = (r2.robust_original.holds and r2.robust_original.witness == eps and r2.exact_extended.holds
           and y0 and r2.exact_extended.detail["clearance"] >= eps and not r2.exact_original.holds
           and r2.verdict == "AGREE" and t2 < 10.0)
    report_line(4, ok1 and ok2,
                f"example1 exact={r1.exact_original.holds} robust={r1.robust_original.holds} "
                f"extended exact={r1.exact_extended.holds} {r1.verdict} ({t1:.2f}s); "
                f"example2 robust={r2.robust_original.holds} (eps {r2.robust_original.witness}) "
                f"extended exact={r2.exact_extended.holds} via {witness.label if witness else None!r} "
                f"margin {eps} {r2.verdict} ({t2:.2f}s)")
    assert ok1 and ok2


def test_criterion_5_relaxed_oracles(report_line):
    rng = np.random.default_rng(11)
    grid = TimeGrid(3, 2)
    cells = grid.horizon * grid.steps_per_unit
    pi, qi = rng.integers(0, 3, cells), rng.integers(0, 3, cells)
    x = traj_of_eta(EtaMeasure.dirac(grid, 3, 3, pi, qi), LIN, 64)
    ref = [np.array([1.0])]
    for k in range(3 * 64):
        c = k // 32
        ref.append(ref[-1] + (1 / 64) * (np.array([LIN.p_atoms[pi[c], 0]]) + np.array([LIN.q_atoms[qi[c], 0]])))
    bitwise = np.array_equal(x.points, np.array(ref))

    sym = linear_dynamics((-1.0, 1.0), (-1.0, 1.0), x0=1.0)
    flat = traj_of_eta(EtaMeasure(TimeGrid(2, 4), np.full((8, 2, 2), 0.25)), sym)
    sym_err = float(np.abs(flat.points - 1.0).max())

    growth = bilinear_dynamics(1.0, (0.0,), (0.0,), x0=1.0)
    one = EtaMeasure(TimeGrid(1, 1), np.ones((1, 1, 1)))
    errs = [abs(traj_of_eta(one, growth, m).points[-1, 0] - math.e) for m in (64, 128)]
    ratio = errs[0] / errs[1]
    ok = bitwise and sym_err == 0.0 and 1.7 <= ratio <= 2.3
    report_line(5, ok, f"Dirac bitwise={bitwise}, uniform symmetry error {sym_err}, Euler halving ratio {ratio:.3f} in [1.7, 2.3]")
    assert ok


def test_criterion_6_consistency(report_line):
    grid = TimeGrid(4, 2)
    rng = np.random.default_rng(12)
    nu = NuMeasure(grid, rng.dirichlet(np.ones(3), size=8))
    etas = consistent_etas(nu, 3, Selection("sample", count=1000 - 27, seed=3))
    worst = max(e.consistency_error(nu) for e in etas)

    def enumeration(n_p, n_q):
        mats = set()
        for choice in itertools.product(range(n_p), repeat=n_q):
            w = np.zeros((n_p, n_q))
            w[list(choice), range(n_q)] = 1.0 / n_q
            mats.add(w.tobytes())
        return len(mats)

    counts = {}
    for n_p, n_q in ((2, 2), (3, 2)):
        one_cell = NuMeasure.uniform(TimeGrid(1, 1), n_q)
        got = len({e.weights.tobytes() for e in consistent_etas(one_cell, n_p, Selection("all"))})
        counts[(n_p, n_q)] = (got, selection_count(one_cell, n_p), enumeration(n_p, n_q), n_p**n_q)
    two_cells = NuMeasure.uniform(TimeGrid(2, 1), 2)
    per_cell = len(consistent_etas(two_cells, 3, Selection("all"))) == (3**2) ** 2
    ok = len(etas) == 1000 and worst <= 1e-15 and all(len(set(v)) == 1 for v in counts.values()) and per_cell
    report_line(6, ok, f"{len(etas)} sampled etas, worst marginal error {worst:.1e} (<= 1e-15); "
                       f"all-selection counts {[v[0] for v in counts.values()]} = [2^2, 3^2]")
    assert ok


def test_criterion_7_continuity_probe(report_line):
    nu = NuMeasure.dirac(TimeGrid(2, 1), 3, 2)
    deltas = [0.1, 0.05, 0.025, 0.0125]
    table = continuity_probe(nu, LIN, deltas, Selection("all"))
    shifts = [table[d] for d in deltas]
    monotone = all(a > b for a, b in zip(shifts, shifts[1:]))
    ratios = [a / b for a, b in zip(shifts, shifts[1:])]
    bounds = [gronwall_bound(LIN, 2, d) for d in deltas]
    within = all(s <= b * (1 + 1e-12) for s, b in zip(shifts, bounds))
    ok = monotone and min(ratios) >= 1.8 and within
    report_line(7, ok, f"shifts {[round(s, 6) for s in shifts]}, halving ratios min {min(ratios):.3f} (>= 1.8), "
                       f"within Gronwall bound {within}")
    assert ok


def test_criterion_8_proposition1(report_line):
    fx = bilinear_system()
    start = time.perf_counter()
    r = proposition1_check(fx.extras["dynamics"], fx.target, fx.extras["nu_samples"], fx.eps_list,
                           range(1, 7), fx.extras["strategy"], fx.extras["steps_per_unit"])
    elapsed = time.perf_counter() - start
    gap = max(r.closure.gaps.values())
    ok = (r.closure_adds_nothing and gap <= r.membership_tol and r.exact.holds == r.robust.holds
          and r.exact.horizon == 6 and r.verdict == "AGREE" and elapsed < 60.0)
    report_line(8, ok, f"closure gap {gap:.2e} (<= {r.membership_tol}), exact={r.exact.holds} "
                       f"robust={r.robust.holds} up to horizon {r.exact.horizon}, {r.verdict}, {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_9_determinism(report_line, tmp_path):
    configs = [
        ["fixture", "example1", "theorem2"],
        ["fixture", "example2", "theorem1"],
        ["metric-suite", "--seed", "7"],
        ["relaxed", "--seed", "5", "--horizon", "3"],
    ]
    same = []
    for i, argv in enumerate(configs):
        paths = []
        for run in range(2):
            out = tmp_path / f"{i}-{run}"
            assert main([*argv, "--out", str(out)]) == 0
            paths.append(next(p for p in out.glob("*.json") if not p.name.endswith(".runtime.json")))
        same.append(paths[0].read_bytes() == paths[1].read_bytes() and report_diff(*paths).same)
    ok = all(same)
    report_line(9, ok, f"{sum(same)}/{len(same)} configs byte-identical across reruns with the same seed")
    assert ok
