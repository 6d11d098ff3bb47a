import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundlegame.bundle import (
    Bundle,
    ExplicitFamily,
    GeneratorError,
    ParametricFamily,
    closure_family,
    dump_bundle,
    excess,
    hausdorff,
    hausdorff_profile,
    limit_bundle,
    load_bundle,
    member_of_extension,
    restrict_bundle,
)
from bundlegame.fixtures import example1, example2, y_p
from bundlegame.trajectory import IncompatibleTrajectoriesError, TimeGrid, Trajectory

G = TimeGrid(8, 64)


def const(grid, *values):
    return Bundle(tuple(Trajectory.constant(grid, v) for v in values))


def test_hausdorff_examples():
    g = TimeGrid(2, 4)
    a, b = const(g, 0.0), const(g, 0.0, 1.0)
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, b, "sup") == 1.0
    assert hausdorff(a, b, "co") == 0.75


def test_hausdorff_example2_pair_node_sweep():
    a, b = Bundle((y_p(G, 0.5),)), Bundle((y_p(G, 0.25),))
    oracle = max(abs((0.5 * k / 64 - 1) ** 2 - (0.25 * k / 64 - 1) ** 2) for k in range(65))
    assert hausdorff(a, b, "sup", 1) == pytest.approx(oracle, abs=1e-15)


def test_incompatible_bundles():
    with pytest.raises(IncompatibleTrajectoriesError):
        hausdorff(const(TimeGrid(1, 2), 0.0), const(TimeGrid(1, 4), 0.0))
    with pytest.raises(IncompatibleTrajectoriesError):
        Bundle((Trajectory.constant(G, 0.0), Trajectory.constant(G, [0.0, 1.0])))


def test_bundle_set_semantics():
    b = const(G, 1.0, 1.0, 2.0)
    assert len(b) == 2
    assert b == const(G, 2.0, 1.0)
    with pytest.raises(ValueError):
        Bundle(())


def test_restrict_bundle():
    g = TimeGrid(3, 4)
    x = Trajectory(g, np.r_[np.zeros(5), np.arange(1, 9)])
    b = Bundle((Trajectory.constant(g, 0.0), x))
    assert restrict_bundle(b, 3) is b
    assert len(restrict_bundle(b, 1)) == 1
    assert len(restrict_bundle(b, 2)) == 2
    with pytest.raises(ValueError):
        restrict_bundle(b, 4)


GRID = TimeGrid(3, 4)


@st.composite
def bundles(draw):
    size = draw(st.integers(1, 3))
    pts = draw(st.lists(st.lists(st.floats(-2, 2), min_size=GRID.size, max_size=GRID.size),
                        min_size=size, max_size=size))
    return Bundle.from_points(GRID, np.array(pts))


@settings(max_examples=60, deadline=None)
@given(bundles(), bundles(), bundles(), st.integers(1, 3))
def test_hausdorff_axioms_and_monotonicity(a, b, c, n):
    for metric in ("sup", "co"):
        d = lambda u, v: hausdorff(u, v, metric)
        assert d(a, a) == 0.0
        assert abs(d(a, b) - d(b, a)) <= 1e-12
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-12
    prof = hausdorff_profile(a, b)
    assert np.all(np.diff(prof) >= 0)
    assert hausdorff(restrict_bundle(a, n), restrict_bundle(b, n)) == hausdorff(a, b, "sup", n)


def test_excess_is_one_sided():
    small, big = const(G, 1.0), const(G, 1.0, 3.0)
    assert excess(small, big) == 0.0
    assert excess(big, small) > 0.0


def test_limit_bundle():
    b = const(G, 0.3)
    assert limit_bundle([b, b, b]) == b
    seq = [Bundle((y_p(G, 2.0**-k),)) for k in range(1, 40)]
    lim = limit_bundle(seq)
    assert lim is not None
    assert np.abs(lim.points - 1.0).max() <= 1e-9
    far = [const(G, 0.0), const(G, 5.0)] * 4
    assert limit_bundle(far) is None
    with pytest.raises(ValueError):
        limit_bundle([])


def test_closure_example2_appends_constant_one():
    report = closure_family(example2().family)
    assert len(report.appended) == 1
    y0 = report.appended[0]
    assert hausdorff(y0, const(G, 1.0), "co") <= 1e-6
    assert report.flags == []
    assert len(report.sampled) == 1000
    # closure gap at horizon n: distance from y_0 to the nearest sampled y_p, p >= 1e-3
    for n, gap in report.gaps.items():
        oracle = min(max(abs((p * k / 64 - 1) ** 2 - 1) for k in range(64 * n + 1))
                     for p in np.linspace(1e-3, 1, 1000))
        assert gap == pytest.approx(oracle, abs=1e-12)


def test_closure_of_explicit_family_passes_through():
    fam = ExplicitFamily((const(G, 1.0), const(G, 2.0)))
    report = closure_family(fam)
    assert report.appended == [] and report.family.bundles == fam.bundles
    assert report.adds_nothing(0.0)


def test_closure_of_constant_generator():
    fam = ParametricFamily((0.0,), (1.0,), lambda p: const(G, 0.5), open_lower=True, inset=0.1)
    report = closure_family(fam, net_eps=0.1)
    assert report.appended == []
    assert len(set(report.sampled.bundles)) == 1


def test_closure_flags_non_cauchy_face():
    fam = ParametricFamily((0.0,), (1.0,), lambda p: const(G, math.sin(1 / p)),
                           open_lower=True, inset=0.01)
    report = closure_family(fam, net_eps=0.1)
    assert any(f["side"] == "lower" for f in report.flags)
    assert report.appended == []


def test_closure_rejects_bad_tolerances():
    with pytest.raises(ValueError):
        closure_family(example2().family, net_eps=0.0)


def test_generator_error_carries_parameter():
    fam = ParametricFamily((0.0,), (1.0,), lambda p: 1 / 0)
    with pytest.raises(GeneratorError) as info:
        fam.sample(0.5)
    assert info.value.param == 0.0


def test_closure_of_example1_bundle_gains_zero():
    report = closure_family(example1().family)
    assert report.nonclosed == [0]
    closed = report.family[0]
    assert min(np.abs(x.points).max() for x in closed) <= 1e-9
    assert min(np.abs(x.points).max() for x in report.sampled[0]) == 1 / 128


def test_member_of_extension():
    fam = example2().family
    report = closure_family(fam)
    res = member_of_extension(const(G, 1.0), report, range(1, 5))
    assert res.member and max(res.gaps.values()) <= 1e-2
    # dense p sweep: the gap min_p max_{t<=n} |y_p - 1| tends to 0 as p -> 0
    for n in range(1, 5):
        sweep = [max(abs((p * k / 64 - 1) ** 2 - 1) for k in range(64 * n + 1))
                 for p in np.geomspace(1e-6, 1, 200)]
        assert min(sweep) <= 1e-4
    res2 = member_of_extension(const(G, 2.0), report, range(1, 5))
    assert not res2.member and res2.gaps[1] >= 1.0
    phi = fam(0.37)
    assert member_of_extension(phi, report, [1, 2, 3]).gaps == {1: 0.0, 2: 0.0, 3: 0.0}


def test_projective_consistency():
    fam = example2().family
    full = closure_family(fam)
    for n in (2, 5):
        part = closure_family(fam.restricted(n))
        assert len(part.appended) == 1
        d = hausdorff(restrict_bundle(full.appended[0], n), part.appended[0], "sup")
        assert d <= 2 * 1e-3 * 2 * n  # Lipschitz constant of p -> y_p on [0, n] is <= 2n


def test_dump_and_load(tmp_path):
    b = Bundle((y_p(G, 0.5), y_p(G, 0.125)), "pair")
    dump_bundle(b, tmp_path / "b")
    back = load_bundle(tmp_path / "b")
    assert back == b and back.label == "pair"
    assert sorted(p.name for p in (tmp_path / "b").iterdir()) == ["manifest.json", "traj_0000.csv", "traj_0001.csv"]
