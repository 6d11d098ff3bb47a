import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bundlegame.trajectory import (
    IncompatibleTrajectoriesError,
    TimeGrid,
    Trajectory,
    co_metric,
    make_grid,
    restrict,
    sup_distance,
)


def test_make_grid_nodes():
    assert np.array_equal(make_grid(1, 4).times, [0, 0.25, 0.5, 0.75, 1])
    assert np.array_equal(make_grid(2, 1).times, [0, 1, 2])
    # node count by enumeration
    assert make_grid(3, 64).size == len([k for k in range(10**4) if Fraction(k, 64) <= 3]) == 193


@pytest.mark.parametrize("args", [(0, 4), (1, 0), (-1, 2), (1.5, 2), (True, 2)])
def test_make_grid_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_node_times_are_exact():
    g = make_grid(3, 7)
    assert g.time(5) == Fraction(5, 7)
    assert g.restrict(1).size == 8


def test_sup_distance_examples():
    g = make_grid(2, 16)
    x = Trajectory.from_function(g, lambda t: t)
    assert sup_distance(x, x, 2) == 0.0
    assert sup_distance(Trajectory.constant(g, 0.0), Trajectory.constant(g, 1.0), 1) == 1.0
    y = Trajectory.from_function(g, lambda t: t * t)
    oracle = max(abs(k / 16 - (k / 16) ** 2) for k in range(33))
    assert oracle == 2.0
    assert sup_distance(x, y, 2) == oracle


def test_co_metric_hand_sums():
    g4 = make_grid(4, 8)
    assert co_metric(Trajectory.constant(g4, 0.0), Trajectory.constant(g4, 1.0)) == 15 / 16
    g2 = make_grid(2, 8)
    assert co_metric(Trajectory.constant(g2, 0.0), Trajectory.constant(g2, 0.5)) == 0.375
    x = Trajectory.from_function(g4, np.sin)
    assert co_metric(x, x) == 0.0


def test_incompatible_trajectories():
    a = Trajectory.constant(make_grid(2, 4), 0.0)
    b = Trajectory.constant(make_grid(2, 8), 0.0)
    c = Trajectory.constant(make_grid(2, 4), [0.0, 0.0])
    for other in (b, c):
        with pytest.raises(IncompatibleTrajectoriesError):
            sup_distance(a, other)
        with pytest.raises(IncompatibleTrajectoriesError):
            co_metric(a, other)


def test_sup_distance_rejects_long_horizon():
    a = Trajectory.constant(make_grid(2, 4), 0.0)
    with pytest.raises(ValueError):
        sup_distance(a, a, 3)


def test_restrict():
    rng = np.random.default_rng(3)
    g = make_grid(4, 4)
    x = Trajectory(g, rng.normal(size=(g.size, 2)))
    assert restrict(x, 4) == x
    assert restrict(restrict(x, 3), 1) == restrict(x, 1)
    assert restrict(x, 1).grid.size == 5
    with pytest.raises(ValueError):
        restrict(x, 5)


def test_interpolation_between_nodes():
    g = make_grid(1, 2)
    x = Trajectory(g, [0.0, 1.0, 3.0])
    assert x(0.25)[0] == 0.5
    assert x(0.75)[0] == 2.0


def test_equality_ignores_label_and_sign_of_zero():
    g = make_grid(1, 2)
    a = Trajectory(g, [0.0, -0.0, 1.0], "a")
    b = Trajectory(g, [0.0, 0.0, 1.0], "b")
    assert a == b and hash(a) == hash(b)
    with pytest.raises(ValueError):
        a.points[0, 0] = 5.0


def test_points_shape_checked():
    with pytest.raises(ValueError):
        Trajectory(make_grid(1, 2), [0.0, 1.0])


def test_csv_round_trip(tmp_path):
    g = make_grid(3, 7)
    x = Trajectory(g, np.random.default_rng(0).normal(size=(g.size, 2)) / 3, "x")
    x.to_csv(tmp_path / "x.csv")
    header = (tmp_path / "x.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2"
    y = Trajectory.from_csv(tmp_path / "x.csv")
    assert y == x and y.grid == g


def _traj(grid, dim):
    return arrays(np.float64, (grid.size, dim), elements=st.floats(-3, 3))


GRID = make_grid(3, 4)


@st.composite
def triples(draw):
    d = draw(st.integers(1, 3))
    return tuple(Trajectory(GRID, draw(_traj(GRID, d))) for _ in range(3))


@settings(max_examples=60, deadline=None)
@given(triples(), st.integers(1, 3))
def test_metric_axioms(xyz, n):
    x, y, z = xyz
    for d in (lambda a, b: sup_distance(a, b, n), co_metric):
        assert d(x, x) == 0.0
        assert d(x, y) >= 0.0
        assert abs(d(x, y) - d(y, x)) <= 1e-12
        assert d(x, z) <= d(x, y) + d(y, z) + 1e-12


@settings(max_examples=60, deadline=None)
@given(triples())
def test_co_tail_bound_and_restriction(xyz):
    x, y, _ = xyz
    co = co_metric(x, y)
    assert co <= 1.0
    for k in range(1, 4):
        assert co <= 2.0**-k + sup_distance(x, y, k) + 1e-12
        assert sup_distance(restrict(x, k), restrict(y, k), k) <= sup_distance(x, y, 3)
        assert sup_distance(restrict(x, k), restrict(y, k)) == sup_distance(x, y, k)
    assert math.isfinite(co)
