import numpy as np
import pytest

from bundlegame.bundle import Bundle, ExplicitFamily, ParametricFamily
from bundlegame.fixtures import example2, y_p
from bundlegame.game import (
    CostEvaluationError,
    CostFunctional,
    extended_maximin,
    inf_over_bundle,
    maximin,
    theorem1_check,
)
from bundlegame.trajectory import TimeGrid, Trajectory, co_metric

G = TimeGrid(8, 64)
C = CostFunctional.min_gauge(horizon=1, cap=1.0)


def const(*values, label=""):
    return Bundle(tuple(Trajectory.constant(G, v) for v in values), label)


def sweep_min(p):
    return min(1.0, min(abs((p * k / 64 - 1) ** 2) for k in range(65)))


def test_inf_over_bundle():
    assert inf_over_bundle(C, const(0.4)) == (0.4, 0)
    term = CostFunctional.terminal_gauge(time=1.0)
    b = Bundle((Trajectory.constant(G, 1.0), Trajectory.constant(G, 0.0)))
    assert inf_over_bundle(term, b) == (0.0, 1)
    ps = (1.0, 0.5, 0.25)
    b = Bundle(tuple(y_p(G, p) for p in ps))
    value, idx = inf_over_bundle(C, b)
    assert value == min(sweep_min(p) for p in ps)
    assert idx == 0


def test_inf_over_bundle_reports_failing_trajectory():
    bad = CostFunctional(lambda x: 1 / 0, "broken")
    with pytest.raises(CostEvaluationError, match="broken"):
        inf_over_bundle(bad, const(1.0, label="B"))


def test_maximin_examples():
    assert maximin([const(0.3, 0.5)], C).value == 0.3
    v = maximin([const(0.3), const(0.7)], C)
    assert (v.value, v.bundle_index, v.attained) == (0.7, 1, True)
    family = [Bundle((y_p(G, 2.0**-k),)) for k in range(11)]
    v = maximin(family, C)
    oracle = max(sweep_min(2.0**-k) for k in range(11))
    assert v.value == pytest.approx(oracle, abs=1e-15) and v.value < 1
    assert v.value == pytest.approx((1 - 2.0**-10) ** 2)


def test_maximin_ties_and_errors():
    assert maximin([const(0.5), const(0.5)], C).bundle_index == 0
    with pytest.raises(ValueError):
        maximin([], C)
    with pytest.raises(TypeError):
        maximin(example2().family, C)


def test_maximin_monotone_and_scaling():
    rng = np.random.default_rng(1)
    bundles = [const(*rng.uniform(0, 1, 3)) for _ in range(6)]
    values = [maximin(bundles[: k + 1], C).value for k in range(6)]
    assert values == sorted(values)
    v, w = maximin(bundles, C), maximin(bundles, C.scaled(3.0))
    assert w.value == pytest.approx(3 * v.value)
    assert (w.bundle_index, w.trajectory_index) == (v.bundle_index, v.trajectory_index)
    with pytest.raises(ValueError):
        C.scaled(-1)


def test_extended_maximin():
    fam = ExplicitFamily((const(0.2), const(0.6)))
    value, report = extended_maximin(fam, C)
    assert value == maximin(fam, C) and report.appended == []
    value, report = extended_maximin(example2().family, C)
    assert value.value == 1.0 and value.attained
    assert value.bundle_label == report.appended[0].label
    assert value.value >= maximin(report.sampled, C).value
    flat = ParametricFamily((0.0,), (1.0,), lambda p: const(0.25))
    assert extended_maximin(flat, C, net_eps=0.25)[0].value == 0.25
    with pytest.raises(ValueError):
        extended_maximin(fam, CostFunctional(lambda x: 0.0, continuous=False))


def test_theorem1_example2():
    r = theorem1_check(example2().family, C)
    assert r.extended.value == 1.0 and r.extended.attained
    assert r.original.value == pytest.approx((1 - 1e-3) ** 2, abs=1e-15)
    assert 0.98 <= r.original.value < 1 and r.agree
    d = r.to_dict()
    assert d["extended_witness"] == "limit lower face axis 0" and d["gap"] <= 2e-2


def test_theorem1_trivial_families():
    r = theorem1_check(ExplicitFamily((const(0.1), const(0.9))), C)
    assert r.gap == 0.0 and r.agree


def test_weighted_cost_is_co_distance():
    y = Trajectory.from_function(G, np.cos)
    x = Trajectory.from_function(G, np.sin)
    cost = CostFunctional.weighted(lambda t, p: np.abs(p[:, 0] - np.cos(t)), horizon=8)
    assert cost(x) == pytest.approx(co_metric(x, y), abs=1e-15)
