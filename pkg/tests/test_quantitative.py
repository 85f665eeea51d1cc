import numpy as np
import pytest

from stealthbias import Dataset, GroundCost, InfeasibleError, quantitative_stealth_measure
from stealthbias.quantitative import band_violation

from _oracles import lp_quantitative


def band_rows(v, y, target, tol):
    rows = []
    for cls in np.unique(y):
        inside = (y == cls).astype(float)
        rows.append(inside * (v - target - tol))
        rows.append(inside * (target - tol - v))
    return np.array(rows)


def random_instance(rng, max_n=6):
    N = int(rng.integers(2, max_n + 1))
    x = rng.random((N, 2))
    y = rng.integers(0, 2, N)
    data = Dataset(x, rng.integers(0, 2, N), y)
    K = int(rng.integers(1, N + 1))
    return data, K, float(rng.random()), float(rng.uniform(0.02, 0.3))


def test_matches_direct_lp():
    rng = np.random.default_rng(31)
    cost = GroundCost()
    solved = infeasible = 0
    for _ in range(40):
        data, K, target, tol = random_instance(rng)
        v = data.features[:, 1]
        pts = cost.points(data)
        want, _ = lp_quantitative(cost.matrix(pts, pts), K, band_rows(v, data.decision, target, tol))
        if want is None:
            with pytest.raises(InfeasibleError):
                quantitative_stealth_measure(data, target, tol, sample_size=K, sensitive_feature=1)
            infeasible += 1
            continue
        plan = quantitative_stealth_measure(data, target, tol, sample_size=K, sensitive_feature=1)
        assert plan.objective == pytest.approx(want, rel=1e-4, abs=1e-9)
        assert plan.measure.total_mass == pytest.approx(K)
        assert band_violation(data, plan.weights, target, tol, 1) <= 1e-7
        solved += 1
    assert solved >= 10 and infeasible >= 1


def test_non_binding_band_returns_uniform():
    rng = np.random.default_rng(2)
    data = Dataset(rng.random((10, 2)), rng.integers(0, 2, 10), rng.integers(0, 2, 10))
    plan = quantitative_stealth_measure(data, 0.5, 10.0, sample_size=4, sensitive_feature=1)
    assert np.array_equal(plan.weights, np.full(10, 0.4))
    assert plan.objective == 0.0


def test_own_class_means_are_already_feasible():
    rng = np.random.default_rng(3)
    data = Dataset(rng.random((12, 2)), rng.integers(0, 2, 12), np.tile([0, 1], 6))
    v = data.features[:, 1]
    means = {c: float(v[data.decision == c].mean()) for c in (0, 1)}
    plan = quantitative_stealth_measure(data, means, 1e-6, sample_size=6, sensitive_feature=1)
    assert np.array_equal(plan.weights, np.full(12, 0.5))
    assert plan.objective == 0.0


def test_binding_band_moves_class_means():
    rng = np.random.default_rng(4)
    data = Dataset(rng.random((30, 1)), rng.integers(0, 2, 30), rng.integers(0, 2, 30))
    # sensitive codes as the attribute: force each class to be about 80% group 1
    plan = quantitative_stealth_measure(data, 0.8, 0.05, sample_size=10)
    assert band_violation(data, plan.weights, 0.8, 0.05) <= 1e-7
    assert plan.objective > 0
    assert plan.bin_spec is None and plan.K == 10


def test_argument_checks():
    data = Dataset(np.zeros(3), [0, 1, 0], [0, 1, 1])
    with pytest.raises(ValueError):
        quantitative_stealth_measure(data, 0.5, 0.0, sample_size=2)
    with pytest.raises(ValueError):
        quantitative_stealth_measure(data, 0.5, 0.1, sample_size=5)
    with pytest.raises(InfeasibleError):
        quantitative_stealth_measure(data, 5.0, 0.1, sample_size=2)
