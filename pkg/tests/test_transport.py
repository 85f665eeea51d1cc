import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stealthbias import Dataset, GroundCost, empirical_wd, transport_cost
from stealthbias.transport import rational_scale

from _oracles import lp_transport, permutation_wd


def dataset(x, s=None):
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    n = len(x)
    s = np.zeros(n, int) if s is None else np.asarray(s)
    return Dataset(x, s, np.zeros(n, int))


def test_identical_points_cost_nothing():
    pts = np.array([[0.0, 1.0], [2.0, 3.0], [5.0, -1.0]])
    assert transport_cost(pts, [1, 2, 3], pts, [1, 2, 3]) == 0.0


def test_single_shift():
    # moving unit mass from 0 to 2 costs 4 squared, 2 plain
    assert transport_cost([[0.0]], [1.0], [[2.0]], [1.0]) == pytest.approx(4.0)
    assert transport_cost([[0.0]], [1.0], [[2.0]], [1.0], GroundCost("euclidean")) == pytest.approx(2.0)


def test_mass_split_is_fractional():
    value, plan = transport_cost([[0.0]], [1.0], [[0.0], [1.0]], [0.5, 0.5], return_plan=True)
    assert value == pytest.approx(0.5)
    assert np.allclose(plan, [[0.5, 0.5]])


@pytest.mark.parametrize("kwargs", [
    dict(mass_b=[0.5]),
    dict(points_b=np.zeros((0, 1)), mass_b=[]),
    dict(points_b=[[0.0, 1.0]]),
    dict(mass_a=[-1.0], mass_b=[-1.0]),
])
def test_argument_errors(kwargs):
    args = dict(points_a=[[0.0]], mass_a=[1.0], points_b=[[1.0]], mass_b=[1.0])
    args.update(kwargs)
    with pytest.raises(ValueError):
        transport_cost(**args)


def test_feature_mask_drops_columns():
    a = [[0.0, 100.0]]
    b = [[1.0, -100.0]]
    assert transport_cost(a, [1], b, [1], GroundCost(feature_mask=[0])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        transport_cost(a, [1], b, [1], GroundCost(feature_mask=[3]))


def test_sensitive_coordinate_is_optional():
    a = dataset([[0.5]], s=[0])
    b = dataset([[0.5]], s=[1])
    assert empirical_wd(a, b) == 0.0
    assert empirical_wd(a, b, GroundCost(include_sensitive=True)) == pytest.approx(1.0)


def test_rational_scale():
    assert rational_scale([0.5, 0.25, 1.0]) == 4
    assert rational_scale([1 / 3, 2 / 3]) == 3


def test_empirical_wd_against_permutations():
    rng = np.random.default_rng(5)
    sq = lambda p, q: float(np.sum((p - q) ** 2))
    for _ in range(100):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 3))
        a, b = rng.random((n, d)), rng.random((n, d))
        assert empirical_wd(dataset(a), dataset(b)) == pytest.approx(permutation_wd(a, b, sq), abs=1e-9)


def test_unequal_sizes_use_common_multiple():
    a = dataset([[0.0], [1.0]])
    b = dataset([[0.0], [0.5], [1.0]])
    C = GroundCost().matrix(a.features, b.features)
    want = lp_transport(C, np.full(2, 1 / 2), np.full(3, 1 / 3))
    assert empirical_wd(a, b) == pytest.approx(want, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_matches_lp_on_rational_masses(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((n, 2)), rng.random((m, 2))
    wa = rng.integers(1, 5, n).astype(float)
    wb = rng.integers(1, 5, m).astype(float)
    wa /= wa.sum()
    wb /= wb.sum()
    got = transport_cost(a, wa, b, wb)
    want = lp_transport(GroundCost().matrix(a, b), wa, wb)
    assert got == pytest.approx(want, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (5, 1), elements=st.floats(-10, 10)),
       arrays(float, (5, 1), elements=st.floats(-10, 10)))
def test_symmetric_and_nonnegative(a, b):
    w = np.full(5, 0.2)
    ab = transport_cost(a, w, b, w)
    ba = transport_cost(b, w, a, w)
    assert ab >= 0
    # costs closer than the simplex tie tolerance may resolve either way
    assert ab == pytest.approx(ba, rel=1e-9, abs=1e-9)


def test_euclidean_triangle_inequality():
    rng = np.random.default_rng(8)
    c = GroundCost("euclidean")
    w = np.full(4, 0.25)
    for _ in range(30):
        p, q, r = (rng.random((4, 2)) for _ in range(3))
        assert transport_cost(p, w, r, w, c) <= transport_cost(p, w, q, w, c) + transport_cost(q, w, r, w, c) + 1e-12


def test_forced_coupling_values():
    assert transport_cost([[0.0]], [1.0], [[0.3]], [1.0]) == pytest.approx(0.09)
    assert empirical_wd(dataset([[0.0, 0.0]]), dataset([[1.0, 0.0]])) == pytest.approx(1.0)
    a = dataset(np.random.default_rng(0).random((4, 2)))
    assert empirical_wd(a, a) == 0.0
