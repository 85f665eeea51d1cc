import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stealthbias import (BinLabel, BinSpec, Dataset, GeneratorConfig, GroundCost, InfeasibleError,
                         SampleDraw, StealthPlan, WeightedMeasure, baseline_random_sample,
                         bootstrap_stealth_measure, build_stealth_network, case_control_sample,
                         demographic_parity, draw_sample, empirical_wd, generate,
                         stealth_measure, target_bin_counts)
from stealthbias.sampler import (largest_remainder, measure_objective, read_plan_csv,
                                 write_plan_csv)

from _oracles import lattice_stealth, random_stealth_instance


def one_bin(mu):
    n = len(mu)
    data = Dataset(np.arange(n, dtype=float), np.zeros(n, int), np.ones(n, int))
    k = int(round(sum(mu)))
    return data, StealthPlan(WeightedMeasure(mu), BinSpec({(0, 1): k}), 0.0, n)


def test_network_shape_for_two_records():
    data = Dataset([[0.0], [1.0]], [0, 0], [1, 1])
    sn = build_stealth_network(data, BinSpec({(0, 1): 1}))
    net = sn.network
    # source, 4 bin nodes, 2 left, 2 right, sink
    assert net.node_count == 1 + 4 + 2 + 2 + 1
    assert net.capacity[sn.bin_arcs][1] == 2          # N * k
    assert list(net.capacity[sn.sink_arcs]) == [1, 1]  # K
    assert sn.demand == 2


def test_arc_count_matches_formula():
    data = generate(GeneratorConfig(n=30, seed=1))
    sn = build_stealth_network(data, target_bin_counts(4, 0.5))
    N = data.n
    assert sn.network.arc_count == 4 + N + N * N + N


def test_oversized_bin_is_named():
    data = Dataset([[0.0], [1.0], [2.0]], [0, 0, 1], [1, 1, 0])
    with pytest.raises(InfeasibleError) as err:
        stealth_measure(data, BinSpec({(0, 1): 3}))
    assert BinLabel(0, 1) in err.value.deficient_bins
    assert "s=0, y=1" in str(err.value)


def test_proportional_spec_gives_uniform_measure():
    rng = np.random.default_rng(2)
    s = np.repeat([0, 0, 1, 1], 5)
    y = np.tile([0, 1], 10)
    data = Dataset(rng.random((20, 2)), s, y)
    plan = stealth_measure(data, BinSpec({(a, b): 2 for a in (0, 1) for b in (0, 1)}))
    assert np.allclose(plan.weights, 8 / 20)
    assert plan.objective == pytest.approx(0.0, abs=1e-12)


def test_lattice_oracle_small_instances():
    rng = np.random.default_rng(17)
    cost = GroundCost()
    for _ in range(40):
        data, spec, counts = random_stealth_instance(rng)
        pts = cost.points(data)
        want, _ = lattice_stealth(cost.matrix(pts, pts), data.bin_index, counts)
        plan = stealth_measure(data, spec)
        assert plan.objective == pytest.approx(want, abs=1e-9)
        for b, label in enumerate(data.bin_labels):
            assert plan.weights[data.bin_index == b].sum() == pytest.approx(spec[label])


def test_depleted_cluster_keeps_its_nearest_points():
    # two clusters per decision; the spec wants fewer positives than the data offers
    rng = np.random.default_rng(4)
    left = rng.normal(0.0, 0.05, 20)
    right = rng.normal(5.0, 0.05, 20)
    x = np.concatenate([left, right])
    s = np.zeros(40, int)
    y = np.concatenate([np.zeros(20, int), np.ones(20, int)])
    data = Dataset(x, s, y, num_sensitive_classes=2)
    spec = BinSpec({(0, 0): 14, (0, 1): 6})
    plan = stealth_measure(data, spec)
    mu = plan.weights
    assert mu[:20].sum() == pytest.approx(14) and mu[20:].sum() == pytest.approx(6)
    # the surplus mass of the depleted right cluster moves to the left cluster's right edge
    moved_to = mu[:20] > 0.5 + 1e-9
    assert x[:20][moved_to].min() >= np.median(left)
    cc = np.mean([empirical_wd(data.subset(case_control_sample(data, spec, seed=i).indices),
                               data) * 20 for i in range(50)])
    assert plan.objective < cc


def test_forced_and_degenerate_draws():
    data, plan = one_bin([1.0, 0.0, 1.0, 0.0])
    assert list(draw_sample(data, plan, seed=1).indices) == [0, 2]
    data, plan = one_bin([0.5, 0.5, 0.5, 0.5])
    plan = StealthPlan(plan.measure, BinSpec({(0, 1): 4}), 0.0, 4)
    assert list(draw_sample(data, plan, seed=1).indices) == [0, 1, 2, 3]


def test_inclusion_frequencies_match_weights():
    mu = np.array([0.1, 0.6, 0.3, 0.5, 0.2, 0.3])
    data, plan = one_bin(mu)
    hits = np.zeros(6)
    for t in range(10_000):
        hits[draw_sample(data, plan, seed=t).indices] += 1
    freq = hits / 10_000
    se = np.sqrt(mu * (1 - mu) / 10_000)
    assert np.all(np.abs(freq - mu) <= 3 * se + 1e-12)


def test_draws_realize_counts_and_zero_dp():
    data = generate(GeneratorConfig(n=300, seed=8))
    spec = target_bin_counts(60, 0.6)
    plan = stealth_measure(data, spec)
    for seed in range(5):
        draw = draw_sample(data, plan, seed=seed)
        assert len(draw) == spec.K
        assert demographic_parity(data, draw) == pytest.approx(0.0, abs=1e-12)
        again = draw_sample(data, plan, seed=seed)
        assert np.array_equal(draw.indices, again.indices)


def test_case_control_examples():
    data = Dataset(np.arange(4.0), [0, 0, 1, 1], [0, 1, 0, 1])
    full = BinSpec({(s, y): 1 for s in (0, 1) for y in (0, 1)})
    assert list(case_control_sample(data, full, seed=0).indices) == [0, 1, 2, 3]
    one = BinSpec({(1, 1): 1})
    assert list(case_control_sample(data, one, seed=0).indices) == [3]
    with pytest.raises(InfeasibleError):
        case_control_sample(data, BinSpec({(1, 1): 2}), seed=0)


def test_baseline_random_sample():
    d = baseline_random_sample(generate(GeneratorConfig(n=50, seed=0)), 10, seed=3)
    assert len(d) == 10 and len(set(d.indices)) == 10
    with pytest.raises(InfeasibleError):
        baseline_random_sample(generate(GeneratorConfig(n=5, seed=0)), 6, seed=3)
    with pytest.raises(ValueError):
        SampleDraw([1, 1])


@given(st.lists(st.floats(0, 50), min_size=1, max_size=12))
def test_largest_remainder_preserves_total(values):
    total = int(round(sum(values)))
    if total < int(sum(np.floor(values))) or total > int(sum(np.floor(values))) + len(values):
        return
    out = largest_remainder(values, total)
    assert out.sum() == total
    assert np.all(np.abs(out - np.asarray(values)) < 1 + 1e-9)


def test_bootstrap_degenerate_is_exact():
    data = generate(GeneratorConfig(n=120, seed=5))
    spec = target_bin_counts(30, 0.7)
    exact = stealth_measure(data, spec)
    boot = bootstrap_stealth_measure(data, spec, subset_size=data.n, rounds=1, seed=1)
    assert np.array_equal(boot.weights, exact.weights)
    assert boot.objective == exact.objective


def test_bootstrap_with_forced_disjoint_subsets_averages():
    rng = np.random.default_rng(6)
    # 20 records per bin, so each half holds exactly half of every count
    data = Dataset(rng.random((80, 1)), np.repeat([0, 1], 40), np.tile(np.repeat([0, 1], 20), 2))
    spec = target_bin_counts(8, 0.5)
    bins = data.bin_index
    halves = [[], []]
    for b in range(4):
        m = np.flatnonzero(bins == b)
        halves[0] += list(m[::2])
        halves[1] += list(m[1::2])
    subsets = [np.sort(h) for h in halves]
    boot = bootstrap_stealth_measure(data, spec, subsets=subsets)
    # each round at its own scale, then lifted to the full dataset
    acc = np.zeros(data.n)
    for idx in subsets:
        sub = data.subset(idx)
        plan = stealth_measure(sub, BinSpec({lab: spec[lab] // 2 for lab in data.bin_labels}))
        acc[idx] += plan.weights
    avg = acc / 2
    want = np.zeros(data.n)
    for b, lab in enumerate(data.bin_labels):
        m = bins == b
        if avg[m].sum() > 0:
            want[m] = avg[m] * spec[lab] / avg[m].sum()
    assert want.max() <= 1.0
    assert np.allclose(boot.weights, want, atol=1e-12)


def test_bootstrap_rejects_bad_arguments():
    data = generate(GeneratorConfig(n=40, seed=6))
    spec = target_bin_counts(8, 0.5)
    with pytest.raises(ValueError):
        bootstrap_stealth_measure(data, spec, subset_size=0)
    with pytest.raises(ValueError):
        bootstrap_stealth_measure(data, spec, subset_size=10, rounds=0)


def test_measure_objective_matches_exact_on_lattice():
    data = generate(GeneratorConfig(n=60, seed=2))
    plan = stealth_measure(data, target_bin_counts(12, 0.8))
    assert measure_objective(data, plan.weights) == pytest.approx(plan.objective, abs=1e-9)


def test_plan_csv_round_trip(tmp_path):
    data = generate(GeneratorConfig(n=40, seed=2))
    plan = stealth_measure(data, target_bin_counts(10, 0.6))
    write_plan_csv(plan, tmp_path / "mu.csv")
    assert np.array_equal(read_plan_csv(tmp_path / "mu.csv"), plan.weights)
