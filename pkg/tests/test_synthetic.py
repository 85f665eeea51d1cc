import warnings

import numpy as np
import pytest

from stealthbias import ClampWarning, GeneratorConfig, demographic_parity, generate


def test_deterministic_rule():
    d = generate(GeneratorConfig(n=2000, b=0.2, seed=3))
    x, s, y = d.features[:, 0], d.sensitive, d.decision
    assert np.array_equal(y, (x + 0.2 * s > 0.5).astype(int))


def test_rule_substitution():
    # 0.4 + 0.2 > 0.5 for s = 1, but 0.4 alone is not
    for s, want in ((1, 1), (0, 0)):
        assert int(0.4 + 0.2 * s > 0.5) == want


def test_population_dp():
    d = generate(GeneratorConfig(n=100_000, b=0.2, seed=0))
    assert demographic_parity(d) == pytest.approx(0.2, abs=0.02)


def test_same_seed_same_data():
    a = generate(GeneratorConfig(n=30, d=2, seed=9))
    b = generate(GeneratorConfig(n=30, d=2, seed=9))
    assert a.equals(b)
    assert not a.equals(generate(GeneratorConfig(n=30, d=2, seed=10)))


def test_stochastic_mode_and_clamping():
    with pytest.warns(ClampWarning) as rec:
        d = generate(GeneratorConfig(n=5000, b=0.4, mode="stochastic", seed=2))
    assert rec[0].message.count > 0
    s1 = d.decision[d.sensitive == 1].mean()
    s0 = d.decision[d.sensitive == 0].mean()
    assert s0 == pytest.approx(0.5, abs=0.03)
    assert s1 > s0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        generate(GeneratorConfig(n=100, b=0.0, mode="stochastic", seed=2))


def test_group_probability_and_validation():
    d = generate(GeneratorConfig(n=20_000, group_probability=0.3, seed=5))
    assert d.sensitive.mean() == pytest.approx(0.3, abs=0.015)
    with pytest.raises(ValueError):
        GeneratorConfig(n=0)
    with pytest.raises(ValueError):
        GeneratorConfig(n=5, mode="fuzzy")
