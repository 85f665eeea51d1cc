import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stealthbias import (BinLabel, BinSpec, ColumnSchema, Dataset, GeneratorConfig, SchemaError,
                         WeightedMeasure, bin_histogram, generate, load_dataset, save_dataset,
                         split_holdout)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_small_file(tmp_path):
    p = write(tmp_path, "f0,f1,s,y\n0.1,2,0,1\n0.2,3,1,0\n0.3,4,1,1\n")
    d = load_dataset(p)
    assert (d.n, d.d) == (3, 2)
    assert list(d.decision) == [1, 0, 1]
    rec = d[1]
    assert list(rec.features) == [0.2, 3.0]
    assert (rec.sensitive, rec.decision) == (1, 0)


def test_bad_decision_names_row_and_column(tmp_path):
    rows = "".join(f"{i / 10},0,{1 if i != 4 else 2}\n" for i in range(6))
    p = write(tmp_path, "f0,s,y\n" + rows)
    with pytest.raises(SchemaError) as err:
        load_dataset(p)
    assert err.value.row == 5
    assert err.value.column == "y"
    assert "row 5" in str(err.value)


@pytest.mark.parametrize("text,column", [
    ("f0,s,y\nabc,0,1\n", "f0"),
    ("f0,s,y\nnan,0,1\n", "f0"),
    ("f0,y\n0.1,1\n", "s"),
])
def test_schema_errors(tmp_path, text, column):
    with pytest.raises(SchemaError) as err:
        load_dataset(write(tmp_path, text))
    assert err.value.column == column


def test_ragged_and_empty_files(tmp_path):
    with pytest.raises(SchemaError):
        load_dataset(write(tmp_path, "f0,s,y\n0.1,0\n"))
    with pytest.raises(SchemaError):
        load_dataset(write(tmp_path, ""))
    with pytest.raises(SchemaError):
        load_dataset(write(tmp_path, "f0,s,y\n"))


def test_custom_schema_and_string_labels(tmp_path):
    p = write(tmp_path, "income,age,sex,loan\n0.5,30,F,1\n0.7,40,M,0\n0.1,50,F,0\n")
    d = load_dataset(p, ColumnSchema(features=["income"], sensitive="sex", decision="loan"))
    assert d.d == 1
    assert list(d.sensitive) == [0, 1, 0]
    assert d.sensitive_labels == ("F", "M")


def test_round_trip_of_generated_data(tmp_path):
    d = generate(GeneratorConfig(n=50, d=3, seed=4))
    save_dataset(d, tmp_path / "g.csv")
    back = load_dataset(tmp_path / "g.csv")
    assert back.equals(d)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.integers(0, 3), st.integers(0, 1)),
                min_size=1, max_size=20))
def test_round_trip_property(tmp_path_factory, rows):
    x = np.array([[r[0]] for r in rows])
    s = np.array([r[1] for r in rows])
    y = np.array([r[2] for r in rows])
    d = Dataset(x, s, y, num_sensitive_classes=4)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    save_dataset(d, path)
    back = load_dataset(path)
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.decision, d.decision)
    # labels come back in first-appearance order; the grouping is preserved
    for a in range(len(rows)):
        for b in range(len(rows)):
            assert (back.sensitive[a] == back.sensitive[b]) == (s[a] == s[b])


def test_split_holdout_partitions():
    d = Dataset(np.arange(5.0), [0, 1, 0, 1, 0], [1, 1, 0, 0, 1])
    rest, hold = split_holdout(d, 2, seed=7)
    assert (rest.n, hold.n) == (3, 2)
    assert sorted(np.concatenate([rest.features[:, 0], hold.features[:, 0]])) == [0, 1, 2, 3, 4]
    again = split_holdout(d, 2, seed=7)
    assert again[0].equals(rest) and again[1].equals(hold)
    with pytest.raises(ValueError):
        split_holdout(d, 5, seed=1)


def test_bin_histogram_counts():
    d = Dataset(np.zeros(4), [0, 0, 1, 1], [0, 1, 0, 1])
    assert bin_histogram(d) == {BinLabel(s, y): 1 for s in (0, 1) for y in (0, 1)}
    e = Dataset(np.zeros(2), [0, 0], [1, 1])
    h = bin_histogram(e)
    assert h[BinLabel(1, 0)] == 0 and h[BinLabel(0, 1)] == 2


def test_bin_histogram_matches_single_pass_tally():
    d = generate(GeneratorConfig(n=1000, b=0.2, seed=12))
    tally = {}
    for rec in d.records:
        key = (rec.sensitive, rec.decision)
        tally[key] = tally.get(key, 0) + 1
    h = bin_histogram(d)
    assert all(h[BinLabel(*k)] == v for k, v in tally.items())
    assert sum(h.values()) == 1000


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros(2), [0, 1], [0, 2])
    with pytest.raises(ValueError):
        Dataset(np.zeros(2), [0], [0, 1])
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 1)), [], [])
    d = Dataset(np.zeros(3), [0, 0, 0], [0, 1, 0])
    assert d.num_sensitive_classes == 2
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


def test_binspec_and_measure():
    spec = BinSpec({(0, 1): 2, (1, 0): 3})
    assert spec.K == 5 and spec[BinLabel(0, 0)] == 0
    assert list(spec.as_array(2)) == [0, 2, 3, 0]
    with pytest.raises(ValueError):
        BinSpec({(0, 1): -1})
    with pytest.raises(ValueError):
        WeightedMeasure([0.5, 1.2])
    assert WeightedMeasure.uniform(4, 2).total_mass == pytest.approx(2.0)
    d = Dataset(np.zeros(2), [0, 0], [1, 1])
    assert spec.deficient_bins(d) == [BinLabel(1, 0)]
