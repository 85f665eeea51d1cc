"""Datasets of (features, sensitive attribute, decision) records.

Records are addressed by their position in the dataset; every measure and
sample in the package refers to these indices, never to record contents, so
duplicate rows stay distinguishable.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import SchemaError

__all__ = [
    "Record",
    "BinLabel",
    "Dataset",
    "BinSpec",
    "WeightedMeasure",
    "ColumnSchema",
    "load_dataset",
    "save_dataset",
    "split_holdout",
    "bin_histogram",
]

DECISIONS = (0, 1)
MASS_TOL = 1e-9


class Record(NamedTuple):
    features: np.ndarray
    sensitive: int
    decision: int


class BinLabel(NamedTuple):
    sensitive: int
    decision: int


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of N records with d real features.

    Parameters
    ----------
    features : (N, d) array_like
    sensitive : (N,) array_like of int
        Dense codes in ``0 .. num_sensitive_classes - 1``.
    decision : (N,) array_like of {0, 1}
    num_sensitive_classes : int, optional
        Size of the sensitive-attribute set. Defaults to ``max(sensitive) + 1``
        (and at least 2, so binary attributes keep both groups even when one
        is absent from a small sample).
    sensitive_labels : sequence, optional
        Original label for each code, used when writing CSV.
    """

    features: np.ndarray
    sensitive: np.ndarray
    decision: np.ndarray
    num_sensitive_classes: int | None = None
    sensitive_labels: tuple = field(default=None)

    def __post_init__(self):
        x = _readonly(self.features, np.float64)
        if x.ndim == 1:
            x = _readonly(x.reshape(-1, 1), np.float64)
        s = _readonly(self.sensitive, np.int64).reshape(-1)
        y = _readonly(self.decision, np.int64).reshape(-1)
        if x.ndim != 2:
            raise ValueError("features must be a 2-D array")
        n = x.shape[0]
        if n < 1:
            raise ValueError("a dataset needs at least one record")
        if s.shape != (n,) or y.shape != (n,):
            raise ValueError("sensitive and decision must have one entry per record")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("decisions must be 0 or 1")
        if s.min() < 0:
            raise ValueError("sensitive codes must be nonnegative")
        m = self.num_sensitive_classes
        if m is None:
            m = max(int(s.max()) + 1, 2)
        if s.max() >= m:
            raise ValueError("sensitive code out of range")
        labels = self.sensitive_labels
        labels = tuple(range(m)) if labels is None else tuple(labels)
        if len(labels) != m:
            raise ValueError("need one sensitive label per class")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "sensitive", s)
        object.__setattr__(self, "decision", y)
        object.__setattr__(self, "num_sensitive_classes", int(m))
        object.__setattr__(self, "sensitive_labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> Record:
        return Record(self.features[i], int(self.sensitive[i]), int(self.decision[i]))

    @property
    def records(self):
        return [self[i] for i in range(self.n)]

    @property
    def bin_labels(self):
        """All (sensitive, decision) bins, in code order."""
        return [BinLabel(s, y) for s in range(self.num_sensitive_classes) for y in DECISIONS]

    @property
    def bin_index(self) -> np.ndarray:
        """Per-record position of its bin in ``bin_labels``."""
        return self.sensitive * 2 + self.decision

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.sensitive[idx], self.decision[idx],
                       self.num_sensitive_classes, self.sensitive_labels)

    def equals(self, other: "Dataset") -> bool:
        return (self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.sensitive, other.sensitive)
                and np.array_equal(self.decision, other.decision))


@dataclass(frozen=True)
class BinSpec:
    """Required counts ``k(s, y)`` per bin; ``K`` is their sum."""

    counts: Mapping[BinLabel, int]

    def __post_init__(self):
        counts = {}
        for label, k in dict(self.counts).items():
            label = BinLabel(int(label[0]), int(label[1]))
            if label.decision not in DECISIONS or label.sensitive < 0:
                raise ValueError(f"invalid bin label {label}")
            if int(k) != k or k < 0:
                raise ValueError(f"bin count for {label} must be a nonnegative integer")
            counts[label] = int(k)
        object.__setattr__(self, "counts", counts)

    @property
    def K(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, label) -> int:
        return self.counts.get(BinLabel(*label), 0)

    def as_array(self, num_sensitive_classes: int) -> np.ndarray:
        """Counts laid out like ``Dataset.bin_labels``."""
        out = np.zeros(2 * num_sensitive_classes, dtype=np.int64)
        for label, k in self.counts.items():
            if label.sensitive >= num_sensitive_classes:
                if k:
                    raise ValueError(f"bin {label} refers to an unknown sensitive class")
                continue
            out[label.sensitive * 2 + label.decision] = k
        return out

    def deficient_bins(self, data: Dataset):
        """Bins asking for more records than the dataset holds."""
        have = bin_histogram(data)
        return [label for label, k in sorted(self.counts.items()) if k > have.get(label, 0)]


@dataclass(frozen=True)
class WeightedMeasure:
    """Nonnegative per-record weights, each at most 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights, np.float64).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if w.size and w.min() < -MASS_TOL:
            raise ValueError("weights must be nonnegative")
        if w.size and w.max() > 1 + MASS_TOL:
            raise ValueError("weights must not exceed 1")
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @classmethod
    def uniform(cls, n: int, total: float) -> "WeightedMeasure":
        return cls(np.full(n, total / n))

    def __len__(self):
        return self.weights.size


# -- CSV ingestion ----------------------------------------------------------

_FEATURE_RE = re.compile(r"^f(\d+)$")


@dataclass(frozen=True)
class ColumnSchema:
    """Which CSV columns hold features, the sensitive attribute and the decision.

    ``features=None`` selects every ``f<i>`` column, ordered by ``i``.
    """

    features: Sequence[str] | None = None
    sensitive: str = "s"
    decision: str = "y"


def _parse_float(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"non-numeric feature value {text!r}", row=row, column=col) from None
    if not np.isfinite(v):
        raise SchemaError(f"non-finite feature value {text!r}", row=row, column=col)
    return v


def _parse_decision(text, row, col):
    t = text.strip()
    try:
        v = float(t)
    except ValueError:
        v = None
    if v not in (0.0, 1.0):
        raise SchemaError(f"decision must be 0 or 1, got {text!r}", row=row, column=col)
    return int(v)


def _sensitive_key(text):
    t = text.strip()
    try:
        return int(t)
    except ValueError:
        pass
    try:
        v = float(t)
        if v.is_integer():
            return int(v)
    except ValueError:
        pass
    return t


def load_dataset(path, schema: ColumnSchema | None = None) -> Dataset:
    """Read a dataset from CSV.

    Sensitive values are mapped to dense codes. Integer labels that already
    form ``0 .. m-1`` keep their values; anything else is coded in order of
    first appearance.

    Raises
    ------
    SchemaError
        On a missing column, a non-numeric feature, or a decision outside
        {0, 1}. The error names the 1-based data row and the column.
    """
    schema = schema or ColumnSchema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        if schema.features is None:
            fcols = sorted((h for h in header if _FEATURE_RE.match(h)),
                           key=lambda h: int(_FEATURE_RE.match(h).group(1)))
            if not fcols:
                raise SchemaError("no feature columns (f0, f1, ...) in header")
        else:
            fcols = list(schema.features)
        for col in [*fcols, schema.sensitive, schema.decision]:
            if col not in header:
                raise SchemaError("missing column", column=col)
        fpos = [header.index(c) for c in fcols]
        spos = header.index(schema.sensitive)
        ypos = header.index(schema.decision)

        feats, sens, dec = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"expected {len(header)} fields, got {len(row)}", row=row_no)
            feats.append([_parse_float(row[p], row_no, c) for p, c in zip(fpos, fcols)])
            sens.append(_sensitive_key(row[spos]))
            dec.append(_parse_decision(row[ypos], row_no, schema.decision))
    if not feats:
        raise SchemaError(f"{path} has no data rows")

    distinct = list(dict.fromkeys(sens))
    if all(isinstance(v, int) for v in distinct) and sorted(distinct) == list(range(len(distinct))):
        labels = list(range(len(distinct)))
    else:
        labels = distinct
    code = {v: i for i, v in enumerate(labels)}
    m = max(len(labels), 2)
    if len(labels) < m:
        labels = labels + [f"<unseen {i}>" for i in range(len(labels), m)]
    return Dataset(np.array(feats, dtype=np.float64).reshape(len(feats), len(fcols)),
                   np.array([code[v] for v in sens]), np.array(dec),
                   m, tuple(labels))


def save_dataset(data: Dataset, path) -> None:
    """Write ``data`` in the ``f0..f{d-1}, s, y`` CSV layout (lossless floats)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(data.d)] + ["s", "y"])
        labels = data.sensitive_labels
        for i in range(data.n):
            w.writerow([repr(float(v)) for v in data.features[i]]
                       + [labels[data.sensitive[i]], int(data.decision[i])])


def split_holdout(data: Dataset, n_holdout: int, seed=None) -> tuple[Dataset, Dataset]:
    """Randomly split off ``n_holdout`` records.

    Returns ``(remaining, holdout)``; both keep the original record order.
    """
    n_holdout = int(n_holdout)
    if not 0 < n_holdout < data.n:
        raise ValueError(f"n_holdout must be in (0, {data.n}), got {n_holdout}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    held = np.sort(perm[:n_holdout])
    rest = np.sort(perm[n_holdout:])
    return data.subset(rest), data.subset(held)


def bin_histogram(data: Dataset) -> dict[BinLabel, int]:
    """Record count per (sensitive, decision) bin; empty bins map to 0."""
    counts = np.bincount(data.bin_index, minlength=2 * data.num_sensitive_classes)
    return {label: int(counts[i]) for i, label in enumerate(data.bin_labels)}
