"""Fairness and bin-distribution metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import BinLabel, BinSpec, Dataset
from .errors import UndefinedMetricError

__all__ = [
    "BinDistribution",
    "demographic_parity",
    "positive_rates",
    "target_bin_counts",
    "total_variation",
]


@dataclass(frozen=True)
class BinDistribution:
    """Probability of each (sensitive, decision) bin."""

    probabilities: Mapping[BinLabel, float]

    def __post_init__(self):
        probs = {BinLabel(*k): float(v) for k, v in dict(self.probabilities).items()}
        if any(v < 0 or v > 1 for v in probs.values()):
            raise ValueError("bin probabilities must lie in [0, 1]")
        if abs(math.fsum(probs.values()) - 1.0) > 1e-9:
            raise ValueError("bin probabilities must sum to 1")
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_counts(cls, counts: Mapping) -> "BinDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("counts must have a positive total")
        return cls({k: v / total for k, v in counts.items()})

    @classmethod
    def of_dataset(cls, data: Dataset) -> "BinDistribution":
        from .data import bin_histogram
        return cls.from_counts(bin_histogram(data))


def _select(data, sample):
    if sample is None:
        return data
    idx = getattr(sample, "indices", sample)
    return data.subset(np.asarray(sorted(idx), dtype=np.int64))


def positive_rates(data: Dataset, sample=None) -> np.ndarray:
    """Pr(y=1 | s) per sensitive class; NaN where a class is absent."""
    data = _select(data, sample)
    m = data.num_sensitive_classes
    n_s = np.bincount(data.sensitive, minlength=m).astype(float)
    pos = np.bincount(data.sensitive, weights=data.decision, minlength=m)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n_s > 0, pos / n_s, np.nan)


def demographic_parity(data: Dataset, sample=None) -> float:
    """|Pr(y=1 | s=1) - Pr(y=1 | s=0)|.

    ``sample`` may be a ``SampleDraw`` or a sequence of record indices; the
    metric is then computed on the selected records with equal weight. With
    more than two sensitive classes the largest pairwise gap is returned.

    Raises
    ------
    UndefinedMetricError
        If a sensitive group has no records.
    """
    rates = positive_rates(data, sample)
    if np.isnan(rates).any():
        missing = [int(s) for s in np.flatnonzero(np.isnan(rates))]
        raise UndefinedMetricError(f"sensitive group(s) {missing} absent; DP undefined")
    return float(rates.max() - rates.min())


def target_bin_counts(K: int, alpha: float, group_probability=0.5) -> BinSpec:
    """Bin counts forcing positive rate ``alpha`` in every sensitive group.

    ``k(s, 1) = ceil(p_s * K * alpha)`` and ``k(s, 0) = ceil(p_s * K * (1 - alpha))``
    where ``p_s`` is ``group_probability`` (a scalar shared by two groups, or
    one value per group). Because of the ceilings the resulting ``BinSpec.K``
    can exceed ``K`` by up to the number of bins.
    """
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if np.isscalar(group_probability):
        probs: Sequence[float] = [float(group_probability)] * 2
    else:
        probs = [float(p) for p in group_probability]
    if any(p < 0 or p > 1 for p in probs) or math.fsum(probs) > 1 + 1e-9:
        raise ValueError("group probabilities must be in [0, 1] and sum to at most 1")

    def ceil(x):
        # absorb binary round-off such as 0.5 * 200 * 0.6 = 60.000000000000007
        return int(math.ceil(x - 1e-9 * max(1.0, abs(x))))

    counts = {}
    for s, p in enumerate(probs):
        counts[BinLabel(s, 1)] = ceil(p * K * alpha)
        counts[BinLabel(s, 0)] = ceil(p * K * (1.0 - alpha))
    return BinSpec(counts)


def total_variation(a: BinDistribution, b: BinDistribution) -> float:
    """Half the L1 distance between two bin distributions."""
    if set(a.probabilities) != set(b.probabilities):
        raise ValueError("bin distributions are over different labels")
    return 0.5 * math.fsum(abs(a.probabilities[k] - b.probabilities[k]) for k in a.probabilities)
