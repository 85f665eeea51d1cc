"""The detector side: KS tests, the distinguishing game, and the advantage bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Dataset

__all__ = [
    "DetectorVerdict",
    "AdvantageEstimate",
    "ks_one_sample",
    "ks_two_sample",
    "kolmogorov_sf",
    "kolmogorov_isf",
    "uniform_cdf",
    "ks_threshold_detector",
    "estimate_advantage",
    "theorem1_bound",
    "bound_terms",
    "run_detector_battery",
    "BATTERY_TESTS",
]

BATTERY_TESTS = ("marginal", "s1", "s0")


@dataclass(frozen=True)
class DetectorVerdict:
    """Outcome of one test.

    In p-value mode ``threshold_or_pvalue`` is the p-value and the test
    rejects when it falls below ``significance``; in threshold mode it is the
    threshold and the test rejects when the statistic exceeds it. ``defined``
    is False when the test had no data (statistic and p-value are NaN).
    """

    statistic: float
    threshold_or_pvalue: float
    rejected: bool
    mode: str = "pvalue"
    significance: float | None = None
    name: str = ""
    defined: bool = True

    @property
    def p_value(self) -> float:
        if self.mode != "pvalue":
            raise AttributeError("threshold-mode verdicts carry no p-value")
        return self.threshold_or_pvalue


@dataclass(frozen=True)
class AdvantageEstimate:
    value: float
    trials: int
    standard_error: float
    correct: int

    @property
    def correct_fraction(self) -> float:
        return self.correct / self.trials


def uniform_cdf(x):
    """CDF of Uniform[0, 1]."""
    return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)


def ks_one_sample(values, reference_cdf: Callable = uniform_cdf) -> float:
    """sup_x |F_K(x) - F(x)| for the empirical CDF of ``values``.

    The supremum of a step function against a continuous CDF is attained at
    a jump, so both one-sided gaps are evaluated at each of the K points.
    """
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    K = x.size
    if K == 0:
        raise ValueError("ks_one_sample needs at least one value")
    F = np.asarray(reference_cdf(x), dtype=np.float64)
    if F.shape != x.shape:
        F = np.array([reference_cdf(v) for v in x], dtype=np.float64)
    i = np.arange(1, K + 1)
    d_plus = np.max(i / K - F)
    d_minus = np.max(F - (i - 1) / K)
    return float(min(max(d_plus, d_minus, 0.0), 1.0))


def kolmogorov_sf(x: float, terms: int = 100, tol: float = 1e-10) -> float:
    """Survival function of the Kolmogorov distribution, Pr(sup|B(t)| > x).

    Uses the alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 x^2)`` for
    x >= 1 and the theta-function form of the CDF below that, where the
    alternating series converges slowly. Both are truncated at ``terms``
    terms or once a term drops below ``tol``.
    """
    x = float(x)
    if x <= 0:
        return 1.0
    if x >= 1.0:
        total = 0.0
        for k in range(1, terms + 1):
            term = math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < tol:
                break
        return min(max(2.0 * total, 0.0), 1.0)
    total = 0.0
    c = math.pi * math.pi / (8.0 * x * x)
    for k in range(1, terms + 1):
        term = math.exp(-(2 * k - 1) ** 2 * c)
        total += term
        if term < tol:
            break
    cdf = math.sqrt(2.0 * math.pi) / x * total
    return min(max(1.0 - cdf, 0.0), 1.0)


def kolmogorov_isf(p: float) -> float:
    """Inverse of ``kolmogorov_sf`` by bisection (so 0.05 -> about 1.358)."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = 0.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kolmogorov_sf(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic p-value.

    The p-value is ``kolmogorov_sf(sqrt(n m / (n + m)) * D)``.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise ValueError("ks_two_sample needs two nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / m
    stat = float(np.max(np.abs(fa - fb)))
    p = kolmogorov_sf(math.sqrt(n * m / (n + m)) * stat)
    return stat, p


def ks_threshold_detector(tau: float, reference_cdf: Callable = uniform_cdf):
    """Detector returning 1 when the one-sample KS statistic exceeds ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")

    def detector(sample) -> int:
        return int(ks_one_sample(sample, reference_cdf) > tau)

    detector.tau = tau
    return detector


def estimate_advantage(gen_mu: Callable, gen_nu: Callable, detector: Callable,
                       trials: int, seed=None) -> AdvantageEstimate:
    """Monte Carlo estimate of |Pr(detector guesses the coin) - 1/2|.

    Each trial flips a fair coin H; H = 1 reveals a draw from ``gen_nu``
    and H = 0 a draw from ``gen_mu``, matching the convention that a
    detector output of 1 means "this came from the reference". Generators
    receive a ``numpy.random.Generator``. Trial t uses a seed derived from
    ``(seed, t)``, so results do not depend on evaluation order.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    root = np.random.SeedSequence(seed)
    correct = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(t,)))
        h = int(rng.integers(2))
        sample = gen_nu(rng) if h == 1 else gen_mu(rng)
        correct += int(int(detector(sample)) == h)
    p = correct / trials
    return AdvantageEstimate(abs(p - 0.5), trials, math.sqrt(p * (1.0 - p) / trials), correct)


def bound_terms(wasserstein: float, K: int, s_const: float, C_const: float, tv: float):
    """The two summands of the KS-advantage bound, computed separately."""
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    if s_const <= 0 or C_const <= 0:
        raise ValueError("s and C must be positive")
    if not 0.0 <= tv <= 1.0:
        raise ValueError("tv must lie in [0, 1]")
    if wasserstein < 0:
        raise ValueError("wasserstein must be nonnegative")
    K = int(K)
    first = wasserstein * (K / C_const) ** (1.0 / s_const)
    # 4 K! ((1 + tv) / K)^K in log space
    log_second = math.fsum([math.log(4.0), math.lgamma(K + 1.0), K * math.log1p(tv),
                            -K * math.log(K)])
    second = math.exp(log_second)
    return first, second


def theorem1_bound(wasserstein: float, K: int, s_const: float, C_const: float,
                   tv: float) -> float:
    """Upper bound on the advantage of a KS-threshold detector.

    ``K^(1/s) W / C^(1/s) + 4 K! ((1 + tv) / K)^K``, for a distribution that
    is flat with constants (s, C): every eps-ball has mass at most
    ``(eps / C)^s``. The side condition ``tau >= (C / K)^(1/s) / 2`` on the
    detector threshold is the caller's responsibility.
    """
    first, second = bound_terms(wasserstein, K, s_const, C_const, tv)
    return first + second


def _verdict(a, b, significance, name):
    if a.size == 0 or b.size == 0:
        return DetectorVerdict(math.nan, math.nan, False, "pvalue", significance, name, False)
    stat, p = ks_two_sample(a, b)
    return DetectorVerdict(stat, p, p < significance, "pvalue", significance, name, True)


def run_detector_battery(disclosed: Dataset, reference: Dataset, key_feature: int = 0,
                         significance: float = 0.05) -> list[DetectorVerdict]:
    """Two-sample KS tests on the key feature: overall, given s=1, given s=0.

    A slice with no records on either side yields a verdict with
    ``defined=False`` instead of raising.
    """
    if not 0 <= key_feature < disclosed.d or reference.d != disclosed.d:
        raise ValueError("key_feature out of range or feature dimensions differ")
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    xa = disclosed.features[:, key_feature]
    xb = reference.features[:, key_feature]
    out = [_verdict(xa, xb, significance, "marginal")]
    for s, name in ((1, "s1"), (0, "s0")):
        out.append(_verdict(xa[disclosed.sensitive == s], xb[reference.sensitive == s],
                            significance, name))
    return out
