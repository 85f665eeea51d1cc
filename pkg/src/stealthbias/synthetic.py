"""Synthetic loan-decision data with a controllable group bias.

Features are uniform on [0, 1]^d, the sensitive bit is Bernoulli(p), and only
the first feature (income) drives the decision:

* deterministic: ``y = 1[x1 + b*s > 0.5]``
* stochastic:    ``y ~ Bernoulli(x1 + b*s)`` (clamped to [0, 1])

For ``b <= 0.5`` the deterministic rule has demographic parity exactly ``b``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = ["GeneratorConfig", "generate", "ClampWarning"]


class ClampWarning(UserWarning):
    """Some stochastic decision probabilities exceeded 1 and were clamped."""

    def __init__(self, count):
        super().__init__(f"{count} decision probabilities clamped to [0, 1]")
        self.count = count


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    d: int = 1
    b: float = 0.2
    mode: str = "deterministic"
    group_probability: float = 0.5
    seed: object = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be at least 1")
        if self.mode not in ("deterministic", "stochastic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.group_probability <= 1.0:
            raise ValueError("group_probability must lie in [0, 1]")
        if self.mode == "stochastic" and not 0.0 <= self.b <= 1.0:
            raise ValueError("stochastic mode needs b in [0, 1]")


def generate(config: GeneratorConfig) -> Dataset:
    """Draw ``config.n`` records; identical seeds give identical datasets."""
    rng = np.random.default_rng(config.seed)
    x = rng.random((config.n, config.d))
    s = (rng.random(config.n) < config.group_probability).astype(np.int64)
    score = x[:, 0] + config.b * s
    if config.mode == "deterministic":
        y = (score > 0.5).astype(np.int64)
    else:
        clamped = int(np.count_nonzero((score > 1.0) | (score < 0.0)))
        if clamped:
            warnings.warn(ClampWarning(clamped), stacklevel=2)
        y = (rng.random(config.n) < np.clip(score, 0.0, 1.0)).astype(np.int64)
    return Dataset(x, s, y, num_sensitive_classes=2)
