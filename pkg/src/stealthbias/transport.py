"""Exact Wasserstein (optimal transport) cost between weighted point sets.

Masses are made integral by scaling with a common denominator and the
transport problem is solved as a min-cost flow on the dense bipartite graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .data import Dataset
from .flow import INF_CAP, FlowNetwork, solve_min_cost_flow

__all__ = [
    "GroundCost",
    "transport_cost",
    "empirical_wd",
    "MAX_DENSE_ARCS",
    "rational_scale",
]

MAX_DENSE_ARCS = 50_000_000
# below this many bipartite arcs the simplex runs on the full graph directly
_SPARSE_START = 20_000
_NEIGHBOURS = 12


@dataclass(frozen=True)
class GroundCost:
    """Dissimilarity between feature vectors.

    Parameters
    ----------
    kind : {"squared_euclidean", "euclidean"}
    feature_mask : sequence of int, optional
        Feature columns to use; all columns when None.
    include_sensitive : bool
        Append the sensitive code as an extra coordinate when the points come
        from a ``Dataset``. Off by default.
    """

    kind: str = "squared_euclidean"
    feature_mask: Sequence[int] | None = None
    include_sensitive: bool = False

    def __post_init__(self):
        if self.kind not in ("squared_euclidean", "euclidean"):
            raise ValueError(f"unknown ground cost {self.kind!r}")
        if self.feature_mask is not None:
            object.__setattr__(self, "feature_mask", tuple(int(j) for j in self.feature_mask))

    def points(self, data: Dataset) -> np.ndarray:
        """Coordinates of ``data`` under this cost."""
        x = self._mask(data.features)
        if self.include_sensitive:
            x = np.column_stack([x, data.sensitive.astype(np.float64)])
        return x

    def _mask(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if self.feature_mask is None:
            return x
        if any(j < 0 or j >= x.shape[1] for j in self.feature_mask):
            raise ValueError("feature_mask index out of range")
        return x[:, list(self.feature_mask)]

    def matrix(self, a, b) -> np.ndarray:
        """Pairwise cost matrix between already-masked point arrays."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        # explicit differences: the Gram-matrix shortcut loses exact zeros
        sq = np.zeros((a.shape[0], b.shape[0]))
        for j in range(a.shape[1]):
            diff = a[:, j, None] - b[None, :, j]
            sq += diff * diff
        if self.kind == "euclidean":
            return np.sqrt(sq)
        return sq


def rational_scale(masses, max_denominator=10**6, tol=1e-12):
    """Smallest integer ``L`` making every mass times ``L`` integral.

    Masses are snapped to nearby fractions with denominator at most
    ``max_denominator``; a ValueError is raised if that moves any mass by
    more than ``tol``.
    """
    den = 1
    for v in np.asarray(masses, dtype=np.float64).ravel():
        f = Fraction(float(v)).limit_denominator(max_denominator)
        if abs(float(f) - v) > tol * max(1.0, abs(v)):
            raise ValueError(f"mass {v!r} is not a rational with denominator <= {max_denominator}")
        den = den * f.denominator // math.gcd(den, f.denominator)
    return den


def nearest_arcs(cost_matrix: np.ndarray, k: int = _NEIGHBOURS) -> np.ndarray:
    """Flat indices ``i * m + j`` of the k cheapest entries per row and per column."""
    n, m = cost_matrix.shape
    kr = min(k, m)
    kc = min(k, n)
    rows = np.argpartition(cost_matrix, kr - 1, axis=1)[:, :kr]
    cols = np.argpartition(cost_matrix, kc - 1, axis=0)[:kc, :]
    flat_r = (np.arange(n)[:, None] * m + rows).ravel()
    flat_c = (cols * m + np.arange(m)[None, :]).ravel()
    return np.union1d(flat_r, flat_c)


def _integral_transport(C, supply, demand):
    n, m = C.shape
    total = int(supply.sum())
    src, snk = n + m, n + m + 1
    tail = np.concatenate([np.full(n, src), np.repeat(np.arange(n), m), n + np.arange(m)])
    head = np.concatenate([np.arange(n), n + np.tile(np.arange(m), n), np.full(m, snk)])
    cap = np.concatenate([supply, np.full(n * m, INF_CAP), demand]).astype(np.int64)
    cost = np.concatenate([np.zeros(n), C.ravel(), np.zeros(m)])
    net = FlowNetwork(n + m + 2, tail, head, cap, cost, src, snk)
    cand = None
    if n * m > _SPARSE_START:
        cand = np.concatenate([np.arange(n), n + nearest_arcs(C), n + n * m + np.arange(m)])
    sol = solve_min_cost_flow(net, total, candidate_arcs=cand)
    return sol.total_cost, sol.arc_flows[n:n + n * m].reshape(n, m)


def transport_cost(points_a, mass_a, points_b, mass_b, cost: GroundCost | None = None,
                   *, return_plan=False):
    """Minimum transport cost between two weighted point sets.

    Parameters
    ----------
    points_a, points_b : (n, d) and (m, d) array_like
    mass_a, mass_b : array_like
        Nonnegative rational masses with equal totals (within 1e-9).
    cost : GroundCost, optional
        Squared Euclidean over all coordinates by default.
    return_plan : bool
        Also return the optimal coupling as an (n, m) array.

    Returns
    -------
    float, or (float, ndarray) when ``return_plan``
    """
    cost = cost or GroundCost()
    a = cost._mask(points_a)
    b = cost._mask(points_b)
    wa = np.asarray(mass_a, dtype=np.float64).reshape(-1)
    wb = np.asarray(mass_b, dtype=np.float64).reshape(-1)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("transport_cost needs nonempty point sets")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if wa.shape[0] != a.shape[0] or wb.shape[0] != b.shape[0]:
        raise ValueError("need one mass per point")
    if wa.min() < 0 or wb.min() < 0:
        raise ValueError("masses must be nonnegative")
    if abs(wa.sum() - wb.sum()) > 1e-9:
        raise ValueError(f"total masses differ: {wa.sum()!r} vs {wb.sum()!r}")
    if a.shape[0] * b.shape[0] > MAX_DENSE_ARCS:
        raise ValueError(
            f"{a.shape[0]}x{b.shape[0]} transport exceeds {MAX_DENSE_ARCS} arcs; "
            "use bootstrap_stealth_measure or subsample")

    scale = rational_scale(np.concatenate([wa, wb]))
    ia = np.rint(wa * scale).astype(np.int64)
    ib = np.rint(wb * scale).astype(np.int64)
    if ia.sum() != ib.sum():
        raise ValueError("total masses differ after rational scaling")
    C = cost.matrix(a, b)
    total, plan = _integral_transport(C, ia, ib)
    value = max(total / scale, 0.0)
    if return_plan:
        return value, plan / scale
    return value


def empirical_wd(sample_a: Dataset, sample_b: Dataset, cost: GroundCost | None = None) -> float:
    """Transport cost between the uniform empirical measures of two datasets."""
    cost = cost or GroundCost()
    if sample_a.d != sample_b.d:
        raise ValueError(f"dimension mismatch: {sample_a.d} vs {sample_b.d}")
    na, nb = sample_a.n, sample_b.n
    lcm = na * nb // math.gcd(na, nb)
    # integer masses directly; avoids round-tripping 1/n through floats
    ia = np.full(na, lcm // na, dtype=np.int64)
    ib = np.full(nb, lcm // nb, dtype=np.int64)
    a, b = cost.points(sample_a), cost.points(sample_b)
    if na * nb > MAX_DENSE_ARCS:
        raise ValueError(f"{na}x{nb} transport exceeds {MAX_DENSE_ARCS} arcs")
    total, _ = _integral_transport(cost.matrix(a, b), ia, ib)
    return max(total / lcm, 0.0)
