"""Stealth measures under mean constraints on a real-valued sensitive attribute.

Instead of fixed bin counts, the measure must keep the mean of a real-valued
attribute ``v`` within ``target +- tolerance`` inside every decision class:

    |sum_{i: y_i = y} (v_i - target_y) mu_i| <= tolerance * sum_{i: y_i = y} mu_i

These are a handful of linear side constraints on top of the transport
polytope, so the problem is solved by column generation: a small master LP
over convex combinations of flow vertices, whose duals shift the source-arc
costs of a min-cost flow that prices the next vertex. The loop stops when no
vertex has negative reduced cost, which certifies LP optimality.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.optimize import linprog

from .data import Dataset, WeightedMeasure
from .errors import ConvergenceError, InfeasibleError
from .flow import FlowNetwork, solve_min_cost_flow
from .sampler import StealthPlan
from .transport import GroundCost, nearest_arcs

__all__ = ["quantitative_stealth_measure", "band_violation", "attribute_values"]


def attribute_values(data: Dataset, sensitive_feature=None) -> np.ndarray:
    """The real-valued attribute: a feature column, or the sensitive codes."""
    if sensitive_feature is None:
        return data.sensitive.astype(np.float64)
    return data.features[:, int(sensitive_feature)].astype(np.float64)


def _targets(target_mean, decisions):
    if isinstance(target_mean, Mapping):
        return {int(y): float(target_mean[y]) for y in decisions}
    return {int(y): float(target_mean) for y in decisions}


def _constraint_rows(values, decision, targets, tolerance):
    rows = []
    for y, g in targets.items():
        inside = decision == y
        rows.append(np.where(inside, values - g - tolerance, 0.0))   # mean <= g + eps
        rows.append(np.where(inside, g - tolerance - values, 0.0))   # mean >= g - eps
    return np.array(rows)


def band_violation(data: Dataset, weights, target_mean, tolerance, sensitive_feature=None):
    """Largest amount by which a class mean leaves its band (0 if inside)."""
    v = attribute_values(data, sensitive_feature)
    w = np.asarray(weights, dtype=np.float64)
    worst = 0.0
    for y, g in _targets(target_mean, np.unique(data.decision)).items():
        inside = data.decision == y
        mass = w[inside].sum()
        if mass <= 0:
            continue
        mean = float(np.dot(v[inside], w[inside]) / mass)
        worst = max(worst, abs(mean - g) - tolerance)
    return max(worst, 0.0)


class _Pricer:
    """Min-cost flow over source -> l[i] -> r[j] -> sink with shiftable source costs."""

    def __init__(self, C, K):
        N = C.shape[0]
        self.N, self.K = N, K
        src, snk = 2 * N, 2 * N + 1
        rec = np.arange(N)
        self.tail = np.concatenate([np.full(N, src), np.repeat(rec, N), N + rec])
        self.head = np.concatenate([rec, N + np.tile(rec, N), np.full(N, snk)])
        self.cap = np.concatenate([np.full(N, N), np.full(N * N, N * K), np.full(N, K)])
        self.C = C
        self.src, self.snk = src, snk
        self.cand = None
        if N * N > 20_000:
            self.cand = np.concatenate([rec, N + nearest_arcs(C), N + N * N + rec])

    def __call__(self, shift, transport=True):
        N = self.N
        pair = self.C.ravel() if transport else np.zeros(N * N)
        cost = np.concatenate([shift, pair, np.zeros(N)])
        net = FlowNetwork(2 * N + 2, self.tail, self.head, self.cap, cost, self.src, self.snk)
        sol = solve_min_cost_flow(net, N * self.K, candidate_arcs=self.cand)
        f = sol.arc_flows
        mu = f[:N] / N
        moved = float(np.dot(self.C.ravel(), f[N:N + N * N])) / N
        return mu, moved


def _master(costs, lhs, phase_one):
    """Solve the restricted master; returns (theta, objective, row duals, convexity dual)."""
    n_cols = costs.size
    R = lhs.shape[0]
    if phase_one:
        # minimise total violation t_r of  lhs @ theta - t <= 0
        c = np.concatenate([np.zeros(n_cols), np.ones(R)])
        A_ub = np.hstack([lhs, -np.eye(R)])
        A_eq = np.concatenate([np.ones(n_cols), np.zeros(R)])[None, :]
    else:
        c = costs
        A_ub = lhs
        A_eq = np.ones((1, n_cols))
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(R), A_eq=A_eq, b_eq=[1.0],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise ConvergenceError(f"master LP failed: {res.message}")
    return res.x[:n_cols], float(res.fun), res.ineqlin.marginals, float(res.eqlin.marginals[0])


def quantitative_stealth_measure(data: Dataset, target_mean, tolerance: float,
                                 cost: GroundCost | None = None, *, sample_size: int,
                                 sensitive_feature=None, max_iterations: int = 500,
                                 tol: float = 1e-9) -> StealthPlan:
    """Closest measure to uniform whose per-decision attribute means stay in a band.

    Parameters
    ----------
    data : Dataset
    target_mean : float or mapping {decision: float}
        Band centre, shared by both decision classes or given per class.
    tolerance : float
        Band half-width, > 0.
    cost : GroundCost, optional
    sample_size : int
        Total mass K of the measure.
    sensitive_feature : int, optional
        Feature column holding the real-valued attribute; the sensitive codes
        are used when omitted.
    max_iterations : int
        Pricing rounds allowed before giving up.
    tol : float
        Relative reduced-cost threshold that certifies optimality.

    Returns
    -------
    StealthPlan
        ``bin_spec`` is None; ``objective`` is ``W(mu, nu)`` at mass K.

    Raises
    ------
    InfeasibleError
        If no measure satisfies the band.
    ConvergenceError
        If ``max_iterations`` pricing rounds do not close the gap.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    N = data.n
    K = int(sample_size)
    if not 1 <= K <= N:
        raise ValueError("sample_size must be in [1, N]")
    cost = cost or GroundCost()
    v = attribute_values(data, sensitive_feature)
    targets = _targets(target_mean, np.unique(data.decision))
    A = _constraint_rows(v, data.decision, targets, tolerance)
    pts = cost.points(data)
    C = cost.matrix(pts, pts)
    price = _Pricer(C, K)

    # the uniform measure with its zero-cost diagonal coupling seeds the pool
    columns = [np.full(N, K / N)]
    col_cost = [0.0]
    scale = 1.0 + float(np.abs(C).max())

    phase_one = True
    history = {}
    for it in range(max_iterations):
        mus = np.array(columns)
        lhs = A @ mus.T
        theta, obj, lam, sigma = _master(np.array(col_cost), lhs, phase_one)
        # reduced cost of a vertex (mu, c): w*c - lam . (A mu) - sigma, w = 0 in phase one
        shift = -(A.T @ lam)
        if phase_one:
            mu_new, c_new = price(shift, transport=False)
            reduced = float(np.dot(shift, mu_new)) - sigma
        else:
            mu_new, c_new = price(shift)
            reduced = c_new + float(np.dot(shift, mu_new)) - sigma
        history = {"iteration": it, "objective": obj, "reduced_cost": reduced, "phase": 1 if phase_one else 2}
        if reduced >= -tol * scale:
            if phase_one:
                if obj > 1e-9 * scale:
                    raise InfeasibleError(
                        f"no measure keeps the attribute means within {tolerance} of the target "
                        f"(residual violation {obj:.3g})")
                phase_one = False
                continue
            break
        columns.append(mu_new)
        col_cost.append(c_new)
    else:
        raise ConvergenceError(
            f"column generation stopped after {max_iterations} rounds", residuals=history)

    theta = np.clip(theta, 0.0, None)
    theta /= theta.sum()
    mus = np.array(columns)
    if np.count_nonzero(theta) == 1:
        mu = mus[int(np.argmax(theta))].copy()
    else:
        mu = theta @ mus
    mu = np.clip(mu, 0.0, 1.0)
    objective = float(np.dot(theta, col_cost))
    return StealthPlan(WeightedMeasure(mu), None, max(objective, 0.0), N)
