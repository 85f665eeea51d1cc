"""The attacker side: stealthily biased measures and concrete sample draws.

A stealth measure ``mu`` puts prescribed mass ``k(s, y)`` on every
(sensitive, decision) bin, never more than 1 on a record, and is as close as
possible in transport cost to the uniform measure ``nu_i = K / N``. It is the
flow through the bin-to-record arcs of a layered network

    source -> u[bin] -> l[i] -> r[j] -> sink

with every capacity multiplied by N so that ``nu`` becomes integral.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import BinLabel, BinSpec, Dataset, WeightedMeasure, bin_histogram
from .errors import InfeasibleError
from .flow import FlowNetwork, solve_min_cost_flow
from .transport import GroundCost, nearest_arcs

__all__ = [
    "StealthPlan",
    "SampleDraw",
    "StealthNetwork",
    "build_stealth_network",
    "stealth_measure",
    "draw_sample",
    "case_control_sample",
    "baseline_random_sample",
    "bootstrap_stealth_measure",
    "measure_objective",
    "largest_remainder",
    "write_plan_csv",
    "read_plan_csv",
    "write_sample_csv",
]


@dataclass(frozen=True)
class StealthPlan:
    """A biased measure over a dataset and its transport cost to uniform.

    Attributes
    ----------
    measure : WeightedMeasure
        ``mu``, total mass ``bin_spec.K``.
    bin_spec : BinSpec or None
        None for plans built from mean constraints instead of bin counts.
    objective : float
        ``W(mu, nu)`` with both measures of mass K.
    scaled_by : int
        Factor applied to network capacities (the dataset size N).
    """

    measure: WeightedMeasure
    bin_spec: BinSpec | None
    objective: float
    scaled_by: int

    @property
    def objective_per_unit(self) -> float:
        """``W(mu / K, nu / K)``, the cost between the normalized measures."""
        K = self.K
        return self.objective / K if K else 0.0

    @property
    def K(self) -> int:
        if self.bin_spec is not None:
            return self.bin_spec.K
        return int(round(self.measure.total_mass))

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights


@dataclass(frozen=True)
class SampleDraw:
    """Selected record indices (sorted, distinct) and the seed that drew them."""

    indices: np.ndarray
    seed: object = None

    def __post_init__(self):
        idx = np.array(sorted(int(i) for i in self.indices), dtype=np.int64)
        if np.unique(idx).size != idx.size:
            raise ValueError("sample indices must be distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True)
class StealthNetwork:
    """The layered flow network plus the arc ranges callers need."""

    network: FlowNetwork
    demand: int
    scale: int
    bin_arcs: slice      # source -> u[bin], one per bin label
    record_arcs: slice   # u[bin(i)] -> l[i], in record order
    pair_arcs: slice     # l[i] -> r[j], row-major
    sink_arcs: slice     # r[j] -> sink
    cost_matrix: np.ndarray


def _check_feasible(data: Dataset, spec: BinSpec):
    have = bin_histogram(data)
    for label, k in spec.counts.items():
        if k and label.sensitive >= data.num_sensitive_classes:
            raise InfeasibleError(f"bin {tuple(label)} refers to an unknown sensitive class",
                                  deficient_bins=[label])
    bad = spec.deficient_bins(data)
    if bad:
        detail = ", ".join(f"(s={b.sensitive}, y={b.decision}): need {spec[b]}, have {have.get(b, 0)}"
                           for b in bad)
        raise InfeasibleError(f"bin counts exceed available records: {detail}", deficient_bins=bad)
    if spec.K > data.n:
        raise InfeasibleError(f"K={spec.K} exceeds dataset size {data.n}")


def build_stealth_network(data: Dataset, spec: BinSpec, cost: GroundCost | None = None,
                          cost_matrix=None) -> StealthNetwork:
    """Layered network whose min-cost flow of value N*K yields the stealth measure.

    Nodes: source 0, one node per bin label, one left and one right node per
    record, sink last. Arc capacities are N*k(s,y) out of the source, N into
    each left node, N*K between left and right nodes, K into the sink.

    Raises
    ------
    InfeasibleError
        If some bin asks for more records than it holds, or K > N.
    """
    cost = cost or GroundCost()
    _check_feasible(data, spec)
    N = data.n
    K = spec.K
    labels = data.bin_labels
    B = len(labels)
    k = spec.as_array(data.num_sensitive_classes)
    if cost_matrix is None:
        pts = cost.points(data)
        cost_matrix = cost.matrix(pts, pts)

    src = 0
    u0 = 1
    l0 = u0 + B
    r0 = l0 + N
    snk = r0 + N
    rec = np.arange(N)
    tail = np.concatenate([np.full(B, src), u0 + data.bin_index, np.repeat(l0 + rec, N),
                           r0 + rec])
    head = np.concatenate([u0 + np.arange(B), l0 + rec, np.tile(r0 + rec, N),
                           np.full(N, snk)])
    cap = np.concatenate([N * k, np.full(N, N), np.full(N * N, N * K), np.full(N, K)])
    arc_cost = np.concatenate([np.zeros(B + N), np.asarray(cost_matrix).ravel(), np.zeros(N)])
    net = FlowNetwork(snk + 1, tail, head, cap, arc_cost, src, snk)
    return StealthNetwork(
        network=net, demand=N * K, scale=N,
        bin_arcs=slice(0, B), record_arcs=slice(B, B + N),
        pair_arcs=slice(B + N, B + N + N * N), sink_arcs=slice(B + N + N * N, B + 2 * N + N * N),
        cost_matrix=np.asarray(cost_matrix))


def _solve_network(sn: StealthNetwork):
    N = sn.scale
    p0 = sn.pair_arcs.start
    cand = np.concatenate([np.arange(p0), p0 + nearest_arcs(sn.cost_matrix),
                           np.arange(sn.sink_arcs.start, sn.sink_arcs.stop)])
    return solve_min_cost_flow(sn.network, sn.demand,
                               candidate_arcs=cand if N * N > 20_000 else None)


def stealth_measure(data: Dataset, spec: BinSpec, cost: GroundCost | None = None,
                    *, cost_matrix=None) -> StealthPlan:
    """Measure in P(k) with the smallest transport cost to the uniform measure.

    ``mu_i`` is the flow into record i's left node divided by N; the objective
    is the flow cost divided by N, i.e. ``W(mu, nu)`` at total mass K.
    """
    sn = build_stealth_network(data, spec, cost, cost_matrix=cost_matrix)
    sol = _solve_network(sn)
    N = sn.scale
    mu = sol.arc_flows[sn.record_arcs] / N
    plan = StealthPlan(WeightedMeasure(mu), spec, sol.total_cost / N, N)
    return plan


# -- drawing concrete subsets ------------------------------------------------

def _systematic(weights, k, rng):
    """Madow systematic selection of exactly k items with inclusion prob = weight."""
    if k == 0:
        return np.empty(0, dtype=np.int64)
    c = np.cumsum(weights)
    c *= k / c[-1]
    c[-1] = k
    points = rng.random() + np.arange(k)
    picked = np.searchsorted(c, points, side="right")
    return np.unique(np.minimum(picked, len(weights) - 1))


def draw_sample(data: Dataset, plan: StealthPlan, seed=None) -> SampleDraw:
    """Draw a subset with exactly ``k(s, y)`` records per bin.

    Within each bin records are selected by systematic sampling over their
    weights, so record i is included with probability ``mu_i``. Plans without
    bin counts are sampled the same way over the whole dataset.
    """
    mu = plan.measure.weights
    if mu.size != data.n:
        raise ValueError("plan and dataset sizes differ")
    rng = np.random.default_rng(seed)
    if plan.bin_spec is None:
        return SampleDraw(_systematic(np.clip(mu, 0.0, 1.0), plan.K, rng), seed)
    bins = data.bin_index
    chosen = []
    for b, label in enumerate(data.bin_labels):
        k = plan.bin_spec[label]
        members = np.flatnonzero(bins == b)
        if k == 0:
            continue
        if k > members.size:
            raise InfeasibleError(f"plan needs {k} records from bin {tuple(label)}",
                                  deficient_bins=[label])
        w = np.clip(mu[members], 0.0, 1.0)
        if k == members.size or w.sum() <= 0:
            picked = np.arange(members.size) if k == members.size else np.arange(0)
        else:
            picked = _systematic(w, k, rng)
        if picked.size != k:
            raise ValueError(f"bin {tuple(label)}: weights do not support {k} distinct draws")
        chosen.append(members[picked])
    idx = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    return SampleDraw(idx, seed)


def case_control_sample(data: Dataset, spec: BinSpec, seed=None) -> SampleDraw:
    """Uniform ``k(s, y)``-subset of every bin, without replacement."""
    _check_feasible(data, spec)
    rng = np.random.default_rng(seed)
    bins = data.bin_index
    chosen = []
    for b, label in enumerate(data.bin_labels):
        k = spec[label]
        if k:
            chosen.append(rng.choice(np.flatnonzero(bins == b), size=k, replace=False))
    idx = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    return SampleDraw(idx, seed)


def baseline_random_sample(data: Dataset, K: int, seed=None) -> SampleDraw:
    """Uniform K-subset of the whole dataset (the unbiased reference draw)."""
    if not 0 <= K <= data.n:
        raise InfeasibleError(f"cannot draw {K} of {data.n} records")
    rng = np.random.default_rng(seed)
    return SampleDraw(rng.choice(data.n, size=int(K), replace=False), seed)


# -- bootstrap estimator ----------------------------------------------------

def largest_remainder(values, total):
    """Round nonnegative reals to integers with the given sum.

    Floors first, then hands the remaining units to the largest fractional
    parts (ties to the lowest index).
    """
    v = np.asarray(values, dtype=np.float64)
    base = np.floor(v + 1e-12).astype(np.int64)
    short = int(total) - int(base.sum())
    if short < 0 or short > v.size:
        raise ValueError("total incompatible with the values being rounded")
    frac = v - base
    order = np.lexsort((np.arange(v.size), -frac))
    base[order[:short]] += 1
    return base


def _randomized_round(values, total, rng):
    """Integers summing to ``total`` whose expectations equal ``values``.

    Floors first; the missing units go to entries chosen by systematic
    sampling on the fractional parts, so no entry is favoured by position.
    """
    v = np.asarray(values, dtype=np.float64)
    base = np.floor(v + 1e-12).astype(np.int64)
    short = int(total) - int(base.sum())
    frac = np.clip(v - base, 0.0, 1.0)
    if short <= 0 or frac.sum() <= 0:
        return largest_remainder(v, total)
    base[_systematic(frac, short, rng)] += 1
    return base


def _cap_at_one(w, target):
    """Scale ``w`` to sum ``target`` and push any excess over 1 onto the others."""
    w = w.astype(np.float64).copy()
    s = w.sum()
    if s <= 0:
        if target > 0:
            raise ValueError("no support to carry the bin mass")
        return w
    if abs(s - target) > 1e-9 * max(1.0, target):
        w *= target / s
    for _ in range(w.size + 1):
        over = w > 1.0
        if not over.any():
            break
        excess = float((w[over] - 1.0).sum())
        w[over] = 1.0
        free = (w > 0) & (w < 1.0)
        if not free.any() or excess <= 1e-15:
            break
        w[free] += excess * w[free] / w[free].sum()
    if w.max() > 1.0 + 1e-9:
        raise ValueError("bin support too small to keep every weight at most 1")
    return np.minimum(w, 1.0)


def measure_objective(data: Dataset, weights, cost: GroundCost | None = None,
                      resolution: int = 10_000, cost_matrix=None) -> float:
    """Transport cost from an arbitrary real measure to the uniform one.

    Weights are rounded onto the lattice ``1 / (N * resolution)`` with the
    total preserved, so the error is at most ``max_cost / resolution``.
    """
    from .transport import _integral_transport

    cost = cost or GroundCost()
    w = np.asarray(weights, dtype=np.float64)
    N = data.n
    q = N * int(resolution)
    K = w.sum()
    total = int(round(K * q))
    iw = largest_remainder(w * q * (total / (K * q)) if K > 0 else w * 0, total)
    nu = largest_remainder(np.full(N, total / N), total)
    if cost_matrix is None:
        pts = cost.points(data)
        cost_matrix = cost.matrix(pts, pts)
    value, _ = _integral_transport(np.asarray(cost_matrix), iw, nu)
    return max(value / q, 0.0)


def _round_seed(seed, r):
    return np.random.SeedSequence(entropy=seed, spawn_key=(r,)) if seed is not None else None


def bootstrap_stealth_measure(data: Dataset, spec: BinSpec, cost: GroundCost | None = None,
                              subset_size: int | None = None, rounds: int = 30, seed=None,
                              *, subsets=None) -> StealthPlan:
    """Approximate stealth measure averaged over solves on random subsets.

    Each round draws ``subset_size`` records (stratified by bin, proportional
    allocation), solves the stealth problem there with counts
    ``k'(s, y) = k(s, y) * subset_size / N`` rounded by largest remainder, and
    each record's weight is its mean over the rounds that drew it. Every bin
    is then rescaled to its mass ``k(s, y)``, with weights above 1
    redistributed within the bin. Records never drawn get weight 0.

    Parameters
    ----------
    subsets : sequence of index arrays, optional
        Use these subsets instead of random ones (one per round).

    Raises
    ------
    InfeasibleError
        If a round's subset cannot meet its scaled counts; the message names
        the round.
    """
    cost = cost or GroundCost()
    N = data.n
    subset_size = N if subset_size is None else int(subset_size)
    if not 1 <= subset_size <= N:
        raise ValueError("subset_size must be in [1, N]")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _check_feasible(data, spec)
    if subsets is not None:
        subsets = [np.sort(np.asarray(s, dtype=np.int64)) for s in subsets]
        rounds = len(subsets)

    labels = data.bin_labels
    k_full = spec.as_array(data.num_sensitive_classes)
    bins = data.bin_index
    members = [np.flatnonzero(bins == b) for b in range(len(labels))]
    sizes = np.array([m.size for m in members])

    pts = cost.points(data)
    acc = np.zeros(N)
    seen = np.zeros(N, dtype=np.int64)
    for r in range(rounds):
        rng = np.random.default_rng(_round_seed(seed, r))
        if subsets is not None:
            idx = subsets[r]
        elif subset_size == N:
            idx = np.arange(N)
        else:
            per_bin = largest_remainder(sizes * subset_size / N, subset_size)
            idx = np.sort(np.concatenate([rng.choice(m, size=c, replace=False)
                                          for m, c in zip(members, per_bin) if c]))
        n_sub = idx.size
        if n_sub == N:
            k_sub = k_full
        else:
            K_sub = int(round(spec.K * n_sub / N))
            k_sub = _randomized_round(k_full * n_sub / N, K_sub, rng)
        sub_spec = BinSpec({lab: int(c) for lab, c in zip(labels, k_sub)})
        sub = data.subset(idx)
        try:
            plan = stealth_measure(sub, sub_spec, cost,
                                   cost_matrix=cost.matrix(pts[idx], pts[idx]))
        except InfeasibleError as exc:
            raise InfeasibleError(f"bootstrap round {r}: {exc}",
                                  deficient_bins=exc.deficient_bins) from exc
        acc[idx] += plan.measure.weights
        seen[idx] += 1

    # per-record mean over the rounds that drew it; dividing by ``rounds``
    # instead would scale each weight by its (random) draw count
    avg = np.divide(acc, seen, out=np.zeros(N), where=seen > 0)
    mu = np.zeros(N)
    for b, m in enumerate(members):
        if m.size:
            mu[m] = _cap_at_one(avg[m], float(k_full[b]))
    if subset_size == N and rounds == 1 and subsets is None:
        objective = plan.objective
    else:
        objective = measure_objective(data, mu, cost, cost_matrix=cost.matrix(pts, pts))
    return StealthPlan(WeightedMeasure(mu), spec, objective, N)


# -- serialization ------------------------------------------------------------

def write_plan_csv(plan: StealthPlan, path) -> None:
    """Write ``index,mu`` rows."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "mu"])
        for i, v in enumerate(plan.measure.weights):
            w.writerow([i, repr(float(v))])


def read_plan_csv(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = np.zeros(len(rows))
    for r in rows:
        out[int(r["index"])] = float(r["mu"])
    return out


def write_sample_csv(draw: SampleDraw, path) -> None:
    """Write the selected record indices, one per row."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index"])
        for i in draw.indices:
            w.writerow([int(i)])
