"""Exact minimum-cost flow on capacitated directed graphs.

The solver is a primal network simplex (see ``_simplex``) working on integer
capacities and real costs. Optimality is certified by node potentials: with
``reduced = cost + potentials[tail] - potentials[head]`` every arc with spare
capacity has ``reduced >= 0`` and every arc carrying flow has ``reduced <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from ._simplex import INF_CAP, INFEASIBLE, UNBOUNDED, network_simplex
from .errors import InfeasibleError

__all__ = [
    "FlowNetwork",
    "FlowSolution",
    "solve_min_cost_flow",
    "max_flow_value",
    "INF_CAP",
]

_INT32_MAX = np.iinfo(np.int32).max


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FlowNetwork:
    """Directed graph with integer capacities and real arc costs.

    Arcs are stored column-wise; arc ``e`` runs ``tail[e] -> head[e]``.
    Capacities at or above ``INF_CAP`` mean "unbounded".
    """

    node_count: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray
    cost: np.ndarray
    source: int
    sink: int

    def __post_init__(self):
        tail = _frozen(self.tail, np.int64)
        head = _frozen(self.head, np.int64)
        cap = _frozen(self.capacity, np.int64)
        cost = _frozen(self.cost, np.float64)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "cost", cost)
        n = int(self.node_count)
        if n < 2:
            raise ValueError("a flow network needs at least two nodes")
        if not (tail.shape == head.shape == cap.shape == cost.shape):
            raise ValueError("arc arrays must have equal length")
        if tail.size and (tail.min() < 0 or head.min() < 0
                          or tail.max() >= n or head.max() >= n):
            raise ValueError("arc endpoint out of range")
        if cap.size and cap.min() < 0:
            raise ValueError("capacities must be nonnegative")
        if not np.all(np.isfinite(cost)):
            raise ValueError("arc costs must be finite")
        if not (0 <= self.source < n and 0 <= self.sink < n):
            raise ValueError("source/sink out of range")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")

    @classmethod
    def from_arcs(cls, node_count, arcs, source, sink):
        """Build from an iterable of ``(tail, head, capacity, cost)`` tuples."""
        arcs = list(arcs)
        if arcs:
            t, h, c, a = zip(*arcs)
        else:
            t = h = c = a = ()
        return cls(node_count, np.array(t, dtype=np.int64), np.array(h, dtype=np.int64),
                   np.array(c, dtype=np.int64), np.array(a, dtype=np.float64),
                   source, sink)

    @property
    def arc_count(self):
        return int(self.tail.size)


@dataclass(frozen=True)
class FlowSolution:
    arc_flows: np.ndarray
    total_cost: float
    potentials: np.ndarray
    pivots: int = 0

    def reduced_costs(self, network: FlowNetwork) -> np.ndarray:
        p = self.potentials
        return network.cost + p[network.tail] - p[network.head]


def max_flow_value(network: FlowNetwork, limit: int | None = None) -> int:
    """Value of a maximum source-sink flow.

    Parameters
    ----------
    network : FlowNetwork
    limit : int, optional
        Stop counting at this value; the result is ``min(maxflow, limit)``.
        Used for feasibility checks on networks whose total capacity would
        not fit the 32-bit max-flow backend.
    """
    n = network.node_count
    tail, head, cap = network.tail, network.head, network.capacity
    keep = (cap > 0) & (tail != head)
    tail, head, cap = tail[keep], head[keep], cap[keep]
    src = network.source
    if limit is not None:
        if limit <= 0:
            return 0
        tail = np.append(tail, n)
        head = np.append(head, network.source)
        cap = np.append(cap, limit)
        src = n
        n += 1
    cap = np.minimum(cap, _INT32_MAX).astype(np.int32)
    graph = csr_matrix((cap, (tail, head)), shape=(n, n), dtype=np.int64)
    # parallel arcs were summed by csr construction; re-clip the merged values
    graph.data = np.minimum(graph.data, _INT32_MAX)
    graph = graph.astype(np.int32)
    return int(maximum_flow(graph, src, network.sink, method="dinic").flow_value)


def _run_simplex(n, tail, head, cap, cost, supply, eps):
    flows, pi, status, pivots = network_simplex(n, tail, head, cap, cost, supply, eps)
    if status == UNBOUNDED:
        raise ValueError("negative-cost cycle of unbounded capacity")
    return flows, pi, status, pivots


def solve_min_cost_flow(network: FlowNetwork, demand: int,
                        candidate_arcs=None, max_rounds: int = 200) -> FlowSolution:
    """Cheapest integral flow of value ``demand`` from source to sink.

    Parameters
    ----------
    network : FlowNetwork
    demand : int
    candidate_arcs : array_like, optional
        Boolean mask or index array of arcs to start from. When given, the
        simplex runs on this subset; every other arc is then priced against
        the returned potentials and violators are added until none remain,
        so the result is optimal for the full network. Useful for dense
        bipartite networks where few arcs carry flow.
    max_rounds : int
        Bound on pricing rounds before falling back to the full arc set.

    Raises
    ------
    InfeasibleError
        If the maximum flow is below ``demand``; ``max_flow`` on the error
        holds the achievable value.
    """
    demand = int(demand)
    if demand < 0:
        raise ValueError("demand must be nonnegative")
    achievable = max_flow_value(network, limit=demand)
    if achievable < demand:
        raise InfeasibleError(
            f"maximum flow {achievable} is below the demand {demand}", max_flow=achievable)

    n = network.node_count
    m = network.arc_count
    supply = np.zeros(n, dtype=np.int64)
    supply[network.source] = demand
    supply[network.sink] = -demand
    max_cost = float(np.abs(network.cost).max()) if m else 0.0
    eps = 1e-11 * (1.0 + max_cost)
    tail, head, cap, cost = network.tail, network.head, network.capacity, network.cost

    if candidate_arcs is None:
        active = np.arange(m)
    else:
        mask = np.zeros(m, dtype=bool)
        mask[np.asarray(candidate_arcs)] = True
        active = np.flatnonzero(mask)

    pivots = 0
    for _ in range(max_rounds):
        flows_a, pi, status, piv = _run_simplex(
            n, tail[active], head[active], cap[active], cost[active], supply, eps)
        pivots += piv
        if active.size == m:
            break
        reduced = cost + pi[tail] - pi[head]
        inactive = np.ones(m, dtype=bool)
        inactive[active] = False
        # inactive arcs sit at zero flow, so only negative reduced cost violates
        bad = np.flatnonzero(inactive & (reduced < -eps) & (cap > 0))
        if bad.size == 0:
            break
        limit = max(4 * n, 1000)
        if bad.size > limit:
            bad = bad[np.argpartition(reduced[bad], limit)[:limit]]
        active = np.union1d(active, bad)
    else:
        active = np.arange(m)
        flows_a, pi, status, piv = _run_simplex(n, tail, head, cap, cost, supply, eps)
        pivots += piv

    if status == INFEASIBLE:
        # the max-flow pre-pass ruled this out; reaching here is a solver bug
        raise InfeasibleError("network simplex reported infeasibility", max_flow=achievable)
    flows = np.zeros(m, dtype=np.int64)
    flows[active] = flows_a
    pi = pi - pi[network.source]
    flows.setflags(write=False)
    pi.setflags(write=False)
    total = float(np.dot(cost, flows.astype(np.float64)))
    return FlowSolution(arc_flows=flows, total_cost=total, potentials=pi, pivots=int(pivots))
