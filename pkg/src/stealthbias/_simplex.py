"""Primal network simplex kernel.

Spanning-tree bookkeeping uses parent/thread/successor-count arrays and a
strongly feasible tree (leaving arc chosen last on the cycle orientation),
which rules out cycling under degenerate pivots. Entering arcs are found by
block search; within a block the first arc with the most negative reduced
cost wins, so ties go to the lowest index scanned.

Capacities and flows are int64, costs float64. Capacities at or above
``INF_CAP`` are treated as unbounded.
"""

import numpy as np
from numba import njit

INF_CAP = np.int64(1) << np.int64(62)

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2

_UP = 1
_DOWN = -1


@njit(cache=True)
def _recompute_potentials(root, thread, parent, pred, pred_dir, cost, src, pi):
    pi[root] = 0.0
    u = thread[root]
    while u != root:
        e = pred[u]
        if pred_dir[u] == _UP:
            pi[u] = pi[parent[u]] - cost[e]
        else:
            pi[u] = pi[parent[u]] + cost[e]
        u = thread[u]


@njit(cache=True)
def network_simplex(n, tail, head, cap_in, cost_in, supply, eps):
    m = tail.shape[0]
    all_m = m + n
    root = n

    src = np.empty(all_m, np.int64)
    tgt = np.empty(all_m, np.int64)
    cap = np.empty(all_m, np.int64)
    cost = np.empty(all_m, np.float64)
    flow = np.zeros(all_m, np.int64)
    state = np.ones(all_m, np.int8)
    for e in range(m):
        src[e] = tail[e]
        tgt[e] = head[e]
        cap[e] = cap_in[e]
        cost[e] = cost_in[e]

    parent = np.empty(n + 1, np.int64)
    pred = np.empty(n + 1, np.int64)
    thread = np.empty(n + 1, np.int64)
    rev_thread = np.empty(n + 1, np.int64)
    succ_num = np.empty(n + 1, np.int64)
    last_succ = np.empty(n + 1, np.int64)
    pred_dir = np.zeros(n + 1, np.int8)
    pi = np.zeros(n + 1, np.float64)
    dirty = np.empty(n + 1, np.int64)

    max_cost = 0.0
    for e in range(m):
        if abs(cost[e]) > max_cost:
            max_cost = abs(cost[e])
    art_cost = (max_cost + 1.0) * (n + 1)

    parent[root] = -1
    pred[root] = -1
    thread[root] = 0
    rev_thread[0] = root
    succ_num[root] = n + 1
    last_succ[root] = root - 1
    pi[root] = 0.0
    for u in range(n):
        e = m + u
        parent[u] = root
        pred[u] = e
        thread[u] = u + 1
        rev_thread[u + 1] = u
        succ_num[u] = 1
        last_succ[u] = u
        cap[e] = INF_CAP
        state[e] = 0
        if supply[u] >= 0:
            pred_dir[u] = _UP
            pi[u] = 0.0
            src[e] = u
            tgt[e] = root
            flow[e] = supply[u]
            cost[e] = 0.0
        else:
            pred_dir[u] = _DOWN
            pi[u] = art_cost
            src[e] = root
            tgt[e] = u
            flow[e] = -supply[u]
            cost[e] = art_cost

    block = max(int(np.sqrt(m)), 10)
    next_arc = 0
    pivots = 0

    while True:
        while True:
            # entering arc: block search
            in_arc = -1
            best = -eps
            cnt = block
            stop = False
            e = next_arc
            while e < m:
                c = state[e] * (cost[e] + pi[src[e]] - pi[tgt[e]])
                if c < best:
                    best = c
                    in_arc = e
                cnt -= 1
                if cnt == 0:
                    if in_arc >= 0:
                        stop = True
                        break
                    cnt = block
                e += 1
            if not stop:
                e = 0
                while e < next_arc:
                    c = state[e] * (cost[e] + pi[src[e]] - pi[tgt[e]])
                    if c < best:
                        best = c
                        in_arc = e
                    cnt -= 1
                    if cnt == 0:
                        if in_arc >= 0:
                            break
                        cnt = block
                    e += 1
            if in_arc < 0:
                break
            next_arc = e if e < m else 0
            pivots += 1

            # join node
            u = src[in_arc]
            v = tgt[in_arc]
            while u != v:
                if succ_num[u] < succ_num[v]:
                    u = parent[u]
                else:
                    v = parent[v]
            join = u

            # leaving arc
            if state[in_arc] == 1:
                first = src[in_arc]
                second = tgt[in_arc]
            else:
                first = tgt[in_arc]
                second = src[in_arc]
            delta = cap[in_arc]
            result = 0
            u_out = -1
            u = first
            while u != join:
                a = pred[u]
                d = flow[a]
                if pred_dir[u] == _DOWN:
                    d = INF_CAP if cap[a] >= INF_CAP else cap[a] - d
                if d < delta:
                    delta = d
                    u_out = u
                    result = 1
                u = parent[u]
            u = second
            while u != join:
                a = pred[u]
                d = flow[a]
                if pred_dir[u] == _UP:
                    d = INF_CAP if cap[a] >= INF_CAP else cap[a] - d
                if d <= delta:
                    delta = d
                    u_out = u
                    result = 2
                u = parent[u]
            if result == 1:
                u_in = first
                v_in = second
            else:
                u_in = second
                v_in = first
            if delta >= INF_CAP:
                return flow[:m].copy(), pi[:n].copy(), UNBOUNDED, pivots
            change = result != 0

            # push flow around the cycle
            if delta > 0:
                val = state[in_arc] * delta
                flow[in_arc] += val
                u = src[in_arc]
                while u != join:
                    flow[pred[u]] -= pred_dir[u] * val
                    u = parent[u]
                u = tgt[in_arc]
                while u != join:
                    flow[pred[u]] += pred_dir[u] * val
                    u = parent[u]
            if not change:
                state[in_arc] = -state[in_arc]
                continue
            state[in_arc] = 0
            out_arc = pred[u_out]
            state[out_arc] = 1 if flow[out_arc] == 0 else -1

            # tree structure update
            old_rev_thread = rev_thread[u_out]
            old_succ_num = succ_num[u_out]
            old_last_succ = last_succ[u_out]
            v_out = parent[u_out]

            if u_in == u_out:
                parent[u_in] = v_in
                pred[u_in] = in_arc
                pred_dir[u_in] = _UP if u_in == src[in_arc] else _DOWN
                if thread[v_in] != u_out:
                    after = thread[old_last_succ]
                    thread[old_rev_thread] = after
                    rev_thread[after] = old_rev_thread
                    after = thread[v_in]
                    thread[v_in] = u_out
                    rev_thread[u_out] = v_in
                    thread[old_last_succ] = after
                    rev_thread[after] = old_last_succ
            else:
                if old_rev_thread == v_in:
                    thread_continue = thread[old_last_succ]
                else:
                    thread_continue = thread[v_in]
                stem = u_in
                par_stem = v_in
                last = last_succ[u_in]
                after = thread[last]
                thread[v_in] = u_in
                ndirty = 0
                dirty[ndirty] = v_in
                ndirty += 1
                while stem != u_out:
                    next_stem = parent[stem]
                    thread[last] = next_stem
                    dirty[ndirty] = last
                    ndirty += 1
                    before = rev_thread[stem]
                    thread[before] = after
                    rev_thread[after] = before
                    parent[stem] = par_stem
                    par_stem = stem
                    stem = next_stem
                    if last_succ[stem] == last_succ[par_stem]:
                        last = rev_thread[par_stem]
                    else:
                        last = last_succ[stem]
                    after = thread[last]
                parent[u_out] = par_stem
                thread[last] = thread_continue
                rev_thread[thread_continue] = last
                last_succ[u_out] = last
                if old_rev_thread != v_in:
                    thread[old_rev_thread] = after
                    rev_thread[after] = old_rev_thread
                for k in range(ndirty):
                    w = dirty[k]
                    rev_thread[thread[w]] = w
                tmp_sc = 0
                tmp_ls = last_succ[u_out]
                w = u_out
                p = parent[w]
                while w != u_in:
                    pred[w] = pred[p]
                    pred_dir[w] = -pred_dir[p]
                    tmp_sc += succ_num[w] - succ_num[p]
                    succ_num[w] = tmp_sc
                    last_succ[p] = tmp_ls
                    w = p
                    p = parent[w]
                pred[u_in] = in_arc
                pred_dir[u_in] = _UP if u_in == src[in_arc] else _DOWN
                succ_num[u_in] = old_succ_num

            up_limit_out = join if last_succ[join] == v_in else -1
            last_succ_out = last_succ[u_out]
            w = v_in
            while w != -1 and last_succ[w] == v_in:
                last_succ[w] = last_succ_out
                w = parent[w]
            if join != old_rev_thread and v_in != old_rev_thread:
                w = v_out
                while w != up_limit_out and last_succ[w] == old_last_succ:
                    last_succ[w] = old_rev_thread
                    w = parent[w]
            elif last_succ_out != old_last_succ:
                w = v_out
                while w != up_limit_out and last_succ[w] == old_last_succ:
                    last_succ[w] = last_succ_out
                    w = parent[w]
            w = v_in
            while w != join:
                succ_num[w] += old_succ_num
                w = parent[w]
            w = v_out
            while w != join:
                succ_num[w] -= old_succ_num
                w = parent[w]

            # potentials of the moved subtree
            if pred_dir[u_in] == _UP:
                sigma = pi[v_in] - pi[u_in] - cost[in_arc]
            else:
                sigma = pi[v_in] - pi[u_in] + cost[in_arc]
            end = thread[last_succ[u_in]]
            w = u_in
            while w != end:
                pi[w] += sigma
                w = thread[w]

        # clear accumulated drift, then confirm no arc prices in
        _recompute_potentials(root, thread, parent, pred, pred_dir, cost, src, pi)
        again = False
        for e in range(m):
            if state[e] * (cost[e] + pi[src[e]] - pi[tgt[e]]) < -eps:
                again = True
                break
        if not again:
            break

    for e in range(m, all_m):
        if flow[e] != 0:
            return flow[:m].copy(), pi[:n].copy(), INFEASIBLE, pivots
    return flow[:m].copy(), pi[:n].copy(), OPTIMAL, pivots
