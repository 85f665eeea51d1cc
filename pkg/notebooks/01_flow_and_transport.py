"""
Min-cost flow and exact transport
=================================

The solver underneath everything: a network simplex on integral
capacities, and transport costs between weighted point sets built on it.
"""

import numpy as np
from stealthbias import FlowNetwork, GroundCost, InfeasibleError, solve_min_cost_flow, transport_cost

# Two routes from 0 to 3; the cheap one only carries a single unit.
net = FlowNetwork.from_arcs(4, [(0, 1, 1, 1.0), (1, 3, 1, 0.0),
                                (0, 2, 5, 2.5), (2, 3, 5, 0.0)], source=0, sink=3)
sol = solve_min_cost_flow(net, 3)
print("cost:", sol.total_cost, "flows:", sol.arc_flows)

# Reduced costs certify the optimum: nonnegative on arcs with spare room,
# nonpositive on arcs that carry flow.
red = sol.reduced_costs(net)
print("reduced costs:", np.round(red, 12))

# Asking for more than the network can carry reports how far it got.
try:
    solve_min_cost_flow(net, 10)
except InfeasibleError as err:
    print("infeasible, max flow =", err.max_flow)

# %%
# Transport between two clouds of points. Masses may be any rationals.
rng = np.random.default_rng(0)
a, b = rng.normal(size=(50, 2)), rng.normal(loc=0.5, size=(40, 2))
wa, wb = np.full(50, 1 / 50), np.full(40, 1 / 40)
print("W2^2:", transport_cost(a, wa, b, wb))
print("W1:  ", transport_cost(a, wa, b, wb, GroundCost("euclidean")))
