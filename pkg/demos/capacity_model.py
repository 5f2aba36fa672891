"""
Rewards and penalties in Mbit/s
===============================

The capacity model averages the Shannon rate over a node's service disk.
A co-channel neighbour adds its received power to the noise floor.
"""
import numpy as np

from cbrsca.graph import build_nonbinary_graph
from cbrsca.objective import CapacityParams, assign_rewards, channel_capacity
from cbrsca.radio import Point, RadioParams, service_radius
from cbrsca.scenario import GAANode, generate_gaa_scenario
from cbrsca.solve import max_utility

p = RadioParams()
r = service_radius(p)
node = GAANode(0, Point(0, 0), p)
cap = CapacityParams()
print(f"service radius {1000 * r:.1f} m, clean channel {channel_capacity(node, cap) / 1e6:.2f} Mbit/s")

for k in (0.5, 1, 2, 4):
    other = GAANode(1, Point(k * r, 0), p)
    print(f"  neighbour at {k} x radius: {channel_capacity(node, cap, other) / 1e6:.2f} Mbit/s")

sc = generate_gaa_scenario(0.3, seed=1, n_nodes=25)
g = assign_rewards(build_nonbinary_graph(sc, "capacity"), "capacity", sc)
sol = max_utility(g, 1.0)
print(f"{sc.n} nodes, mean reward per block {np.mean(g.rewards()):.1f} Mbit/s")
print(f"selected {len(sol.selected)} blocks, net utility {sol.objective:.1f} Mbit/s")
