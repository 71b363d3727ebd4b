"""
A star graph has a regular partition too
========================================

The star K_{1,n-1} is the standard example of a sparse graph with no
upper-uniformity: one vertex carries all the edges. Normalization by the
total mass still yields a regular partition.
"""

import numpy as np

from regulattice import RunConfig, adjacency_from_edges, graph_regular_partition

n = 256
G = adjacency_from_edges(n, [(0, v) for v in range(1, n)])
res = graph_regular_partition(G, RunConfig(epsilon=0.5, mode="graph"))

part = res.vertex_partition
print("status:", res.run.status.value)
print("classes:", part.class_count, "of size", len(part.classes[0]))
print("exceptional vertices:", len(part.exceptional))
print(f"irregular pairs: {res.irregular_pairs} of {len(res.pair_verdicts)}")

###############################################################################
# Only pairs that involve the hub's class can be irregular.

hub = next(i for i, c in enumerate(part.classes) if 0 in c)
bad = sorted(ij for ij, v in res.pair_verdicts.items() if v.value == "irregular")
print("hub class:", hub)
print("every irregular pair touches it:", all(hub in ij for ij in bad))
print("regular partition:", res.is_regular)
