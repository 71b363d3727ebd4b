"""
One partition for two matrices
==============================

Two unrelated 0/1 matrices on the same index sets share a single block
partition that is regular for both.
"""

import numpy as np

from regulattice import RunConfig, simultaneous_partition, verify_partition

rng = np.random.default_rng(4)
n = 128
rows_pattern = np.kron(rng.random((4, 4)) < 0.5, np.ones((32, 32)))
A = (rng.random((n, n)) < 0.2 + 0.6 * rows_pattern).astype(float)
B = (rng.random((n, n)) < 0.4).astype(float)

res = simultaneous_partition([A, B], RunConfig(epsilon=0.5, mode="multi"))
print("status:", res.status.value, "after", len(res.iterations), "iterations")
print("cap:", res.max_iterations)
for name, M, phi in zip("AB", (A, B), res.final_phis):
    rep = verify_partition(M, res.partition, 0.5)
    print(f"{name}: final phi {phi:.1f}, irregular {rep.irregular}/{rep.blocks}, passed={rep.passed}")
