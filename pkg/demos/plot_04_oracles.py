"""
Checking the solver against brute force
=======================================

Small LPs can be solved by trying every basis; tiny QPs by grid search.
Both are slow but obviously correct, which makes them good references for
the interior-point solver.
"""

import time

import numpy as np

from capdispatch import build_qp, grid_oracle, kkt_residuals, solve, vertex_oracle

rng = np.random.default_rng(0)


def random_lp(n, m):
    A = rng.uniform(-5, 5, (m, n))
    b = A @ rng.uniform(-3, 3, n) + rng.uniform(0.1, 2, m)
    # c inside the cone of the rows keeps the LP bounded
    c = -A.T @ rng.uniform(0, 2, m)
    return build_qp(np.zeros((n, n)), c, A, b)


start = time.perf_counter()
worst = 0.0
for _ in range(200):
    lp = random_lp(int(rng.integers(1, 6)), int(rng.integers(5, 9)))
    sol, ref = solve(lp), vertex_oracle(lp)
    worst = max(worst, abs(sol.objective - ref.objective))
    assert kkt_residuals(lp, sol).passed
print(f"200 LPs: worst objective difference {worst:.1e} in {time.perf_counter() - start:.2f}s")

# a bounded QP in two variables, checked on a refining grid
Q = np.array([[3.0, 1.0], [1.0, 2.0]])
qp = build_qp(Q, [-4.0, 1.0], np.vstack([np.eye(2), -np.eye(2)]), np.full(4, 2.0))
grid = grid_oracle(qp, [-2, -2], [2, 2], resolution=1e-5)
sol = solve(qp)
print(f"QP: solver {sol.objective:.8f}, grid {grid.objective:.8f} "
      f"(+/- {grid.accuracy:.1e} after {grid.stages} stages)")
