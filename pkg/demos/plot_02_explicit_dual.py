"""
The dual of a strictly convex QP
================================

For ``minimize 1/2 x'Qx + c'x  s.t.  Ax <= b`` with ``Q`` positive definite
the Lagrangian minimizer is ``x = -Q^{-1}(c + A'lam)``, which leaves a QP in
the multipliers alone.  We build it, solve it, and map the multipliers back.
"""

from pathlib import Path

import numpy as np

from capdispatch import (
    build_dual_qp,
    build_qp,
    compile_dispatch,
    dual_function_value,
    duality_gap,
    load_case,
    recover_primal,
    solve,
    solve_dual_qp,
)

# a one-variable example: minimize x^2 - 4x subject to x <= 1
qp = build_qp([[2.0]], [-4.0], [[1.0]], [1.0])
dq = build_dual_qp(qp)
print(f"P = {dq.P[0, 0]:g}, t = {dq.t[0]:g}, constant = {dq.constant:g}")

# the dual function is concave in lam and never exceeds the primal optimum
for lam in (0.0, 1.0, 2.0, 3.0):
    print(f"g({lam:g}) = {dual_function_value(dq, [lam]):g}")

dual = solve_dual_qp(dq)
x = recover_primal(qp, dual.x)
print(f"lam* = {dual.x[0]:.6g}, x(lam*) = {x[0]:.6g}, bound = {dq.bound(dual.objective):.6g}")
print(f"gap at (x=1, lam=2): {duality_gap(qp, [1.0], [2.0]):.2e}")
print(f"gap at (x=1, lam=0): {duality_gap(qp, [1.0], [0.0]):.2e}")

# a dispatch case with quadratic generator costs is strictly convex in its
# outputs; the balance equality is folded into a pair of inequalities
CASES = Path(__file__).resolve().parent.parent / "cases"
qp, rows = compile_dispatch(load_case(CASES / "quad_case.json"))
dq = build_dual_qp(qp)
dual = solve_dual_qp(dq)
primal = solve(qp)
lam, nu = dq.split(dual.x)
print()
print("folded equalities:", dq.folded)
print("primal optimum", round(primal.objective, 8), "dual bound", round(dq.bound(dual.objective), 8))
print("price from dual QP", np.round(nu, 6), "from primal solve", np.round(primal.nu, 6))
print("recovered dispatch", np.round(recover_primal(qp, dual.x), 6))
