"""
Congestion splits prices
========================

Two buses joined by a line that carries at most 4 units.  Cheap power (1
per unit, up to 5) sits at bus 1; the 8-unit demand and an expensive
generator (10 per unit) sit at bus 2.  The line saturates, so bus 2 pays 10
while bus 1 pays 1.  Capping bus 2 at 6 replaces the expensive generator
with 4 units of relief.
"""

from pathlib import Path

from capdispatch import (
    CapSpec,
    apply_caps,
    compile_dispatch,
    kkt_residuals,
    load_case,
    sensitivity_check,
    solve,
    solve_capped,
)

CASES = Path(__file__).resolve().parent.parent / "cases"
qp, rows = compile_dispatch(load_case(CASES / "two_bus.json"))

sol = solve(qp)
for bus, idx in rows.balance:
    print(f"{bus}: price {sol.nu[idx]:.4g}")
line = rows.row("line_limit[L12,+]").index
print(f"line flow {qp.A[line] @ sol.x:.4g}, congestion rent per unit {sol.lam[line]:.4g}")

# each price is the cost of one more unit of demand at that bus
for bus, _ in rows.balance:
    rep = sensitivity_check(qp, rows, rows.balance_row(bus).label, base=sol)
    print(f"{rep.row}: dual {rep.analytic:.6g}, finite difference {rep.estimate:.6g}")

spec = CapSpec.for_buses(rows, {"bus2": 6.0})
cq, crows = apply_caps(qp, rows, spec)
csol = solve_capped(cq, crows)
print()
print("capped at 6:")
for bus, idx in rows.balance:
    print(f"{bus}: price {csol.nu[idx]:.4g}")
print(f"relief {csol.x[crows.var('alpha[balance[bus2]]')]:.3f}, "
      f"expensive generator {abs(csol.x[crows.var('pg[G2]')]):.3f}")
print("KKT pass:", kkt_residuals(cq, csol, crows).passed)
