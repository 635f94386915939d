"""
Capping the price of a one-bus market
=====================================

A gas generator sells at 5 per unit and a flexible load values power at 8
per unit, consuming between 1 and 10 units.  Without a cap the market
clears at a price of 5.  Capping the price at 3 adds a relief variable
alpha: the load reduction needed to hold the price down.
"""

from pathlib import Path

from capdispatch import (
    CapSpec,
    apply_caps,
    compare_kkt,
    compile_dispatch,
    interpret,
    load_case,
    solve,
    solve_capped,
)

CASES = Path(__file__).resolve().parent.parent / "cases"

# compile the case into minimize 1/2 x'Qx + c'x with named rows
case = load_case(CASES / "widget.json")
qp, rows = compile_dispatch(case)
print("variables:", rows.variables)
print("rows:", rows.ineq_rows + rows.eq_rows)

# the balance dual is the local price
sol = solve(qp)
bal = rows.balance_row("bus1").index
print(f"uncapped: price {sol.nu[bal]:.4g}, welfare {qp.display_objective(sol.objective):.4g}")

# cap the price at 3: relief at 3 undercuts generation at 5
spec = CapSpec.for_buses(rows, {"bus1": 3.0})
cq, crows = apply_caps(qp, rows, spec)
csol = solve_capped(cq, crows)
report = interpret(csol, crows, spec, uncapped=sol, uncapped_rowmap=rows)
cap = report.by_row("balance[bus1]")
print(f"capped:   price {cap.achieved_dual:.3f}, alpha {cap.alpha:.3f}, "
      f"generation {abs(csol.x[crows.var('pg[G1]')]):.3f}")

# a cap above the market price changes nothing
for m in (3.0, 5.0, 7.0):
    spec_m = CapSpec.for_buses(rows, {"bus1": m})
    q_m, r_m = apply_caps(qp, rows, spec_m)
    out = interpret(solve_capped(q_m, r_m), r_m, spec_m).outcomes[0]
    print(f"m = {m:g}: alpha {abs(out.alpha):.3f}, binding {out.binding}")

# which optimality conditions did the cap change?
print()
print(compare_kkt(qp, cq, sol, csol, rows, crows).render())
