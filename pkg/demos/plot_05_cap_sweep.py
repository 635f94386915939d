"""
Sweeping the cap
================

As the cap falls below the market price the relief variable grows.  When
demand has no upper limit and the cap drops below what the load is worth,
relief is a money pump: the capped problem becomes unbounded.  The solver
reports this instead of returning a number.
"""

from pathlib import Path

import numpy as np

from capdispatch.cli import load_problem, sweep_rows
from capdispatch.solver import SolverOptions

CASES = Path(__file__).resolve().parent.parent / "cases"


def table(name, bus, prices):
    problem = load_problem(CASES / name, cap_flags=None)
    print(f"{name}, cap at {bus}")
    print(f"{'m':>6} {'price':>8} {'alpha':>8} {'objective':>10}  status")
    for m, price, alpha, obj, status in sweep_rows(problem, bus, prices, SolverOptions(), jobs=4):
        if status != "Optimal":
            print(f"{m:6.2f} {'':>8} {'':>8} {'':>10}  {status}")
        else:
            print(f"{m:6.2f} {price:8.3f} {abs(alpha):8.3f} {obj:10.3f}  {status}")
    print()


table("widget.json", "bus1", np.linspace(0.5, 7, 14))
table("unbounded_benefit.json", "bus1", np.linspace(4, 10, 7))
