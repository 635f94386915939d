"""Acceptance gate: nine criteria at their stated tolerances.

Each test records a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them after the run, and running this file directly prints them as well.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from capdispatch import (
    CapSpec,
    RowMap,
    apply_caps,
    build_dual_qp,
    compare_kkt,
    interpret,
    kkt_residuals,
    recover_primal,
    sensitivity_check,
    solve,
    solve_capped,
    solve_dual_qp,
    vertex_oracle,
)
from conftest import GOLDEN, ROOT
from families import random_box_lp, random_box_qp, random_lp, random_strict_qp
from test_cli import GOLDEN_RUNS
from test_verify import WIDGET_DIFF, capped

RESULTS: dict[int, tuple[bool, str]] = {}


def record(key: int, ok: bool, detail: str) -> None:
    RESULTS[key] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def strict_family():
    rng = np.random.default_rng(1001)
    return [random_strict_qp(rng) for _ in range(200)]


def test_1_strong_duality(strict_family):
    start = time.perf_counter()
    worst = 0.0
    for qp in strict_family:
        primal = solve(qp)
        dq = build_dual_qp(qp)
        dual = solve_dual_qp(dq)
        assert primal.optimal and dual.optimal
        gap = abs(primal.objective - dq.bound(dual.objective)) / (1 + abs(primal.objective))
        worst = max(worst, gap)
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-6 and elapsed < 10.0,
           f"200 QPs, worst scaled gap {worst:.2e} (<= 1e-6), {elapsed:.2f}s (< 10s)")


def test_2_primal_recovery(strict_family):
    worst = 0.0
    for qp in strict_family:
        primal = solve(qp)
        dual = solve_dual_qp(build_dual_qp(qp))
        worst = max(worst, float(np.max(np.abs(recover_primal(qp, dual.x) - primal.x))))
    record(2, worst <= 1e-6, f"200 QPs, worst |x(lam*) - x*| {worst:.2e} (<= 1e-6)")


def test_3_widget(widget):
    qp, rm = widget
    bal = rm.row("balance[bus1]").index
    sol, ref = solve(qp), vertex_oracle(qp)
    cq, crm = capped(widget, {"bus1": 3.0})
    csol, cref = solve_capped(cq, crm), vertex_oracle(cq)
    alpha = crm.var("alpha[balance[bus1]]")
    pg = crm.var("pg[G1]")
    checks = {
        "uncapped LMP 5": abs(sol.nu[bal] - 5) <= 1e-7 and abs(ref.nu[bal] - 5) <= 1e-7,
        "welfare 30": abs(qp.display_objective(sol.objective) - 30) <= 1e-7
        and abs(qp.display_objective(ref.objective) - 30) <= 1e-7,
        "capped LMP 3": abs(csol.nu[bal] - 3) <= 1e-7 and abs(cref.nu[bal] - 3) <= 1e-7,
        "alpha 10": abs(csol.x[alpha] - 10) <= 1e-7 and abs(cref.x[alpha] - 10) <= 1e-7,
        "P_G 0": abs(csol.x[pg]) <= 1e-7 and abs(cref.x[pg]) <= 1e-7,
        "solver = oracle": np.allclose(sol.x, ref.x, atol=1e-7, rtol=0)
        and np.allclose(csol.x, cref.x, atol=1e-7, rtol=0),
        "KKT pass": kkt_residuals(qp, sol, rm, tol=1e-7).passed
        and kkt_residuals(cq, csol, crm, tol=1e-7).passed
        and kkt_residuals(qp, ref, rm, tol=1e-7).passed
        and kkt_residuals(cq, cref, crm, tol=1e-7).passed,
    }
    failed = [k for k, ok in checks.items() if not ok]
    record(3, not failed, "widget " + ("; ".join(checks) if not failed else "failed: " + ", ".join(failed)))


def test_4_cap_semantics():
    rng = np.random.default_rng(1004)
    counts = dict(a=0, b=0, c=0, d=0, binding=0, inactive=0)
    failures = []
    for k in range(300):
        qp, m_general = (random_box_lp if k % 2 == 0 else random_box_qp)(rng)
        rm = RowMap.generic(qp)
        base = solve(qp)
        if qp.m_eq and rng.random() < 0.3:
            ref = rm.row(qp.m_ineq + int(rng.integers(qp.m_eq)))
            dual0 = base.nu[ref.index]
        else:
            # mostly the row with the largest dual, so that many caps bind
            pick = int(np.argmax(base.lam[:m_general])) if rng.random() < 0.7 else int(rng.integers(m_general))
            ref = rm.row(pick)
            dual0 = base.lam[ref.index]
        m = float(rng.uniform(0, 2 * abs(dual0) + 0.5))
        spec = CapSpec.of({ref.label: m})
        cq, crm = apply_caps(qp, rm, spec)
        sol = solve_capped(cq, crm)
        out = interpret(sol, crm, spec).outcomes[0]
        if not sol.objective <= base.objective + 1e-9:
            failures.append((k, "a"))
        if not out.achieved_dual <= m + 1e-6:
            failures.append((k, "b"))
        if out.alpha > 1e-7:
            counts["binding"] += 1
            if abs(out.achieved_dual - m) > 1e-6:
                failures.append((k, "c"))
        if m >= dual0 + 1e-6:
            counts["inactive"] += 1
            if np.max(np.abs(sol.x[:qp.n] - base.x)) > 1e-6 or out.alpha > 1e-6:
                failures.append((k, "d"))
    record(4, not failures,
           f"300 instances ({counts['binding']} binding, {counts['inactive']} inactive caps), "
           f"violations {failures[:5]}")


def test_5_kkt_diff(widget):
    qp, rm = widget
    cq, crm = capped(widget, {"bus1": 3.0})
    diff = compare_kkt(qp, cq, solve(qp), solve_capped(cq, crm), rm, crm)
    ok = diff.structural() == WIDGET_DIFF
    record(5, ok, f"widget diff has {len(diff)} entries; golden match {ok}")


def test_6_marginal_prices():
    rng = np.random.default_rng(1006)
    checked = flagged = 0
    bad = []
    for _ in range(200):
        qp = random_lp(rng)
        rm = RowMap.generic(qp)
        base = solve(qp)
        for row in rm.rows:
            rep = sensitivity_check(qp, rm, row, base=base)
            if rep.status != "Optimal" or rep.degenerate:
                flagged += 1
                continue
            checked += 1
            if not rep.accepted:
                bad.append(rep)
    caps_checked = 0
    for k in range(100):
        qp, m_general = random_box_lp(rng)
        rm = RowMap.generic(qp)
        base = solve(qp)
        row = int(np.argmax(base.lam[:m_general]))
        if base.lam[row] <= 1e-3:
            continue
        m = float(rng.uniform(0, base.lam[row]))
        spec = CapSpec.of({row: m})
        cq, crm = apply_caps(qp, rm, spec)
        sol = solve_capped(cq, crm)
        if not interpret(sol, crm, spec).outcomes[0].binding:
            continue
        rep = sensitivity_check(cq, crm, row, base=sol)
        if rep.status != "Optimal" or rep.degenerate:
            flagged += 1
            continue
        caps_checked += 1
        if abs(rep.estimate - m) > max(1e-4, 1e-3 * abs(m)):
            bad.append(rep)
    record(6, not bad and checked > 0 and caps_checked > 0,
           f"{checked} nondegenerate rows and {caps_checked} binding caps matched, "
           f"{flagged} flagged degenerate, {len(bad)} mismatches")


def test_7_oracle_equivalence():
    rng = np.random.default_rng(1007)
    start = time.perf_counter()
    worst_obj = worst_dual = 0.0
    compared = 0
    for _ in range(500):
        qp = random_lp(rng, n_max=5)
        sol, ref = solve(qp), vertex_oracle(qp)
        worst_obj = max(worst_obj, abs(sol.objective - ref.objective))
        if not ref.info["degenerate"]:
            compared += 1
            worst_dual = max(worst_dual, float(np.max(np.abs(sol.lam - ref.lam), initial=0.0)),
                             float(np.max(np.abs(sol.nu - ref.nu), initial=0.0)))
    elapsed = time.perf_counter() - start
    record(7, worst_obj <= 1e-7 and worst_dual <= 1e-6 and elapsed < 30.0,
           f"500 LPs, worst objective diff {worst_obj:.2e} (<= 1e-7), worst dual diff "
           f"{worst_dual:.2e} on {compared} nondegenerate (<= 1e-6), {elapsed:.2f}s (< 30s)")


def test_8_two_bus(two_bus):
    qp, rm = two_bus
    b1, b2 = rm.balance_row("bus1").index, rm.balance_row("bus2").index
    sol, ref = solve(qp), vertex_oracle(qp)
    flow_row = rm.row("line_limit[L12,+]").index
    cq, crm = capped(two_bus, {"bus2": 6.0})
    csol, cref = solve_capped(cq, crm), vertex_oracle(cq)
    checks = {
        "LMPs (1, 10)": all(abs(s.nu[b1] - 1) <= 1e-7 and abs(s.nu[b2] - 10) <= 1e-7 for s in (sol, ref)),
        "line at 4": all(abs(qp.A[flow_row] @ s.x - 4) <= 1e-7 for s in (sol, ref)),
        "capped LMP2 6": all(abs(s.nu[b2] - 6) <= 1e-7 for s in (csol, cref)),
        "alpha2 4": all(abs(s.x[crm.var("alpha[balance[bus2]]")] - 4) <= 1e-7 for s in (csol, cref)),
        "G2 off": all(abs(s.x[crm.var("pg[G2]")]) <= 1e-7 for s in (csol, cref)),
    }
    failed = [k for k, ok in checks.items() if not ok]
    record(8, not failed, "2-bus " + ("; ".join(checks) if not failed else "failed: " + ", ".join(failed)))


def test_9_determinism():
    mismatched = []
    for name, argv in sorted(GOLDEN_RUNS.items()):
        golden = (GOLDEN / name).read_bytes()
        for _ in range(3):
            res = subprocess.run([sys.executable, "-m", "capdispatch", *argv], cwd=ROOT,
                                 capture_output=True)
            if res.stdout != golden:
                mismatched.append(name)
    record(9, not mismatched,
           f"{len(GOLDEN_RUNS)} golden outputs x 3 runs byte-identical; mismatches {mismatched}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
