import numpy as np
import pytest

from capdispatch import (
    CapSpec,
    apply_caps,
    build_qp,
    compile_dispatch,
    interpret,
    load_case,
    solve,
    solve_capped,
    vertex_oracle,
)
from capdispatch.errors import (
    DuplicateCap,
    MissingAlphaVariable,
    NegativeCapOnInequalityRow,
    NonFinite,
    UnknownRow,
)
from capdispatch.model import RowMap
from conftest import CASES
from families import random_box_lp


def capped_widget(widget, m):
    qp, rm = widget
    spec = CapSpec.for_buses(rm, {"bus1": m})
    cq, crm = apply_caps(qp, rm, spec)
    return cq, crm, spec


class TestApplyCaps:
    def test_widget_structure(self, widget):
        qp, rm = widget
        cq, crm, _ = capped_widget(widget, 3.0)
        assert crm.variables[-1] == "alpha[balance[bus1]]"
        assert crm.ineq_rows[-1] == "alpha_nonneg[balance[bus1]]"
        np.testing.assert_array_equal(cq.c, [5, -8, 3])
        np.testing.assert_array_equal(cq.G, [[-1, 1, -1]])
        # the input is untouched
        assert qp.n == 2 and rm.variables == ("pg[G1]", "pl[L1]")

    def test_empty_spec_is_identity(self, widget):
        qp, rm = widget
        cq, crm = apply_caps(qp, rm, CapSpec())
        assert cq.same_as(qp) and crm == rm

    def test_two_caps_two_bus(self, two_bus):
        qp, rm = two_bus
        cq, crm = apply_caps(qp, rm, CapSpec.for_buses(rm, {"bus1": 6.0, "bus2": 6.0}))
        assert cq.n == qp.n + 2 and cq.m_ineq == qp.m_ineq + 2
        for bus in ("bus1", "bus2"):
            row = rm.balance_row(bus)
            assert cq.G[row.index, crm.var(f"alpha[{row.label}]")] == -1.0
        sol = solve_capped(cq, crm)
        ref = vertex_oracle(cq)
        assert sol.objective == pytest.approx(ref.objective, abs=1e-7)

    def test_inequality_row_cap(self):
        qp = build_qp(np.zeros((1, 1)), [-1.0], [[1.0]], [1.0])
        rm = RowMap.generic(qp)
        cq, crm = apply_caps(qp, rm, CapSpec.of({0: 0.25}))
        sol = solve(cq)
        # relief at 0.25 is cheaper than the benefit 1 of x, but x is unbounded then
        assert not sol.optimal
        cq, crm = apply_caps(qp, rm, CapSpec.of({0: 2.0}))
        sol = solve(cq)
        assert sol.optimal and sol.lam[0] == pytest.approx(1.0, abs=1e-8)

    def test_unknown_row(self, widget):
        with pytest.raises(UnknownRow):
            apply_caps(*widget, CapSpec.of({"balance[bus9]": 1.0}))

    def test_duplicate(self, widget):
        with pytest.raises(DuplicateCap):
            apply_caps(*widget, CapSpec.of([("balance[bus1]", 1.0), (3, 2.0)]))

    def test_negative_on_inequality(self, widget):
        with pytest.raises(NegativeCapOnInequalityRow):
            apply_caps(*widget, CapSpec.of({"load_ub[L1]": -1.0}))

    def test_negative_on_equality_allowed(self, widget):
        cq, _ = apply_caps(*widget, CapSpec.of({"balance[bus1]": -1.0}))
        assert cq.c[-1] == -1.0

    def test_nonfinite(self, widget):
        with pytest.raises(NonFinite):
            apply_caps(*widget, CapSpec.of({"balance[bus1]": float("inf")}))


class TestInterpret:
    def test_binding(self, widget):
        cq, crm, spec = capped_widget(widget, 3.0)
        out = interpret(solve_capped(cq, crm), crm, spec).by_row("balance[bus1]")
        assert out.alpha == pytest.approx(10.0, abs=1e-7)
        assert out.achieved_dual == pytest.approx(3.0, abs=1e-7)
        assert out.binding

    def test_above_price(self, widget):
        cq, crm, spec = capped_widget(widget, 7.0)
        out = interpret(solve_capped(cq, crm), crm, spec).by_row("balance[bus1]")
        assert out.alpha == pytest.approx(0.0, abs=1e-7)
        assert out.achieved_dual == pytest.approx(5.0, abs=1e-7)
        assert not out.binding

    def test_exactly_at_price(self, widget):
        cq, crm, spec = capped_widget(widget, 5.0)
        sol = solve_capped(cq, crm)
        out = interpret(sol, crm, spec).by_row("balance[bus1]")
        assert abs(out.alpha) <= 1e-7 and not out.binding
        assert out.achieved_dual == pytest.approx(5.0, abs=1e-7)
        assert sol.objective == pytest.approx(-30.0, abs=1e-9)

    def test_with_uncapped(self, widget):
        qp, rm = widget
        cq, crm, spec = capped_widget(widget, 3.0)
        report = interpret(solve_capped(cq, crm), crm, spec, solve(qp), rm)
        assert report.by_row("balance[bus1]").original_dual == pytest.approx(5.0, abs=1e-8)
        assert report.objective_delta == pytest.approx(-20.0, abs=1e-7)

    def test_missing_alpha(self, widget):
        qp, rm = widget
        with pytest.raises(MissingAlphaVariable):
            interpret(solve(qp), rm, CapSpec.for_buses(rm, {"bus1": 3.0}))

    def test_two_bus_cap(self, two_bus):
        qp, rm = two_bus
        spec = CapSpec.for_buses(rm, {"bus2": 6.0})
        cq, crm = apply_caps(qp, rm, spec)
        sol = solve_capped(cq, crm)
        out = interpret(sol, crm, spec).by_row("balance[bus2]")
        assert out.achieved_dual == pytest.approx(6.0, abs=1e-7)
        assert out.alpha == pytest.approx(4.0, abs=1e-7)
        assert sol.x[crm.var("pg[G2]")] == pytest.approx(0.0, abs=1e-7)


def test_monotone_alpha(widget):
    qp, rm = widget
    lmp = solve(qp).nu[0]
    alphas = []
    for k in range(13):
        cq, crm, spec = capped_widget(widget, lmp * k / 10)
        alphas.append(interpret(solve_capped(cq, crm), crm, spec).outcomes[0].alpha)
    assert all(a >= b - 1e-7 for a, b in zip(alphas, alphas[1:]))


def test_monotone_alpha_two_bus(two_bus):
    qp, rm = two_bus
    row = rm.balance_row("bus2")
    lmp = solve(qp).nu[row.index]
    prev = np.inf
    for k in range(13):
        spec = CapSpec.for_buses(rm, {"bus2": lmp * k / 10})
        cq, crm = apply_caps(qp, rm, spec)
        alpha = interpret(solve_capped(cq, crm), crm, spec).outcomes[0].alpha
        assert alpha <= prev + 1e-7
        prev = alpha


def test_unbounded_when_cap_below_benefit():
    qp, rm = compile_dispatch(load_case(CASES / "unbounded_benefit.json"))
    cq, crm = apply_caps(qp, rm, CapSpec.for_buses(rm, {"bus1": 4.0}))
    assert solve_capped(cq, crm).status == "Unbounded"
    cq, crm = apply_caps(qp, rm, CapSpec.for_buses(rm, {"bus1": 9.0}))
    assert solve_capped(cq, crm).optimal


def test_random_relaxation_and_enforcement():
    rng = np.random.default_rng(31)
    for _ in range(150):
        qp, m_general = random_box_lp(rng)
        rm = RowMap.generic(qp)
        base = solve(qp)
        if not base.optimal:
            continue
        row = int(rng.integers(m_general))
        m = float(rng.uniform(0, 1.5 * base.lam[row] + 0.5))
        spec = CapSpec.of({row: m})
        cq, crm = apply_caps(qp, rm, spec)
        sol = solve_capped(cq, crm)
        assert sol.optimal
        assert sol.objective <= base.objective + 1e-9
        out = interpret(sol, crm, spec).outcomes[0]
        assert out.achieved_dual <= m + 1e-6
        if out.binding:
            assert abs(out.achieved_dual - m) <= 1e-6
