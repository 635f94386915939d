import dataclasses
import json

import numpy as np
import pytest

from capdispatch import (
    CapSpec,
    apply_caps,
    build_qp,
    compare_kkt,
    compile_dispatch,
    grid_oracle,
    kkt_residuals,
    load_case,
    sensitivity_check,
    solve,
    solve_capped,
    vertex_oracle,
)
from capdispatch.errors import (
    BudgetExceeded,
    DimensionMismatch,
    InfeasibleLp,
    NoFeasibleGridPoint,
    NotARelaxationPair,
    UnboundedLp,
)
from capdispatch.model import Bus, DispatchCase, Generator, Load, RowMap
from conftest import CASES
from families import random_lp

WIDGET_DIFF = (
    ("stationarity", "alpha[balance[bus1]]", "new", None,
     "3 - lam[alpha_nonneg[balance[bus1]]] - nu[balance[bus1]] = 0"),
    ("complementarity", "balance[bus1]", "changed",
     "nu[balance[bus1]] * (-pg[G1] + pl[L1]) = 0",
     "nu[balance[bus1]] * (-pg[G1] + pl[L1] - alpha[balance[bus1]]) = 0"),
)


def capped(pair, caps):
    qp, rm = pair
    spec = CapSpec.for_buses(rm, caps)
    cq, crm = apply_caps(qp, rm, spec)
    return cq, crm


class TestKktResiduals:
    def test_widget_passes(self, widget):
        qp, rm = widget
        rep = kkt_residuals(qp, solve(qp), rm)
        assert rep.passed and rep.violated == ()
        assert max(rep.residuals.values()) <= 1e-8
        assert "stationarity[pg[G1]]" in rep.residuals
        assert "primal[balance[bus1]]" in rep.residuals

    def test_widget_capped_alpha_row(self, widget):
        cq, crm = capped(widget, {"bus1": 3.0})
        sol = solve_capped(cq, crm)
        rep = kkt_residuals(cq, sol, crm)
        assert rep.passed
        # m - nu - lam_alpha = 0
        j = crm.var("alpha[balance[bus1]]")
        k = crm.row("alpha_nonneg[balance[bus1]]").index
        assert 3.0 - sol.nu[0] - sol.lam[k] == pytest.approx(0.0, abs=1e-9)
        assert rep.residuals["stationarity[alpha[balance[bus1]]]"] <= 1e-9
        assert rep.stationarity_vector[j] == pytest.approx(0.0, abs=1e-9)

    def test_perturbed_point_fails(self, widget):
        qp, rm = widget
        sol = solve(qp)
        rep = kkt_residuals(qp, dataclasses.replace(sol, x=sol.x + 0.1), rm)
        assert not rep.passed
        assert "primal[load_ub[L1]]" in rep.violated

    def test_dimension_mismatch(self, widget):
        qp, rm = widget
        sol = solve(qp)
        with pytest.raises(DimensionMismatch):
            kkt_residuals(qp, dataclasses.replace(sol, x=np.zeros(3)), rm)

    def test_serializable(self, widget):
        qp, rm = widget
        json.dumps(kkt_residuals(qp, solve(qp), rm).to_dict())

    def test_random_family(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            qp = random_lp(rng)
            assert kkt_residuals(qp, solve(qp), tol=1e-6).passed


class TestVertexOracle:
    def test_widget(self, widget):
        sol = vertex_oracle(widget[0])
        assert sol.objective == pytest.approx(-30.0, abs=1e-12)
        np.testing.assert_allclose(sol.x, [10, 10], atol=1e-12)

    def test_two_bus(self, two_bus):
        qp, rm = two_bus
        sol = vertex_oracle(qp)
        lmp = {bus: sol.nu[i] for bus, i in rm.balance}
        assert lmp["bus1"] == pytest.approx(1.0, abs=1e-12)
        assert lmp["bus2"] == pytest.approx(10.0, abs=1e-12)
        flow = qp.A[rm.row("line_limit[L12,+]").index] @ sol.x
        assert flow == pytest.approx(4.0, abs=1e-12)

    def test_unbounded_free(self):
        with pytest.raises(UnboundedLp):
            vertex_oracle(build_qp(np.zeros((1, 1)), [-1.0]))

    def test_unbounded_ray(self):
        qp = build_qp(np.zeros((2, 2)), [-1.0, 0.0], [[0.0, 1.0], [-1.0, 0.0]], [1.0, 0.0])
        with pytest.raises(UnboundedLp):
            vertex_oracle(qp)

    def test_infeasible(self):
        qp = build_qp(np.zeros((1, 1)), [1.0], [[1.0], [-1.0]], [0.0, -1.0])
        with pytest.raises(InfeasibleLp):
            vertex_oracle(qp)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            vertex_oracle(build_qp(np.zeros((13, 13)), np.zeros(13)))

    def test_tie_breaks_to_smallest_basis(self):
        # minimize 0 over the unit square: every vertex is optimal
        qp = build_qp(np.zeros((2, 2)), [0.0, 0.0],
                      [[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 0, 0])
        sol = vertex_oracle(qp)
        assert sol.info["basis"] == (0, 1)
        np.testing.assert_allclose(sol.x, [1, 1])

    def test_zero_cost_free_direction(self):
        # x2 is free and costless: pinned, not unbounded
        qp = build_qp(np.zeros((2, 2)), [1.0, 0.0], [[-1.0, 0.0]], [0.0])
        sol = vertex_oracle(qp)
        assert sol.objective == 0.0


class TestGridOracle:
    def test_one_dimensional(self):
        res = grid_oracle(build_qp([[2.0]], [-4.0], [[1.0]], [1.0]), [-5], [5], 1e-4)
        assert res.objective == pytest.approx(-3.0, abs=1e-3)
        assert res.accuracy <= 1e-3

    def test_identity(self):
        res = grid_oracle(build_qp(np.eye(2), np.zeros(2)), [-1, -1], [1, 1])
        assert abs(res.objective) <= 1e-6
        np.testing.assert_allclose(res.x, 0, atol=1e-3)

    def test_no_feasible_point(self):
        with pytest.raises(NoFeasibleGridPoint):
            grid_oracle(build_qp([[2.0]], [-4.0], [[1.0]], [1.0]), [2], [5])

    def test_dimension_budget(self):
        with pytest.raises(BudgetExceeded):
            grid_oracle(build_qp(np.eye(4), np.zeros(4)), -np.ones(4), np.ones(4))


class TestSensitivity:
    def test_widget_balance(self, widget):
        qp, rm = widget
        rep = sensitivity_check(qp, rm, "balance[bus1]")
        assert rep.accepted and not rep.degenerate
        assert rep.estimate == pytest.approx(5.0, abs=1e-4)

    def test_widget_capped(self, widget):
        cq, crm = capped(widget, {"bus1": 3.0})
        rep = sensitivity_check(cq, crm, "balance[bus1]", base=solve_capped(cq, crm))
        assert rep.accepted
        assert rep.estimate == pytest.approx(3.0, abs=1e-4)

    def test_worthless_load(self):
        # benefit 2 below the cost 5: the load sits at its lower bound
        case = DispatchCase(sense="max", buses=(Bus("bus1"),),
                            generators=(Generator("G1", "bus1", 5.0),),
                            loads=(Load("L1", "bus1", 2.0, 1.0, 10.0),))
        qp, rm = compile_dispatch(case)
        base = solve(qp)
        assert base.x[rm.var("pl[L1]")] == pytest.approx(1.0, abs=1e-8)
        rep = sensitivity_check(qp, rm, "load_lb[L1]", base=base)
        assert rep.accepted
        # raising the rhs of -pl <= -1 lowers the floor, saving a - b = 3 per unit
        assert rep.estimate == pytest.approx(3.0, abs=1e-4)
        assert rep.analytic == pytest.approx(vertex_oracle(qp).lam[rm.row("load_lb[L1]").index])

    def test_degenerate_flagged(self):
        # two copies of x <= 1: the duals split arbitrarily and the slopes differ
        qp = build_qp(np.zeros((1, 1)), [-1.0], [[1.0], [1.0]], [1.0, 1.0])
        rep = sensitivity_check(qp, RowMap.generic(qp), 0)
        assert rep.degenerate and not rep.accepted
        assert rep.eps == 1e-4

    def test_cap_at_price_load_bound(self, widget):
        cq, crm = capped(widget, {"bus1": 5.0})
        rep = sensitivity_check(cq, crm, "load_ub[L1]", base=solve_capped(cq, crm))
        assert rep.accepted
        assert rep.estimate == pytest.approx(3.0, abs=1e-4)

    def test_perturbed_infeasible_reported(self):
        # x <= 1 and x >= 1: moving the first rhs down makes the problem infeasible
        qp = build_qp(np.zeros((1, 1)), [1.0], [[1.0], [-1.0]], [1.0, -1.0])
        rep = sensitivity_check(qp, RowMap.generic(qp), 0)
        assert rep.status == "PerturbedPrimalInfeasible" and not rep.accepted
        json.dumps(rep.to_dict(), allow_nan=True)

    def test_random_nondegenerate_rows(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(60):
            qp = random_lp(rng)
            rm = RowMap.generic(qp)
            base = solve(qp)
            for row in rm.rows:
                rep = sensitivity_check(qp, rm, row, base=base)
                if rep.status != "Optimal" or rep.degenerate:
                    continue
                checked += 1
                assert rep.accepted, rep
        assert checked > 200


class TestCompareKkt:
    def test_widget_golden(self, widget):
        qp, rm = widget
        cq, crm = capped(widget, {"bus1": 3.0})
        diff = compare_kkt(qp, cq, solve(qp), solve_capped(cq, crm), rm, crm)
        assert diff.structural() == WIDGET_DIFF
        assert "alpha[balance[bus1]]" in diff.render()
        json.dumps(diff.to_dict())

    def test_empty_spec(self, widget):
        qp, rm = widget
        cq, crm = apply_caps(qp, rm, CapSpec())
        sol = solve(qp)
        assert len(compare_kkt(qp, cq, sol, sol, rm, crm)) == 0

    def test_two_bus_one_cap(self, two_bus):
        qp, rm = two_bus
        cq, crm = capped(two_bus, {"bus2": 6.0})
        diff = compare_kkt(qp, cq, None, None, rm, crm)
        new = [e for e in diff.entries if e.change == "new"]
        assert [e.key for e in new] == ["alpha[balance[bus2]]"]

    def test_not_a_pair(self, widget, two_bus):
        cq, crm = capped(two_bus, {"bus2": 6.0})
        with pytest.raises(NotARelaxationPair):
            compare_kkt(widget[0], cq, None, None, widget[1], crm)
