"""Certificates and independent oracles.

* :func:`kkt_residuals` - labeled KKT residuals of a primal-dual point.
* :func:`vertex_oracle` - brute-force LP solve by basis enumeration.
* :func:`grid_oracle` - refinement grid search for tiny QPs.
* :func:`sensitivity_check` - finite-difference check that a row's dual is
  the marginal value of its right-hand side.
* :func:`compare_kkt` - condition-by-condition diff of an uncapped and a
  capped problem.

Sign convention: with balance rows written ``load - generation + outflow
= -fixed demand`` the balance multiplier is the consumption price itself.
Writing the same row as ``generation - load`` flips the multiplier, so a
condition such as ``m - nu - lam_alpha = 0`` here corresponds to
``-m + mu - lam_alpha = 0`` with ``mu = -nu`` in that orientation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._format import linear_expr, num
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    InfeasibleLp,
    NoFeasibleGridPoint,
    NotARelaxationPair,
    NotLinear,
    UnboundedLp,
)
from .model import CanonicalQp, RowMap, build_qp
from .pricecap import alpha_sign_label
from .solver import Solution, SolverOptions, Status, kkt_summary, solve

ACTIVE_TOL = 1e-7


# ---------------------------------------------------------------------------
# KKT residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KktReport:
    """Labeled KKT residuals; the four class values are scaled worst cases."""

    stationarity_vector: np.ndarray
    stationarity: float
    primal: float
    dual: float
    complementarity: float
    residuals: dict
    violated: tuple[str, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.stationarity, self.primal, self.dual, self.complementarity) <= self.tol

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "stationarity": self.stationarity,
            "primal": self.primal,
            "dual": self.dual,
            "complementarity": self.complementarity,
            "violated": list(self.violated),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def kkt_residuals(qp: CanonicalQp, solution: Solution, rowmap: RowMap | None = None,
                  tol: float = 1e-8) -> KktReport:
    """Stationarity, feasibility and complementarity of ``solution`` on ``qp``.

    Residual keys are ``stationarity[<var>]``, ``primal[<row>]`` and
    ``complementarity[<row>]``.  A key lands in ``violated`` when its value,
    divided by the scale of its class (see
    :func:`capdispatch.solver.kkt_summary`), exceeds ``tol``.
    """
    rowmap = rowmap or RowMap.generic(qp)
    rowmap.check(qp)
    x, lam, nu = solution.x, solution.lam, solution.nu
    if x.shape != (qp.n,) or lam.shape != (qp.m_ineq,) or nu.shape != (qp.m_eq,):
        raise DimensionMismatch(
            f"solution sizes ({x.shape[0]}, {lam.shape[0]}, {nu.shape[0]}) "
            f"do not match QP ({qp.n}, {qp.m_ineq}, {qp.m_eq})"
        )
    summary = kkt_summary(qp, x, lam, nu)
    Qx, Atl, Gtn = qp.Q @ x, qp.A.T @ lam, qp.G.T @ nu
    rd = Qx + qp.c + Atl + Gtn
    slack = qp.b - qp.A @ x
    eq_res = qp.G @ x - qp.h

    def inf(v):
        return float(np.max(np.abs(v))) if np.size(v) else 0.0

    s_scale = 1.0 + max(inf(Qx), inf(qp.c), inf(Atl), inf(Gtn))
    p_scale = 1.0 + max(inf(qp.b), inf(qp.h), inf(qp.A @ x), inf(qp.G @ x))
    c_scale = 1.0 + abs(qp.objective(x))
    d_scale = 1.0 + inf(lam)

    residuals: dict[str, float] = {}
    violated: list[str] = []

    def put(key, value, scale):
        residuals[key] = float(value)
        if value / scale > tol:
            violated.append(key)

    for label, r in zip(rowmap.variables, rd):
        put(f"stationarity[{label}]", abs(r), s_scale)
    for label, s, l in zip(rowmap.ineq_rows, slack, lam):
        put(f"primal[{label}]", max(0.0, -s), p_scale)
        put(f"dual[{label}]", max(0.0, -l), d_scale)
        put(f"complementarity[{label}]", abs(l * s), c_scale)
    for label, r in zip(rowmap.eq_rows, eq_res):
        put(f"primal[{label}]", abs(r), p_scale)
    return KktReport(rd, summary.stationarity, summary.primal, summary.dual,
                     summary.complementarity, residuals, tuple(violated), tol)


# ---------------------------------------------------------------------------
# vertex enumeration
# ---------------------------------------------------------------------------

def _independent_rows(G: np.ndarray, tol: float = 1e-10) -> list[int]:
    keep: list[int] = []
    for i in range(G.shape[0]):
        trial = G[keep + [i]]
        if np.linalg.matrix_rank(trial, tol=tol * (1.0 + np.max(np.abs(G)))) == len(keep) + 1:
            keep.append(i)
    return keep


def vertex_oracle(lp: CanonicalQp, *, max_vars: int = 12, max_rows: int = 24,
                  chunk: int = 4096) -> Solution:
    """Solve an LP by enumerating every basis.

    A basis is all (independent) equality rows plus ``n - rank(G)``
    inequality rows; nonsingular bases give basic solutions.  The optimum is
    the primal- and dual-feasible basis with the smallest objective; ties go
    to the lexicographically smallest tuple of inequality-row indices.
    ``info`` carries ``basis``, ``degenerate`` and ``bases_checked``.

    Raises
    ------
    NotLinear, BudgetExceeded, InfeasibleLp, UnboundedLp
    """
    if not lp.is_linear:
        raise NotLinear()
    n, mI, mE = lp.n, lp.m_ineq, lp.m_eq
    if n > max_vars or mI + mE > max_rows:
        raise BudgetExceeded(f"vertex enumeration limited to n <= {max_vars}, rows <= {max_rows}; "
                             f"got n={n}, rows={mI + mE}")
    A, b, G, h, c = lp.A, lp.b, lp.G, lp.h, lp.c
    feas_tol = 1e-9 * (1.0 + max(np.max(np.abs(b), initial=0.0), np.max(np.abs(h), initial=0.0)))

    # Directions along which every row is constant have no vertex; pin them.
    M = np.vstack([A, G])
    if n:
        _, sv, vt = np.linalg.svd(M if M.size else np.zeros((1, n)))
        rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 0.0)))
        null = vt[rank:].T
    else:
        null = np.zeros((0, 0))
    if null.shape[1]:
        if np.max(np.abs(null.T @ c)) > 1e-10 * (1.0 + np.max(np.abs(c))):
            # c has a component along a line in the feasible set
            vertex_oracle(build_qp(lp.Q, np.zeros(n), A, b, G, h), max_vars=max_vars, max_rows=max_rows)
            raise UnboundedLp("objective decreases along a line of the feasible set")
        Gx = np.vstack([G, null.T])
        hx = np.concatenate([h, np.zeros(null.shape[1])])
    else:
        Gx, hx = G, h

    eq_keep = _independent_rows(Gx) if Gx.shape[0] else []
    Ge, he = Gx[eq_keep], hx[eq_keep]
    k = n - len(eq_keep)

    best = None  # (objective, subset, x, y)
    candidates = []
    checked = 0
    combos = itertools.combinations(range(mI), k)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        checked += len(block)
        idx = np.array(block, dtype=int).reshape(len(block), k)
        B = np.concatenate([np.broadcast_to(Ge, (len(block),) + Ge.shape), A[idx]], axis=1)
        rhs = np.concatenate([np.broadcast_to(he, (len(block), len(he))), b[idx]], axis=1)
        if n == 0:
            ok = np.ones(len(block), dtype=bool)
        else:
            sv = np.linalg.svd(B, compute_uv=False)
            ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1.0)
        if not np.any(ok):
            continue
        Bk, rk, subsets = B[ok], rhs[ok], [block[i] for i in np.flatnonzero(ok)]
        X = np.linalg.solve(Bk, rk[..., None])[..., 0] if n else np.zeros((len(subsets), 0))
        Y = np.linalg.solve(np.transpose(Bk, (0, 2, 1)), np.broadcast_to(-c, (len(subsets), n))[..., None])[..., 0] \
            if n else np.zeros((len(subsets), 0))
        prim_ok = np.all(X @ A.T <= b + feas_tol, axis=1) & np.all(np.abs(X @ G.T - h) <= feas_tol, axis=1)
        lam_part = Y[:, len(eq_keep):]
        dual_ok = np.all(lam_part >= -1e-9 * (1.0 + np.max(np.abs(c), initial=0.0)), axis=1)
        objs = X @ c
        for i in np.flatnonzero(prim_ok):
            candidates.append(True)
            if dual_ok[i]:
                entry = (float(objs[i]), subsets[i], X[i], Y[i])
                if best is None or entry[0] < best[0] - 1e-9 * (1.0 + abs(best[0])):
                    best = entry
    if not candidates:
        raise InfeasibleLp("no basic feasible solution")
    if best is None:
        raise UnboundedLp("no basic feasible solution satisfies the dual sign conditions")

    obj, subset, x, y = best
    lam = np.zeros(mI)
    lam[list(subset)] = y[len(eq_keep):]
    nu_full = np.zeros(Gx.shape[0])
    nu_full[eq_keep] = y[:len(eq_keep)]
    nu = nu_full[:mE]
    lam = np.maximum(lam, 0.0)
    slack = b - A @ x
    tight = int(np.sum(slack <= ACTIVE_TOL * (1.0 + np.abs(b))))
    degenerate = tight > k or bool(np.any(np.abs(y[len(eq_keep):]) <= 1e-9))
    info = {"basis": tuple(subset), "degenerate": degenerate, "bases_checked": checked}
    return Solution(x, lam, nu, Status.OPTIMAL, lp.objective(x), kkt_summary(lp, x, lam, nu), checked, info)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridResult:
    x: np.ndarray
    objective: float
    accuracy: float
    spacing: float
    stages: int


def grid_oracle(qp: CanonicalQp, lower, upper, resolution: float = 1e-4,
                points: int = 41) -> GridResult:
    """Brute-force minimum over a box by successive grid refinement.

    Each stage evaluates a ``points**n`` grid, keeps the best feasible
    point, and shrinks the box to a window of ``2 * (points - 1) / 10`` cells
    around it (clipped to the original box) until the spacing drops below
    ``resolution``.  The wide window lets the search slide along slanted
    constraint boundaries.
    ``accuracy`` is spacing times a local Lipschitz estimate.

    Raises
    ------
    NoFeasibleGridPoint
        No grid point satisfies ``A x <= b`` at the first stage.
    """
    n = qp.n
    if n > 3:
        raise BudgetExceeded(f"grid oracle limited to n <= 3, got {n}")
    if qp.m_eq:
        raise ValueError("grid oracle does not handle equality rows")
    lo0 = np.asarray(lower, dtype=float).reshape(n)
    hi0 = np.asarray(upper, dtype=float).reshape(n)
    if np.any(hi0 < lo0):
        raise ValueError("upper bound below lower bound")
    lo, hi = lo0.copy(), hi0.copy()
    incumbent = None
    stages = 0
    spacing = np.inf
    while True:
        stages += 1
        axes = [np.linspace(lo[i], hi[i], points) if hi[i] > lo[i] else np.array([lo[i]]) for i in range(n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        if incumbent is not None:
            grid = np.vstack([incumbent[None, :], grid])
        feas = np.all(grid @ qp.A.T <= qp.b + 1e-12 * (1.0 + np.abs(qp.b)), axis=1)
        if not np.any(feas):
            raise NoFeasibleGridPoint(f"no feasible point on the grid over [{lo0}, {hi0}]")
        cand = grid[feas]
        vals = np.sum((0.5 * cand @ qp.Q + qp.c) * cand, axis=1)
        k = int(np.argmin(vals))
        incumbent = cand[k]
        spacing = max(((hi[i] - lo[i]) / (points - 1) for i in range(n)), default=0.0)
        if spacing <= resolution or spacing == 0.0:
            break
        half = max(2, (points - 1) // 10) * spacing
        lo = np.maximum(lo0, incumbent - half)
        hi = np.minimum(hi0, incumbent + half)
    grad = qp.Q @ incumbent + qp.c
    lipschitz = float(np.linalg.norm(grad) + np.linalg.norm(qp.Q, 2) * spacing) if n else 0.0
    return GridResult(incumbent, qp.objective(incumbent), float(spacing * math.sqrt(max(n, 1)) * lipschitz),
                      float(spacing), stages)


# ---------------------------------------------------------------------------
# finite-difference sensitivity
# ---------------------------------------------------------------------------

def price_tolerance(dual: float) -> float:
    return max(1e-4, 1e-3 * abs(dual))


@dataclass(frozen=True)
class SensitivityReport:
    """``estimate`` is minus the central difference of the optimum in the rhs."""

    row: str
    analytic: float
    estimate: float
    abs_error: float
    rel_error: float
    degenerate: bool
    eps: float
    status: str = "Optimal"

    @property
    def accepted(self) -> bool:
        return (self.status == "Optimal" and not self.degenerate
                and self.abs_error <= price_tolerance(self.analytic))

    def to_dict(self) -> dict:
        return {"row": self.row, "analytic": self.analytic, "estimate": self.estimate,
                "abs_error": self.abs_error, "rel_error": self.rel_error,
                "degenerate": self.degenerate, "eps": self.eps, "status": self.status,
                "accepted": self.accepted}


def _active(qp: CanonicalQp, sol: Solution) -> frozenset:
    slack = qp.b - qp.A @ sol.x
    return frozenset(np.flatnonzero(slack <= ACTIVE_TOL * (1.0 + np.abs(qp.b))).tolist())


def sensitivity_check(qp: CanonicalQp, rowmap: RowMap, row, eps: float = 1e-5,
                      opts: SolverOptions | None = None, base: Solution | None = None,
                      retry_eps: float = 1e-4) -> SensitivityReport:
    """Compare a row's dual with the finite-difference marginal value of its rhs.

    The optimum moves by ``-lam_i`` per unit of ``b_i`` and ``-nu_i`` per
    unit of ``h_i``, so ``estimate = -(f(+eps) - f(-eps)) / (2 eps)`` should
    equal the dual.  The report is flagged degenerate when the active set
    differs between the two perturbed solves or the one-sided slopes
    disagree; a flagged check is retried once at ``retry_eps``.  A perturbed
    solve that is not optimal is reported through ``status``.
    """
    ref = rowmap.row(row)
    base = base or solve(qp, opts)
    if not base.optimal:
        return SensitivityReport(ref.label, math.nan, math.nan, math.nan, math.nan, False, eps,
                                 f"Base{base.status}")
    analytic = float(base.lam[ref.index] if ref.kind == "ineq" else base.nu[ref.index])

    def attempt(e):
        qp_plus = qp.with_rhs(ref.kind, ref.index, e)
        qp_minus = qp.with_rhs(ref.kind, ref.index, -e)
        plus, minus = solve(qp_plus, opts), solve(qp_minus, opts)
        for s in (plus, minus):
            if not s.optimal:
                return SensitivityReport(ref.label, analytic, math.nan, math.nan, math.nan, False, e,
                                         f"Perturbed{s.status}")
        est = -(plus.objective - minus.objective) / (2 * e)
        right = -(plus.objective - base.objective) / e
        left = -(base.objective - minus.objective) / e
        degenerate = (_active(qp_plus, plus) != _active(qp_minus, minus)
                      or abs(right - left) > price_tolerance(analytic))
        err = abs(est - analytic)
        return SensitivityReport(ref.label, analytic, est, err, err / max(abs(analytic), 1e-12),
                                 degenerate, e)

    report = attempt(eps)
    if report.degenerate and retry_eps and retry_eps != eps:
        report = attempt(retry_eps)
    return report


# ---------------------------------------------------------------------------
# KKT comparison of an uncapped / capped pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KktChange:
    kind: str           # "stationarity" or "complementarity"
    key: str            # variable or row label
    change: str         # "changed", "new" or "removed"
    before: str | None
    after: str | None
    before_value: float | None = None
    after_value: float | None = None

    def structural(self) -> tuple:
        return (self.kind, self.key, self.change, self.before, self.after)


@dataclass(frozen=True)
class KktDiff:
    entries: tuple[KktChange, ...]
    unchanged: int = 0

    def structural(self) -> tuple:
        return tuple(e.structural() for e in self.entries)

    def __len__(self):
        return len(self.entries)

    def render(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(f"[{e.change}] {e.kind} {e.key}")
            if e.before is not None:
                lines.append(f"    before: {e.before}")
            if e.after is not None:
                lines.append(f"    after:  {e.after}")
        lines.append(f"({self.unchanged} conditions identical)")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"unchanged": self.unchanged,
                "entries": [{"kind": e.kind, "key": e.key, "change": e.change,
                             "before": e.before, "after": e.after,
                             "before_value": e.before_value, "after_value": e.after_value}
                            for e in self.entries]}


def _stationarity_expr(qp: CanonicalQp, rowmap: RowMap, j: int) -> str:
    terms = [(qp.c[j], None)]
    terms += [(qp.Q[j, k], name) for k, name in enumerate(rowmap.variables)]
    terms += [(qp.A[i, j], f"lam[{r}]") for i, r in enumerate(rowmap.ineq_rows)]
    terms += [(qp.G[i, j], f"nu[{r}]") for i, r in enumerate(rowmap.eq_rows)]
    return f"{linear_expr(terms)} = 0"


def _complementarity_expr(qp: CanonicalQp, rowmap: RowMap, kind: str, i: int) -> str:
    M, rhs, labels, mult = ((qp.A, qp.b, rowmap.ineq_rows, "lam") if kind == "ineq"
                            else (qp.G, qp.h, rowmap.eq_rows, "nu"))
    body = linear_expr([(M[i, j], v) for j, v in enumerate(rowmap.variables)] + [(-rhs[i], None)])
    return f"{mult}[{labels[i]}] * ({body}) = 0"


def _stationarity_value(qp: CanonicalQp, sol: Solution | None, j: int) -> float | None:
    if sol is None or not sol.optimal:
        return None
    return float((qp.Q @ sol.x + qp.c + qp.A.T @ sol.lam + qp.G.T @ sol.nu)[j])


def _complementarity_value(qp: CanonicalQp, sol: Solution | None, kind: str, i: int) -> float | None:
    if sol is None or not sol.optimal:
        return None
    if kind == "ineq":
        return float(sol.lam[i] * (qp.A[i] @ sol.x - qp.b[i]))
    return float(sol.nu[i] * (qp.G[i] @ sol.x - qp.h[i]))


def compare_kkt(original_qp: CanonicalQp, capped_qp: CanonicalQp,
                sol_orig: Solution | None, sol_capped: Solution | None,
                original_rowmap: RowMap, capped_rowmap: RowMap) -> KktDiff:
    """Diff the KKT conditions of a problem and its capped version.

    Conditions are stationarity per variable and complementarity per row
    (``mult * (row residual) = 0``; trivially zero for equality rows but
    listed because the row expression is what a cap changes).  The sign rows
    ``alpha_nonneg[*]`` added with each cap are part of that alpha's
    stationarity condition and are not listed separately.

    Raises
    ------
    NotARelaxationPair
        ``capped_rowmap`` does not extend ``original_rowmap`` the way
        :func:`capdispatch.pricecap.apply_caps` does.
    """
    o, cm = original_rowmap, capped_rowmap
    o.check(original_qp)
    cm.check(capped_qp)
    n, mi = len(o.variables), len(o.ineq_rows)
    extra_vars = cm.variables[n:]
    extra_rows = cm.ineq_rows[mi:]
    if (cm.variables[:n] != o.variables or cm.ineq_rows[:mi] != o.ineq_rows
            or cm.eq_rows != o.eq_rows
            or not all(v.startswith("alpha[") for v in extra_vars)
            or not all(r.startswith("alpha_nonneg[") for r in extra_rows)
            or len(extra_vars) != len(extra_rows)):
        raise NotARelaxationPair("capped row map is not an alpha extension of the original")
    if not (np.array_equal(capped_qp.A[:mi, :n], original_qp.A)
            and np.array_equal(capped_qp.G[:, :n], original_qp.G)
            and np.array_equal(capped_qp.Q[:n, :n], original_qp.Q)
            and np.array_equal(capped_qp.c[:n], original_qp.c)
            and np.array_equal(capped_qp.b[:mi], original_qp.b)
            and np.array_equal(capped_qp.h, original_qp.h)):
        raise NotARelaxationPair("shared rows and variables differ between the two problems")
    sign_rows = {alpha_sign_label(v[len("alpha["):-1]) for v in extra_vars}
    if sign_rows != set(extra_rows):
        raise NotARelaxationPair("alpha variables and alpha_nonneg rows do not match")

    entries = []
    unchanged = 0
    for j, var in enumerate(cm.variables):
        after = _stationarity_expr(capped_qp, cm, j)
        after_val = _stationarity_value(capped_qp, sol_capped, j)
        if j < n:
            before = _stationarity_expr(original_qp, o, j)
            if before == after:
                unchanged += 1
                continue
            entries.append(KktChange("stationarity", var, "changed", before, after,
                                     _stationarity_value(original_qp, sol_orig, j), after_val))
        else:
            entries.append(KktChange("stationarity", var, "new", None, after, None, after_val))
    for kind, labels in (("ineq", o.ineq_rows), ("eq", o.eq_rows)):
        for i, label in enumerate(labels):
            before = _complementarity_expr(original_qp, o, kind, i)
            after = _complementarity_expr(capped_qp, cm, kind, i)
            if before == after:
                unchanged += 1
                continue
            entries.append(KktChange("complementarity", label, "changed", before, after,
                                     _complementarity_value(original_qp, sol_orig, kind, i),
                                     _complementarity_value(capped_qp, sol_capped, kind, i)))
    return KktDiff(tuple(entries), unchanged)
