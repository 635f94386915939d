"""Explicit duals: the closed-form QP dual and the mechanical LP dual.

For a strictly convex ``minimize 1/2 x'Qx + c'x  s.t.  Ax <= b`` the inner
infimum of the Lagrangian is attained at ``x = -Q^{-1}(c + A'lam)``, which
gives the dual function

    g(lam) = -1/2 lam'P lam - t'lam - 1/2 c'Q^{-1}c,
    P = A Q^{-1} A',   t = b + A Q^{-1} c,

and the dual problem ``minimize 1/2 lam'P lam + t'lam  s.t.  lam >= 0``.
Every ``Q^{-1}`` product goes through one Cholesky factor of ``Q``.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from ._format import linear_expr
from .errors import InfeasiblePoint, NegativeMultiplier, NotLinear, NotStrictlyConvex
from .model import CanonicalQp, RowMap, build_qp

STRICT_TOL = 1e-10
FEASIBILITY_TOL = 1e-8

_factors: "weakref.WeakKeyDictionary[CanonicalQp, tuple]" = weakref.WeakKeyDictionary()


def _factor(qp: CanonicalQp):
    """Cached ``(cho_factor, min eigenvalue estimate)`` for ``qp.Q``."""
    hit = _factors.get(qp)
    if hit is not None:
        return hit
    n = qp.n
    if n == 0:
        result = ((np.zeros((0, 0)), True), np.inf)
    else:
        try:
            cf = cho_factor(qp.Q, lower=True)
        except np.linalg.LinAlgError:
            raise NotStrictlyConvex(float(np.linalg.eigvalsh(qp.Q)[0]), STRICT_TOL) from None
        L = np.tril(cf[0])
        # lambda_min(Q) = sigma_min(L)^2
        min_eig = float(np.linalg.svd(L, compute_uv=False)[-1] ** 2)
        result = (cf, min_eig)
    if result[1] < STRICT_TOL:
        raise NotStrictlyConvex(result[1], STRICT_TOL)
    _factors[qp] = result
    return result


def _fold_equalities(qp: CanonicalQp) -> tuple[np.ndarray, np.ndarray, bool]:
    if not qp.m_eq:
        return qp.A, qp.b, False
    A = np.vstack([qp.A, qp.G, -qp.G])
    b = np.concatenate([qp.b, qp.h, -qp.h])
    return A, b, True


@dataclass(frozen=True, eq=False)
class DualQp:
    """``minimize 1/2 lam'P lam + t'lam  s.t.  lam >= 0`` plus the constant.

    When the source had equality rows they were folded into ``+/-``
    inequality pairs (``folded`` is True): multipliers are ordered as
    ``[inequality rows, +G rows, -G rows]``.
    """

    P: np.ndarray
    t: np.ndarray
    constant: float
    source_id: str
    folded: bool = False
    m_ineq: int = 0
    m_eq: int = 0

    def value(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        return float(0.5 * lam @ self.P @ lam + self.t @ lam)

    def bound(self, dual_objective: float) -> float:
        """Lower bound on the primal optimum from a dual QP objective value."""
        return -dual_objective - self.constant

    def split(self, lam) -> tuple[np.ndarray, np.ndarray]:
        """Multipliers as ``(lam for A rows, nu for G rows)``."""
        lam = np.asarray(lam, dtype=float)
        mi, me = self.m_ineq, self.m_eq
        if not self.folded:
            return lam[:mi], np.zeros(0)
        return lam[:mi], lam[mi:mi + me] - lam[mi + me:]


def build_dual_qp(qp: CanonicalQp) -> DualQp:
    """Explicit dual of a strictly convex QP.

    Raises
    ------
    NotStrictlyConvex
        Smallest eigenvalue of ``Q`` below 1e-10.
    """
    (cf, _) = _factor(qp)
    A, b, folded = _fold_equalities(qp)
    if qp.n == 0:
        m = A.shape[0]
        return DualQp(np.zeros((m, m)), b.copy(), 0.0, qp.fingerprint(), folded, qp.m_ineq, qp.m_eq)
    L = np.tril(cf[0])
    B = solve_triangular(L, A.T, lower=True)      # L^{-1} A'
    w = solve_triangular(L, qp.c, lower=True)     # L^{-1} c
    P = B.T @ B
    P = 0.5 * (P + P.T)
    t = b + B.T @ w
    constant = 0.5 * float(w @ w)
    return DualQp(P, t, constant, qp.fingerprint(), folded, qp.m_ineq, qp.m_eq)


def dual_function_value(dq: DualQp, lam) -> float:
    """g(lam) = -1/2 lam'P lam - t'lam - constant, for lam >= 0."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    neg = np.flatnonzero(lam < -1e-12)
    if neg.size:
        raise NegativeMultiplier(int(neg[0]), float(lam[neg[0]]))
    return -dq.value(lam) - dq.constant


def recover_primal(qp: CanonicalQp, lam) -> np.ndarray:
    """Minimizer of the Lagrangian, ``x = -Q^{-1}(c + A'lam)``.

    ``lam`` is indexed like :func:`build_dual_qp` multipliers, so it covers
    folded equality pairs when the QP has equality rows.
    """
    (cf, _) = _factor(qp)
    A, _, _ = _fold_equalities(qp)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if qp.n == 0:
        return np.zeros(0)
    return -cho_solve(cf, qp.c + A.T @ lam)


# ---------------------------------------------------------------------------
# LP dual
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LpDual:
    """Dual LP of ``minimize c'x  s.t.  Ax <= b, Gx = h`` (x free).

    The dual ``maximize -b'lam - h'nu  s.t.  A'lam + G'nu = -c, lam >= 0``
    is stored negated as a minimize CanonicalQp over ``[lam, nu]`` with
    ``maximize=True``: one sign row ``-lam_i <= 0`` per source inequality row
    and one equality row per source variable.  The dual optimum (a bound on
    the source minimum) is ``-`` the stored minimum.
    """

    qp: CanonicalQp
    rowmap: RowMap
    m_ineq: int
    m_eq: int

    def bound(self, stored_objective: float) -> float:
        return -stored_objective

    def split(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        return y[:self.m_ineq], y[self.m_ineq:]


def lp_dual(qp: CanonicalQp, rowmap: RowMap | None = None) -> LpDual:
    """Mechanical dual of an LP under the internal sign convention.

    Raises
    ------
    NotLinear
        ``Q`` has a nonzero entry.
    """
    if not qp.is_linear:
        raise NotLinear()
    rowmap = rowmap or RowMap.generic(qp)
    rowmap.check(qp)
    mi, me = qp.m_ineq, qp.m_eq
    m = mi + me
    cost = np.concatenate([qp.b, qp.h])
    sign_rows = np.hstack([-np.eye(mi), np.zeros((mi, me))])
    stat_rows = np.hstack([qp.A.T, qp.G.T])
    dual = build_qp(np.zeros((m, m)), cost, sign_rows, np.zeros(mi), stat_rows, -qp.c,
                    maximize=True)
    labels = RowMap(
        tuple(f"lam[{r}]" for r in rowmap.ineq_rows) + tuple(f"nu[{r}]" for r in rowmap.eq_rows),
        tuple(f"sign[{r}]" for r in rowmap.ineq_rows),
        tuple(f"stat[{v}]" for v in rowmap.variables),
    )
    return LpDual(dual, labels, mi, me)


def describe_lp_dual(ld: LpDual) -> list[str]:
    """Human-readable rows of the dual LP in its maximize form."""
    names = ld.rowmap.variables
    qp = ld.qp

    def expr(coeffs) -> str:
        return linear_expr(zip(coeffs, names))

    lines = [f"maximize   {expr(-qp.c)}"]
    for label, row, rhs in zip(ld.rowmap.eq_rows, qp.G, qp.h):
        lines.append(f"  {label}: {expr(row)} = {rhs:g}")
    for name in names[:ld.m_ineq]:
        lines.append(f"  {name} >= 0")
    return lines


# ---------------------------------------------------------------------------
# duality gap
# ---------------------------------------------------------------------------

def lagrangian_bound(qp: CanonicalQp, lam, nu=None) -> float:
    """inf_x of the Lagrangian at ``(lam, nu)``; ``-inf`` when unbounded below."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    nu = np.zeros(qp.m_eq) if nu is None else np.asarray(nu, dtype=float).reshape(-1)
    r = qp.c + qp.A.T @ lam + qp.G.T @ nu
    const = -float(qp.b @ lam) - float(qp.h @ nu)
    if qp.n == 0:
        return const
    z, *_ = np.linalg.lstsq(qp.Q, -r, rcond=None)
    resid = qp.Q @ z + r
    if np.max(np.abs(resid)) > 1e-8 * (1.0 + np.max(np.abs(qp.c))):
        return -np.inf
    return float(0.5 * z @ qp.Q @ z + r @ z) + const


def duality_gap(qp: CanonicalQp, x, lam, nu=None, rowmap: RowMap | None = None) -> float:
    """Primal objective at ``x`` minus the Lagrangian dual bound at ``(lam, nu)``.

    ``lam`` may also be a folded multiplier vector from :func:`build_dual_qp`
    (length ``m_ineq + 2*m_eq``); it is split into ``(lam, nu)`` first.

    Raises
    ------
    InfeasiblePoint
        ``x`` violates a row by more than 1e-8.
    NegativeMultiplier
        An inequality multiplier is below -1e-12.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if nu is None and qp.m_eq and lam.shape[0] == qp.m_ineq + 2 * qp.m_eq:
        mi, me = qp.m_ineq, qp.m_eq
        neg = np.flatnonzero(lam < -1e-12)
        if neg.size:
            raise NegativeMultiplier(int(neg[0]), float(lam[neg[0]]))
        lam, nu = lam[:mi], lam[mi:mi + me] - lam[mi + me:]
    rowmap = rowmap or RowMap.generic(qp)
    viol = np.concatenate([qp.A @ x - qp.b, np.abs(qp.G @ x - qp.h)])
    if viol.size and np.max(viol) > FEASIBILITY_TOL:
        k = int(np.argmax(viol))
        raise InfeasiblePoint(rowmap.rows[k], float(viol[k]))
    neg = np.flatnonzero(lam < -1e-12)
    if neg.size:
        raise NegativeMultiplier(int(neg[0]), float(lam[neg[0]]))
    return qp.objective(x) - lagrangian_bound(qp, lam, nu)
