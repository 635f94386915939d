"""Caps on dual variables, realized as cost-``m`` relief variables in the primal.

Capping the dual of row ``i`` at ``m`` adds ``alpha_i >= 0`` with cost
``m * alpha_i`` and relaxes the row by ``alpha_i``:

    (A x)_i - alpha_i <= b_i      or      (G x)_i - alpha_i = h_i

Stationarity in ``alpha_i`` reads ``m - dual_i - lam_alpha_i = 0`` with
``lam_alpha_i >= 0``, hence ``dual_i <= m`` at every optimum.  On a balance
row ``alpha_i`` is virtual supply at price ``m``: the load reduction needed to
bring the local price down to the cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateCap,
    MissingAlphaVariable,
    NegativeCapOnInequalityRow,
    NonFinite,
)
from .model import CanonicalQp, RowMap, RowRef, build_qp
from .solver import Solution, SolverOptions, Status, kkt_summary, polish, solve

BINDING_TOL = 1e-7


def alpha_label(row_label: str) -> str:
    return f"alpha[{row_label}]"


def alpha_sign_label(row_label: str) -> str:
    return f"alpha_nonneg[{row_label}]"


@dataclass(frozen=True)
class CapSpec:
    """Caps as ``(row, m)`` pairs; a row is a RowMap label or a global raw index."""

    entries: tuple[tuple[str | int, float], ...] = ()

    @classmethod
    def of(cls, caps: Mapping[str | int, float] | Iterable[tuple[str | int, float]]) -> "CapSpec":
        items = caps.items() if isinstance(caps, Mapping) else caps
        return cls(tuple((row, float(m)) for row, m in items))

    @classmethod
    def for_buses(cls, rowmap: RowMap, prices: Mapping[str, float]) -> "CapSpec":
        """Caps on bus-balance rows, keyed by bus id."""
        return cls(tuple((rowmap.balance_row(bus).label, float(m)) for bus, m in prices.items()))

    def __len__(self):
        return len(self.entries)

    def resolve(self, rowmap: RowMap) -> list[tuple[RowRef, float]]:
        """Validate against ``rowmap`` and return ``(RowRef, m)`` pairs."""
        out, seen = [], set()
        for row, m in self.entries:
            ref = rowmap.row(row)
            if not math.isfinite(m):
                raise NonFinite(f"cap on {ref.label} is not finite")
            if ref.label in seen:
                raise DuplicateCap(ref.label)
            if ref.kind == "ineq" and m < 0:
                raise NegativeCapOnInequalityRow(ref.label, m)
            seen.add(ref.label)
            out.append((ref, m))
        return out


def apply_caps(qp: CanonicalQp, rowmap: RowMap, caps: CapSpec) -> tuple[CanonicalQp, RowMap]:
    """Return the capped primal and its extended RowMap; inputs are untouched.

    Each cap appends a variable ``alpha[<row>]`` (cost ``m``), a ``-1``
    coefficient in the capped row, and a sign row ``alpha_nonneg[<row>]``
    at the end of the inequality block.
    """
    rowmap.check(qp)
    resolved = caps.resolve(rowmap)
    if not resolved:
        return qp, rowmap
    k = len(resolved)
    n = qp.n
    Q = np.zeros((n + k, n + k))
    Q[:n, :n] = qp.Q
    c = np.concatenate([qp.c, [m for _, m in resolved]])
    A = np.hstack([qp.A, np.zeros((qp.m_ineq, k))])
    G = np.hstack([qp.G, np.zeros((qp.m_eq, k))])
    for j, (ref, _) in enumerate(resolved):
        target = A if ref.kind == "ineq" else G
        target[ref.index, n + j] = -1.0
    sign = np.hstack([np.zeros((k, n)), -np.eye(k)])
    A = np.vstack([A, sign])
    b = np.concatenate([qp.b, np.zeros(k)])
    capped = build_qp(Q, c, A, b, G, qp.h, maximize=qp.maximize)
    new_map = RowMap(
        rowmap.variables + tuple(alpha_label(ref.label) for ref, _ in resolved),
        rowmap.ineq_rows + tuple(alpha_sign_label(ref.label) for ref, _ in resolved),
        rowmap.eq_rows,
        rowmap.balance,
    )
    return capped, new_map


def solve_capped(qp: CanonicalQp, rowmap: RowMap, opts: SolverOptions | None = None) -> Solution:
    """Solve a capped primal, reporting the least total ``alpha`` among optima.

    When a cap sits exactly at the uncapped price the optimum is not unique
    (relief and real supply cost the same).  A second LP minimizes the sum of
    the alpha variables over the optimal face ``{feasible x : Qx = Qx*,
    c'x = c'x*}``.  Duals from the first solve stay valid for the new point.
    """
    sol = solve(qp, opts)
    alphas = [j for j, v in enumerate(rowmap.variables) if v.startswith("alpha[")]
    if not sol.optimal or not alphas or max(sol.x[alphas]) <= BINDING_TOL:
        return sol
    n = qp.n
    weights = np.zeros(n)
    weights[alphas] = 1.0
    slack = 1e-9 * (1.0 + abs(sol.objective))
    Qx = qp.Q @ sol.x
    face_rows = np.vstack([qp.A, qp.c[None, :]])
    face_rhs = np.concatenate([qp.b, [qp.c @ sol.x + slack]])
    keep = np.any(qp.Q != 0, axis=1)
    G = np.vstack([qp.G, qp.Q[keep]])
    h = np.concatenate([qp.h, Qx[keep]])
    second = solve(build_qp(np.zeros((n, n)), weights, face_rows, face_rhs, G, h), opts)
    if not second.optimal or second.objective >= float(weights @ sol.x) - BINDING_TOL:
        return sol
    x, lam, nu = second.x, sol.lam, sol.nu
    if qp.objective(x) > sol.objective + slack:
        return sol
    tight = qp.b - qp.A @ x <= 1e-7 * (1.0 + np.abs(qp.b))
    kkt = kkt_summary(qp, x, lam, nu)
    snapped = polish(qp, tight, kkt, x)
    if snapped is not None:
        x, lam, nu = snapped
        kkt = kkt_summary(qp, x, lam, nu)
    info = dict(sol.info, alpha_minimized=True)
    return Solution(x, lam, nu, sol.status, qp.objective(x), kkt,
                    sol.iterations + second.iterations, info)


@dataclass(frozen=True)
class CapOutcome:
    row: str
    cap: float
    alpha: float
    binding: bool
    achieved_dual: float
    original_dual: float | None = None


@dataclass(frozen=True)
class CapReport:
    outcomes: tuple[CapOutcome, ...]
    objective_delta: float | None = None

    def by_row(self, row: str) -> CapOutcome:
        for out in self.outcomes:
            if out.row == row:
                return out
        raise KeyError(row)


def _dual_of(sol: Solution, ref: RowRef) -> float:
    return float(sol.lam[ref.index] if ref.kind == "ineq" else sol.nu[ref.index])


def interpret(solution: Solution, rowmap: RowMap, caps: CapSpec,
              uncapped: Solution | None = None, uncapped_rowmap: RowMap | None = None) -> CapReport:
    """Read each cap's alpha, its row's dual and the binding flag.

    ``uncapped`` (with its RowMap, defaulting to ``rowmap``) adds the
    original duals and the objective change.
    """
    if solution.status is not Status.OPTIMAL:
        raise ValueError(f"solution status is {solution.status}, expected Optimal")
    outcomes = []
    for ref, m in caps.resolve(rowmap):
        label = alpha_label(ref.label)
        try:
            j = rowmap.var(label)
        except KeyError:
            raise MissingAlphaVariable(label) from None
        if j >= solution.x.shape[0]:
            raise MissingAlphaVariable(label)
        alpha = float(solution.x[j])
        original = None
        if uncapped is not None:
            original = _dual_of(uncapped, (uncapped_rowmap or rowmap).row(ref.label))
        outcomes.append(CapOutcome(ref.label, m, alpha, alpha > BINDING_TOL,
                                   _dual_of(solution, ref), original))
    delta = None
    if uncapped is not None and uncapped.optimal:
        delta = solution.objective - uncapped.objective
    return CapReport(tuple(outcomes), delta)
