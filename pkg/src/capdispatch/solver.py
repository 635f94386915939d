"""Primal-dual interior-point solver for convex QPs/LPs in canonical form.

Mehrotra predictor-corrector on the KKT system

    Q x + c + A'lam + G'nu = 0
    A x + s = b,   G x = h
    s * lam = 0,   s, lam >= 0

The Newton system is reduced to ``[[Q + A'WA, G'], [G, 0]]`` with
``W = lam / s`` and factored once per iteration by a symmetric indefinite
(Bunch-Kaufman) factorization; predictor and corrector reuse the factor.
A converged iterate is polished by solving the equality-constrained KKT
system on the identified active set, kept only when it certifies at least
as well as the interior point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import lapack, lstsq

from .model import CanonicalQp, build_qp

log = logging.getLogger(__name__)

_REG = 1e-10
_CERT_TOL = 1e-6


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 200
    unbounded_threshold: float = 1e10
    verbose: bool = False
    polish: bool = True

    def __post_init__(self):
        if not 0 < self.tol <= 1e-2:
            raise ValueError(f"tol must lie in (0, 1e-2], got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class KktSummary:
    """Scaled worst-case KKT residuals (see :func:`kkt_summary`)."""

    stationarity: float
    primal: float
    dual: float
    complementarity: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.primal, self.dual, self.complementarity)

    def as_dict(self) -> dict:
        return {"stationarity": self.stationarity, "primal": self.primal,
                "dual": self.dual, "complementarity": self.complementarity}


@dataclass(frozen=True, eq=False)
class Solution:
    x: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    status: Status
    objective: float
    kkt: KktSummary | None
    iterations: int
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _inf(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def kkt_summary(qp: CanonicalQp, x, lam, nu) -> KktSummary:
    """Scaled KKT residuals of a primal-dual point.

    stationarity     ||Qx + c + A'lam + G'nu|| / (1 + max(||Qx||, ||c||, ||A'lam||, ||G'nu||))
    primal           worst row violation / (1 + max(||b||, ||h||, ||Ax||, ||Gx||))
    dual             worst negative lam / (1 + ||lam||)
    complementarity  max |lam_i (b - Ax)_i| / (1 + |objective|)

    All norms are infinity norms.
    """
    Qx = qp.Q @ x
    Atl = qp.A.T @ lam
    Gtn = qp.G.T @ nu
    rd = Qx + qp.c + Atl + Gtn
    Ax, Gx = qp.A @ x, qp.G @ x
    slack = qp.b - Ax
    viol = max(float(np.max(-slack, initial=0.0)), _inf(Gx - qp.h))
    obj = qp.objective(x)
    return KktSummary(
        stationarity=_inf(rd) / (1.0 + max(_inf(Qx), _inf(qp.c), _inf(Atl), _inf(Gtn))),
        primal=viol / (1.0 + max(_inf(qp.b), _inf(qp.h), _inf(Ax), _inf(Gx))),
        dual=max(0.0, float(np.max(-lam, initial=0.0))) / (1.0 + _inf(lam)),
        complementarity=_inf(lam * slack) / (1.0 + abs(obj)),
    )


class _ReducedKkt:
    """Factor of ``[[H, G'], [G, 0]]`` with static regularization and refinement."""

    def __init__(self, H: np.ndarray, G: np.ndarray):
        n, me = H.shape[0], G.shape[0]
        K = np.zeros((n + me, n + me))
        K[:n, :n] = H
        K[n:, :n] = G
        K[:n, n:] = G.T
        self.K = K
        Kr = K.copy()
        Kr[np.arange(n), np.arange(n)] += _REG
        Kr[np.arange(n, n + me), np.arange(n, n + me)] -= _REG
        self.ldu, self.ipiv, info = lapack.dsytrf(Kr, lower=1)
        if info < 0:
            raise np.linalg.LinAlgError(f"dsytrf failed (info={info})")
        self.n = n

    def _raw(self, rhs):
        z, info = lapack.dsytrs(self.ldu, self.ipiv, rhs[:, None], lower=1)
        if info != 0:
            raise np.linalg.LinAlgError(f"dsytrs failed (info={info})")
        return z[:, 0]

    def solve(self, rx, re):
        rhs = np.concatenate([rx, re])
        z = self._raw(rhs)
        res = rhs - self.K @ z
        err = _inf(res)
        for _ in range(3):
            if not np.isfinite(err) or err <= 1e-14 * (1.0 + _inf(rhs)):
                break
            z_new = z + self._raw(res)
            res_new = rhs - self.K @ z_new
            err_new = _inf(res_new)
            if not err_new < err:
                break
            z, res, err = z_new, res_new, err_new
        return z[:self.n], z[self.n:]


def _max_step(v, dv) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _unbounded_ray(qp: CanonicalQp, x) -> bool:
    scale = _inf(x)
    if not scale > 0:
        return False
    d = x / scale
    tol = _CERT_TOL
    return (
        _inf(qp.Q @ d) <= tol * (1.0 + _inf(qp.Q))
        and float(np.max(qp.A @ d, initial=0.0)) <= tol * (1.0 + _inf(qp.A))
        and _inf(qp.G @ d) <= tol * (1.0 + _inf(qp.G))
        and float(qp.c @ d) < -tol
    )


def _farkas(qp: CanonicalQp, lam, nu) -> bool:
    scale = max(_inf(lam), _inf(nu))
    if not scale > 0:
        return False
    ln, nn = lam / scale, nu / scale
    resid = qp.A.T @ ln + qp.G.T @ nn
    return (
        _inf(resid) <= _CERT_TOL * (1.0 + _inf(qp.A) + _inf(qp.G))
        and float(qp.b @ ln + qp.h @ nn) < -_CERT_TOL * (1.0 + _inf(qp.b) + _inf(qp.h))
    )


def _initial_point(qp: CanonicalQp):
    Q, c, A, b, G, h = qp.Q, qp.c, qp.A, qp.b, qp.G, qp.h
    kkt = _ReducedKkt(Q + A.T @ A, G)
    x, nu = kkt.solve(-c + A.T @ b, h)
    s = b - A @ x
    scale = max(1.0, _inf(c), _inf(b)) if qp.m_ineq else 1.0
    s = np.maximum(s, 0.0) + np.where(s < 1.0, 1.0, 0.0)
    lam = np.full(qp.m_ineq, max(1.0, np.sqrt(scale)))
    return x, s, lam, nu


def _finish(qp, x, lam, nu, status, iterations, info) -> Solution:
    kkt = kkt_summary(qp, x, lam, nu) if status is Status.OPTIMAL else None
    return Solution(x, lam, nu, status, qp.objective(x) if status is Status.OPTIMAL else float("nan"),
                    kkt, iterations, info)


def polish(qp: CanonicalQp, active, current: KktSummary | None = None, x0=None):
    """Solve the equality-constrained KKT system with ``active`` rows held tight.

    When ``x0`` is given the system is solved for a minimum-norm correction
    to it, so on a non-unique optimal face the result is the nearest point.
    Returns ``(x, lam, nu)`` when the result is sign-feasible and certifies
    no worse than ``current``; otherwise None.
    """
    n, mE = qp.n, qp.m_eq
    active = np.asarray(active, dtype=bool)
    Aa = qp.A[active]
    ma = Aa.shape[0]
    size = n + ma + mE
    K = np.zeros((size, size))
    K[:n, :n] = qp.Q
    K[:n, n:n + ma] = Aa.T
    K[:n, n + ma:] = qp.G.T
    K[n:n + ma, :n] = Aa
    K[n + ma:, :n] = qp.G
    base = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    rhs = np.concatenate([-qp.c - qp.Q @ base, qp.b[active] - Aa @ base, qp.h - qp.G @ base])
    try:
        z = lstsq(K, rhs, lapack_driver="gelsd")[0]
    except (np.linalg.LinAlgError, ValueError):
        return None
    xp = base + z[:n]
    lam_p = np.zeros(qp.m_ineq)
    lam_p[active] = z[n:n + ma]
    nu_p = z[n + ma:]
    if not np.all(np.isfinite(z)):
        return None
    if np.any(lam_p < -1e-9 * (1.0 + _inf(lam_p))):
        return None
    lam_p = np.maximum(lam_p, 0.0)
    cand = kkt_summary(qp, xp, lam_p, nu_p)
    if current is None or cand.worst <= current.worst:
        return xp, lam_p, nu_p
    return None


def solve(qp: CanonicalQp, opts: SolverOptions | None = None) -> Solution:
    """Solve ``qp`` and return primal and dual variables.

    Never raises on hard problems: infeasibility, unboundedness and
    stagnation come back as the Solution status.  Identical inputs and
    options give bitwise-identical outputs.
    """
    opts = opts or SolverOptions()
    Q, c, A, b, G, h = qp.Q, qp.c, qp.A, qp.b, qp.G, qp.h
    n, mI, mE = qp.n, qp.m_ineq, qp.m_eq

    if n == 0:
        ok = np.all(b >= -opts.tol) and np.all(np.abs(h) <= opts.tol)
        status = Status.OPTIMAL if ok else Status.PRIMAL_INFEASIBLE
        return _finish(qp, np.zeros(0), np.zeros(mI), np.zeros(mE), status, 0, {})

    x, s, lam, nu = _initial_point(qp)
    bscale = 1.0 + max(_inf(b), _inf(h))
    cscale = 1.0 + _inf(c)
    eta = 0.995
    status = Status.ITERATION_LIMIT
    info: dict = {}
    it = 0
    for it in range(opts.max_iter + 1):
        rd = Q @ x + c + A.T @ lam + G.T @ nu
        rp = A @ x + s - b
        re = G @ x - h
        obj = qp.objective(x)
        gap = float(s @ lam)
        pres = max(_inf(rp), _inf(re)) / bscale
        dres = _inf(rd) / cscale
        comp = gap / (1.0 + abs(obj))
        if opts.verbose:
            log.info("it %3d  obj % .10e  pres %.2e  dres %.2e  gap %.2e", it, obj, pres, dres, comp)
        if pres <= opts.tol and dres <= opts.tol and comp <= opts.tol:
            status = Status.OPTIMAL
            break
        if _inf(x) > opts.unbounded_threshold and _unbounded_ray(qp, x):
            status = Status.UNBOUNDED
            break
        if max(_inf(lam), _inf(nu)) > opts.unbounded_threshold and _farkas(qp, lam, nu):
            status = Status.PRIMAL_INFEASIBLE
            break
        if it == opts.max_iter:
            break

        try:
            if mI:
                W = lam / s
                H = Q + A.T @ (W[:, None] * A)
            else:
                H = Q
            kkt = _ReducedKkt(H, G)

            def direction(rc):
                rx = -rd - A.T @ ((lam * rp - rc) / s) if mI else -rd
                dx, dnu = kkt.solve(rx, -re)
                ds = -rp - A @ dx
                dlam = (-rc - lam * ds) / s if mI else ds
                return dx, ds, dlam, dnu

            if mI:
                mu = gap / mI
                dx, ds, dlam, dnu = direction(s * lam)
                a_aff = min(1.0, _max_step(s, ds), _max_step(lam, dlam))
                mu_aff = float((s + a_aff * ds) @ (lam + a_aff * dlam)) / mI
                sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
                dx, ds, dlam, dnu = direction(s * lam + ds * dlam - sigma * mu)
                step = min(1.0, eta * _max_step(s, ds), eta * _max_step(lam, dlam))
            else:
                dx, ds, dlam, dnu = direction(np.zeros(0))
                step = 1.0
        except np.linalg.LinAlgError as exc:
            info["breakdown"] = str(exc)
            break
        if not np.all(np.isfinite(dx)) or not np.all(np.isfinite(dnu)):
            info["breakdown"] = "non-finite Newton direction"
            break

        x = x + step * dx
        nu = nu + step * dnu
        if mI:
            s = s + step * ds
            lam = lam + step * dlam
            # keep strictly interior against round-off
            s = np.maximum(s, 1e-300)
            lam = np.maximum(lam, 1e-300)

    info["ipm_iterations"] = it
    if status is Status.OPTIMAL and opts.polish and n:
        current = kkt_summary(qp, x, lam, nu)
        polished = polish(qp, lam > s, current, x)
        info["polished"] = polished is not None
        if polished is not None:
            x, lam, nu = polished
    return _finish(qp, x, lam, nu, status, it, info)


def solve_dual_qp(dq, opts: SolverOptions | None = None) -> Solution:
    """Solve ``minimize 1/2 lam'P lam + t'lam  s.t.  lam >= 0``.

    ``Solution.x`` holds the multipliers; convert the objective to a bound on
    the primal with ``dq.bound(solution.objective)``.
    """
    m = dq.t.shape[0]
    qp = build_qp(dq.P, dq.t, -np.eye(m), np.zeros(m))
    return solve(qp, opts)
