"""Primal-dual interior-point method for smooth nonlinear programs.

    min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  xmin <= x <= xmax

Finite variable bounds are appended to h as linear rows.  Each iteration
solves the reduced Newton/KKT system of the log-barrier problem (the
formulation popularised by MATPOWER's MIPS) and the step is safeguarded by a
filter line search on (constraint violation, barrier objective).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IpmOptions:
    feastol: float = 1e-8
    gradtol: float = 1e-8
    comptol: float = 1e-8
    costtol: float = 1e-8
    max_iter: int = 150
    xi: float = 0.99995  # fraction-to-boundary
    sigma: float = 0.1  # centering parameter
    z0: float = 1.0  # initial slack / multiplier
    line_search: bool = True
    max_backtracks: int = 10
    divergence_limit: float = 1e10


@dataclass
class IpmResult:
    x: np.ndarray
    f: float
    lam: np.ndarray  # equality multipliers
    mu: np.ndarray  # inequality multipliers, nonlinear rows first then bounds
    z: np.ndarray
    h: np.ndarray
    converged: bool
    status: str  # "converged" | "iteration-limit" | "numerical-failure"
    iterations: int
    conditions: dict
    n_nonlinear_ineq: int
    bound_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    bound_sign: np.ndarray = field(default_factory=lambda: np.zeros(0))
    filter_fallbacks: int = 0


class NlpProblem:
    """Interface consumed by :func:`solve`; subclasses supply the callbacks.

    ``constraints`` returns ``(g, h, Jg, Jh)`` with Jacobians shaped
    (rows, n).  ``hessian`` returns the Hessian of
    ``obj_weight * f + lam.g + mu.h`` with respect to x.
    """

    n: int

    def objective(self, x):
        raise NotImplementedError

    def constraints(self, x):
        raise NotImplementedError

    def hessian(self, x, lam, mu):
        raise NotImplementedError


def _bound_rows(xmin, xmax):
    lo = np.flatnonzero(np.isfinite(xmin))
    hi = np.flatnonzero(np.isfinite(xmax))
    rows = np.concatenate([lo, hi])
    sign = np.concatenate([-np.ones(len(lo)), np.ones(len(hi))])
    rhs = np.concatenate([-xmin[lo], xmax[hi]])
    return rows, sign, rhs


def _norm(v):
    return float(np.max(np.abs(v))) if len(v) else 0.0


def solve(problem, x0, xmin, xmax, options=None):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve(problem, x0, xmin, xmax, options)


def _solve(problem, x0, xmin, xmax, options):
    opt = options or IpmOptions()
    x = np.array(x0, dtype=float)
    n = len(x)
    xmin = np.asarray(xmin, dtype=float)
    xmax = np.asarray(xmax, dtype=float)
    brow, bsign, brhs = _bound_rows(xmin, xmax)
    nb = len(brow)
    # nudge the start strictly inside the bounds
    span = np.where(np.isfinite(xmax - xmin), xmax - xmin, np.inf)
    pad = np.minimum(0.01 * span, 1e-2)
    x = np.clip(x, xmin + pad, xmax - pad)

    def evaluate(x):
        f, df = problem.objective(x)
        g, h, Jg, Jh = problem.constraints(x)
        hb = bsign * x[brow] - brhs
        Jb = np.zeros((nb, n))
        Jb[np.arange(nb), brow] = bsign
        return f, df, g, np.concatenate([h, hb]), Jg, np.vstack([Jh, Jb]) if nb or len(h) else np.zeros((0, n))

    f, df, g, h, Jg, Jh = evaluate(x)
    nhn = len(h) - nb
    neq, niq = len(g), len(h)
    z = np.full(niq, opt.z0)
    z = np.where(h < -opt.z0, -h, z)
    # bound rows are linear: starting with h + z = 0 keeps every iterate inside the bounds
    z[nhn:] = np.maximum(-h[nhn:], 1e-10)
    gamma = 1.0
    mu = gamma / z
    lam = np.zeros(neq)
    f0 = f

    def conditions(x, z, lam, mu, f, df, g, h, Jg, Jh, fprev):
        Lx = df + Jg.T @ lam + Jh.T @ mu
        maxh = max(0.0, float(h.max())) if niq else 0.0
        return {
            "feascond": max(_norm(g), maxh) / (1 + max(_norm(x), _norm(z))),
            "gradcond": _norm(Lx) / (1 + max(_norm(lam), _norm(mu))),
            "compcond": float(z @ mu) / (1 + _norm(x)) if niq else 0.0,
            "costcond": abs(f - fprev) / (1 + abs(fprev)),
        }, Lx

    cond, Lx = conditions(x, z, lam, mu, f, df, g, h, Jg, Jh, f0)
    status, converged, it, fallbacks = "iteration-limit", False, 0, 0

    def violation(g, h):
        return float(np.abs(g).sum() + np.maximum(h, 0).sum())

    for it in range(1, opt.max_iter + 1):
        Lxx = problem.hessian(x, lam, mu[:nhn])
        zinv = 1.0 / z
        JhZ = Jh.T * zinv  # n x niq
        M = Lxx + (JhZ * mu) @ Jh
        N = Lx + JhZ @ (mu * h + gamma)
        K = np.block([[M, Jg.T], [Jg, np.zeros((neq, neq))]])
        rhs = -np.concatenate([N, g])
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(rhs))):
            status = "numerical-failure"
            break
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                sol = scipy.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            try:
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            except np.linalg.LinAlgError:
                status = "numerical-failure"
                break
        if not np.all(np.isfinite(sol)):
            status = "numerical-failure"
            break
        dx, dlam = sol[:n], sol[n:]
        dz = -h - z - Jh @ dx
        dmu = -mu + zinv * (gamma - mu * dz)

        neg = dz < 0
        alphap = min(opt.xi * float(np.min(-z[neg] / dz[neg])), 1.0) if neg.any() else 1.0
        neg = dmu < 0
        alphad = min(opt.xi * float(np.min(-mu[neg] / dmu[neg])), 1.0) if neg.any() else 1.0

        # filter line search on (violation, barrier objective) for the current barrier subproblem
        theta0 = violation(g, h)
        phi0 = f - gamma * float(np.log(z).sum())
        alpha = alphap
        accepted = None
        for _ in range(opt.max_backtracks + 1 if opt.line_search else 1):
            xt = x + alpha * dx
            zt = z + alpha * dz
            trial = evaluate(xt)
            ft, _, gt, ht, _, _ = trial
            if not (np.isfinite(ft) and np.all(np.isfinite(gt)) and np.all(np.isfinite(ht))):
                alpha *= 0.5
                continue
            theta = violation(gt, ht)
            phi = ft - gamma * float(np.log(zt).sum())
            if not opt.line_search or theta <= (1 - 1e-5) * theta0 or phi <= phi0 - 1e-5 * theta0:
                accepted = (alpha, xt, zt, trial)
                break
            alpha *= 0.5
        if accepted is None:
            fallbacks += 1
            xt, zt = x + alphap * dx, z + alphap * dz
            accepted = (alphap, xt, zt, evaluate(xt))
        alpha, x, z, (fnew, df, g, h, Jg, Jh) = accepted
        scale_d = alphad * alpha / alphap if alphap > 0 else alphad
        lam = lam + scale_d * dlam
        mu = mu + scale_d * dmu
        mu = np.maximum(mu, 1e-300) if niq else mu
        if niq:
            gamma = opt.sigma * float(z @ mu) / niq
        fprev, f = f, fnew
        cond, Lx = conditions(x, z, lam, mu, f, df, g, h, Jg, Jh, fprev)
        log.debug("ipm it %d f=%.10g %s alpha=%.3g", it, f, cond, alpha)
        if not np.all(np.isfinite(x)) or _norm(x) > opt.divergence_limit:
            status = "numerical-failure"
            break
        if (
            cond["feascond"] < opt.feastol
            and cond["gradcond"] < opt.gradtol
            and cond["compcond"] < opt.comptol
            and cond["costcond"] < opt.costtol
        ):
            status, converged = "converged", True
            break

    return IpmResult(
        x=x,
        f=float(f),
        lam=lam,
        mu=mu,
        z=z,
        h=h,
        converged=converged,
        status=status,
        iterations=it,
        conditions=cond,
        n_nonlinear_ineq=nhn,
        bound_rows=brow,
        bound_sign=bsign,
        filter_fallbacks=fallbacks,
    )
