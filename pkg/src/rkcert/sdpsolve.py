"""Numerical search for a strictly interior point of ``F(eta) >= 0``.

The solver is a primal-dual interior-point method (HKM direction, Mehrotra
predictor-corrector) for

    maximize t  subject to  F(eta) - t I >= 0,  |eta_j| <= bound,  t <= t_cap

written in the SDPA dual form ``max b^T y, C - sum y_i A_i >= 0``.  Before the
solve, directions on which every matrix of a block vanishes are projected out
exactly (facial reduction); those are the null vectors the modified CSTW
constraints put into X, and without the projection the margin could never be
positive.  Rows and columns are equilibrated by a diagonal congruence, which
changes neither feasibility nor eta.

Nothing here is rigorous: :mod:`rkcert.certify` re-checks every point in exact
arithmetic.
"""
from __future__ import annotations

import json
import logging
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactnum import Matrix, nullspace_exact
from .lmi import Block, LmiProblem

__all__ = ["SdpResult", "SolverOptions", "solve_feasibility", "facial_reduction",
           "min_eigenvalue", "solve_external", "EXTERNAL_SOLVER_ENV"]

log = logging.getLogger(__name__)

EXTERNAL_SOLVER_ENV = "RKCERT_EXTERNAL_SOLVER"


@dataclass
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 150
    bound: float = 1e4      # box on the equilibrated variables
    t_cap: float = 1.0
    step: float = 0.95
    seed: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SdpResult:
    status: str  # "feasible" | "likely-infeasible" | "indeterminate"
    eta: np.ndarray | None
    min_eig: float | None
    margin: float | None
    iterations: int
    residuals: dict = field(default_factory=dict)
    dual_report: dict | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


# ---------------------------------------------------------------------------
# exact preprocessing

def _common_kernel(block: Block) -> list[tuple]:
    """Exact basis of ``{v : base v = 0 and N v = 0 for every basis matrix N}``."""
    K = nullspace_exact(block.base)
    for N in block.basis:
        if not K:
            break
        Km = Matrix.from_columns(K)
        NK = N @ Km
        if NK.is_zero():
            continue
        coeffs = nullspace_exact(NK)
        K = [Km.dot(c) for c in coeffs]
    return K


def facial_reduction(p: LmiProblem) -> tuple[LmiProblem, list[Matrix | None]]:
    """Restrict each block to the complement of its common kernel.

    Returns the reduced problem and, per block, the exact basis ``Q`` used
    (``None`` when nothing was removed).  Blocks that vanish entirely are
    dropped: they are identically zero and hence PSD.
    """
    blocks, Qs = [], []
    for b in p.blocks:
        K = _common_kernel(b)
        if not K:
            blocks.append(b)
            Qs.append(None)
            continue
        comp = nullspace_exact(Matrix(K))
        if not comp:
            Qs.append(Matrix.zeros(b.size, 0) if b.size else None)
            continue
        Q = Matrix.from_columns(comp)
        QT = Q.T
        red = lambda M: QT @ M @ Q  # noqa: E731
        blocks.append(Block(b.name, red(b.base), tuple(red(N) for N in b.basis)))
        Qs.append(Q)
    reduced = LmiProblem(tuple(blocks), p.variable_names, p.provenance, p.lift, p.raw_names, p.meta)
    return reduced, Qs


# ---------------------------------------------------------------------------
# floating-point model

def _to_float(M: Matrix) -> np.ndarray:
    if M.nrows == 0:
        return np.zeros((0, 0))
    return np.array([[float(x) for x in r] for r in M.rows], dtype=float)


@dataclass
class _Scaled:
    C: list          # per block, equilibrated base
    A: list          # A[k][j] equilibrated basis matrices
    var_scale: np.ndarray   # eta_j = y_j / var_scale[j]


def _equilibrate(blocks: Sequence[Block]) -> _Scaled:
    Cs, As = [], []
    for b in blocks:
        C = _to_float(b.base)
        Ns = [_to_float(N) for N in b.basis]
        mags = np.abs(C).max(axis=1) if C.size else np.zeros(0)
        for N in Ns:
            mags = np.maximum(mags, np.abs(N).max(axis=1))
        w = 1.0 / np.sqrt(np.where(mags > 0, mags, 1.0))
        W = np.outer(w, w)
        Cs.append(C * W)
        As.append([N * W for N in Ns])
    d = len(blocks[0].basis) if blocks else 0
    nu = np.ones(d)
    for j in range(d):
        sq = sum(float(np.sum(As[k][j] ** 2)) for k in range(len(blocks)))
        if sq > 0:
            nu[j] = np.sqrt(sq)
    for k in range(len(blocks)):
        As[k] = [As[k][j] / nu[j] for j in range(d)]
    top = max([np.abs(C).max() for C in Cs if C.size] + [1e-300])
    Cs = [C / top for C in Cs]
    # rescaling C by 1/top rescales eta by 1/top as well
    return _Scaled(Cs, As, nu / top)


def _row_weights(b: Block) -> np.ndarray:
    mags = np.abs(_to_float(b.base)).max(axis=1)
    for N in b.basis:
        mags = np.maximum(mags, np.abs(_to_float(N)).max(axis=1))
    return 1.0 / np.sqrt(np.where(mags > 0, mags, 1.0))


def min_eigenvalue(p: LmiProblem, eta: Sequence[float], equilibrate: bool = True) -> float:
    """Smallest eigenvalue over the blocks of ``F(eta)`` (numpy ``eigvalsh``).

    With ``equilibrate`` each block is first scaled by the same diagonal
    congruence the solver uses, which depends on the problem data only.
    """
    eta = np.asarray(eta, dtype=float)
    worst = np.inf
    for b in p.blocks:
        if b.size == 0:
            continue
        F = _to_float(b.base)
        for x, N in zip(eta, b.basis):
            F = F + x * _to_float(N)
        if equilibrate:
            w = _row_weights(b)
            F = F * np.outer(w, w)
        worst = min(worst, float(np.linalg.eigvalsh(F).min()))
    return worst if np.isfinite(worst) else 0.0


# ---------------------------------------------------------------------------
# interior point method

def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha <= 1e6 with X + alpha dX PSD (X positive definite)."""
    if X.size == 0:
        return 1e6
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ dX @ Li.T).min()
    return 1e6 if lam >= 0 else min(1e6, -1.0 / lam)


def _max_step_lp(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return 1e6
    return min(1e6, float(np.min(-x[neg] / dx[neg])))


def _ipm(Cs, As, c_lp, a_lp, bvec, opts: SolverOptions, rng: np.random.Generator,
         stop_positive: bool = False):
    """SDPA-dual IPM over dense blocks plus one nonnegative-orthant block.

    With ``stop_positive`` the loop ends at the first dual-feasible iterate
    whose objective (the margin t) is positive.
    """
    nvar = len(bvec)
    nb = len(Cs)
    n_tot = sum(C.shape[0] for C in Cs) + len(c_lp)
    normC = max([np.linalg.norm(C) for C in Cs] + [np.linalg.norm(c_lp), 1.0])
    normA = max([np.linalg.norm(As[k][i]) for k in range(nb) for i in range(nvar)] + [1.0])
    xi = 10.0 * max(1.0, np.sqrt(n_tot), normA)
    zeta = 10.0 * max(1.0, np.sqrt(n_tot), normA, normC)
    X = [xi * np.eye(C.shape[0]) for C in Cs]
    Z = [zeta * np.eye(C.shape[0]) for C in Cs]
    x = xi * np.ones(len(c_lp))
    z = zeta * np.ones(len(c_lp))
    y = np.zeros(nvar)
    if opts.seed:
        y += 1e-6 * rng.standard_normal(nvar)

    def Aop(Xs, xv):
        out = np.array([sum(float(np.sum(As[k][i] * Xs[k])) for k in range(nb)) for i in range(nvar)])
        return out + a_lp.T @ xv

    it = 0
    info = {}
    best = None
    stalls = 0
    for it in range(1, opts.max_iter + 1):
        try:
            Zinv = [np.linalg.inv(Zk) for Zk in Z]
        except np.linalg.LinAlgError:
            log.info("dual slack became singular at iteration %d", it)
            break
        rp = bvec - Aop(X, x)
        Rd = [Cs[k] - sum(y[i] * As[k][i] for i in range(nvar)) - Z[k] for k in range(nb)]
        rd_lp = c_lp - a_lp @ y - z
        gap = sum(float(np.sum(X[k] * Z[k])) for k in range(nb)) + float(x @ z)
        mu = gap / n_tot
        pobj = sum(float(np.sum(Cs[k] * X[k])) for k in range(nb)) + float(c_lp @ x)
        dobj = float(bvec @ y)
        pinf = np.linalg.norm(rp) / (1 + np.linalg.norm(bvec))
        dinf = (np.sqrt(sum(np.sum(R ** 2) for R in Rd) + np.sum(rd_lp ** 2))) / (1 + normC)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        info = {"pinf": pinf, "dinf": dinf, "relgap": relgap, "pobj": pobj, "dobj": dobj}
        if pinf < opts.tol and dinf < opts.tol and relgap < opts.tol:
            return y, X, x, it, info, True
        if dinf < 1e-8 and (best is None or dobj > best[0]):
            best = (dobj, y.copy())
            if stop_positive and dobj > opts.tol:
                return y, X, x, it, info, True

        # Schur complement
        G = [[X[k] @ As[k][j] @ Zinv[k] for j in range(nvar)] for k in range(nb)]
        M = np.zeros((nvar, nvar))
        for k in range(nb):
            for i in range(nvar):
                Ai = As[k][i]
                for j in range(i, nvar):
                    M[i, j] += float(np.sum(Ai * G[k][j]))
        M = np.triu(M) + np.triu(M, 1).T
        dlp = x / z
        M += a_lp.T @ (dlp[:, None] * a_lp)
        M += 1e-14 * np.trace(M) / max(nvar, 1) * np.eye(nvar)
        try:
            Mc = np.linalg.cholesky(M)
            solve = lambda r: np.linalg.solve(Mc.T, np.linalg.solve(Mc, r))  # noqa: E731
        except np.linalg.LinAlgError:
            solve = lambda r: np.linalg.lstsq(M, r, rcond=None)[0]  # noqa: E731

        XRdZi = [X[k] @ Rd[k] @ Zinv[k] for k in range(nb)]

        def direction(H, h_lp):
            rhs = rp - Aop(H, h_lp) + Aop(XRdZi, x * rd_lp / z)
            dy = solve(rhs)
            dZ = [Rd[k] - sum(dy[i] * As[k][i] for i in range(nvar)) for k in range(nb)]
            dz = rd_lp - a_lp @ dy
            dX = [H[k] - X[k] @ dZ[k] @ Zinv[k] for k in range(nb)]
            dX = [(D + D.T) / 2 for D in dX]
            dx = h_lp - x * dz / z
            return dX, dy, dZ, dx, dz

        def steps(dX, dZ, dx, dz):
            ap = min([_max_step(X[k], dX[k]) for k in range(nb)] + [_max_step_lp(x, dx)])
            ad = min([_max_step(Z[k], dZ[k]) for k in range(nb)] + [_max_step_lp(z, dz)])
            return min(1.0, opts.step * ap), min(1.0, opts.step * ad)

        # predictor
        H = [-X[k] for k in range(nb)]
        dXa, dya, dZa, dxa, dza = direction(H, -x)
        ap, ad = steps(dXa, dZa, dxa, dza)
        gap_a = sum(float(np.sum((X[k] + ap * dXa[k]) * (Z[k] + ad * dZa[k]))) for k in range(nb)) \
            + float((x + ap * dxa) @ (z + ad * dza))
        sigma = min(1.0, (gap_a / gap) ** 3) if gap > 0 else 0.0
        # corrector
        H = [sigma * mu * Zinv[k] - X[k] - dXa[k] @ dZa[k] @ Zinv[k] for k in range(nb)]
        h_lp = sigma * mu / z - x - dxa * dza / z
        dX, dy, dZ, dx, dz = direction(H, h_lp)
        ap, ad = steps(dX, dZ, dx, dz)
        log.debug("it %d ap %.3g ad %.3g pinf %.3g dinf %.3g gap %.3g sigma %.3g",
                  it, ap, ad, pinf, dinf, relgap, sigma)
        stalls = stalls + 1 if max(ap, ad) < 1e-10 else 0
        if stalls >= 3:
            break
        X = [X[k] + ap * dX[k] for k in range(nb)]
        X = [(Xk + Xk.T) / 2 for Xk in X]
        x = x + ap * dx
        y = y + ad * dy
        Z = [Z[k] + ad * dZ[k] for k in range(nb)]
        Z = [(Zk + Zk.T) / 2 for Zk in Z]
        z = z + ad * dz
        if not all(np.all(np.isfinite(Zk)) for Zk in Z) or not np.all(np.isfinite(y)):
            break
    # numerical trouble near the optimum: fall back to the best dual-feasible iterate
    if best is not None and best[0] > float(bvec @ y):
        y = best[1]
    return y, X, x, it, info, False


def solve_feasibility(p: LmiProblem, margin: bool = True,
                      options: SolverOptions | None = None) -> SdpResult:
    """Find eta with ``F(eta) >= 0``, preferring a point of maximal margin.

    With ``margin=False`` the same problem is solved but any point with a
    positive margin is returned as soon as one is found.
    """
    opts = options or SolverOptions()
    rng = np.random.default_rng(opts.seed)
    red, _ = facial_reduction(p)
    blocks = [b for b in red.blocks if b.size > 0]
    d = p.d
    if not blocks:
        return SdpResult("feasible", np.zeros(d), 0.0, np.inf, 0, {"note": "all blocks vanish"})
    sc = _equilibrate(blocks)
    if d == 0:
        lam = min(float(np.linalg.eigvalsh(C).min()) for C in sc.C)
        status = "feasible" if lam >= -opts.tol else "likely-infeasible"
        report = None if status == "feasible" else {"min_eig_base": lam}
        return SdpResult(status, np.zeros(0), min_eigenvalue(red, []), lam, 0, {}, report)

    nb = len(blocks)
    nvar = d + 1
    # Z_k = C_k + sum eta_j N_j - t I  =>  A_jk = -N_jk, A_tk = I
    As = [[-sc.A[k][j] for j in range(d)] + [np.eye(blocks[k].size)] for k in range(nb)]
    # box |y_j| <= bound and t <= t_cap as a diagonal block
    c_lp = np.concatenate([opts.bound * np.ones(2 * d), [opts.t_cap]])
    a_lp = np.zeros((2 * d + 1, nvar))
    for j in range(d):
        a_lp[2 * j, j] = 1.0
        a_lp[2 * j + 1, j] = -1.0
    a_lp[2 * d, d] = 1.0
    bvec = np.zeros(nvar)
    bvec[d] = 1.0
    opts_run = opts
    if not margin:
        opts_run = SolverOptions(**{**opts.to_dict(), "tol": max(opts.tol, 1e-7)})
    y, X, xlp, iters, info, converged = _ipm(sc.C, As, c_lp, a_lp, bvec, opts_run, rng,
                                                stop_positive=not margin)
    t = float(y[d])
    eta = y[:d] / sc.var_scale
    info = {k: float(v) for k, v in info.items()}
    lam = min_eigenvalue(red, eta)
    # the status rests on an independent eigenvalue check of the returned point
    if lam >= -opts.tol:
        return SdpResult("feasible", eta, lam, t, iters, info)
    if not converged:
        log.info("IPM did not converge in %d iterations: %s", iters, info)
        return SdpResult("indeterminate", eta, lam, t, iters, info)
    dual = {"t_opt": t, "primal_trace": float(sum(np.trace(Xk) for Xk in X)),
            "note": "maximal margin is negative: a PSD X orthogonal to every basis matrix "
                    "separates base from the PSD cone (numerically)"}
    return SdpResult("likely-infeasible", eta, lam, t, iters, info, dual)


# ---------------------------------------------------------------------------
# external bridge

def solve_external(p: LmiProblem, command: str | None = None, timeout: float = 600.0,
                   tol: float = 1e-9) -> SdpResult:
    """Hand the problem to an external solver process.

    The command (or ``$RKCERT_EXTERNAL_SOLVER``) is run as ``command IN OUT``;
    IN is :meth:`LmiProblem.to_dict` as JSON and OUT must receive
    ``{"eta": [float, ...]}``.  The returned point is re-checked here.
    """
    command = command or os.environ.get(EXTERNAL_SOLVER_ENV)
    if not command:
        raise RuntimeError(f"no external solver configured (set {EXTERNAL_SOLVER_ENV})")
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "lmi.json")
        dst = os.path.join(tmp, "eta.json")
        with open(src, "w") as fh:
            json.dump(p.to_dict(), fh)
        proc = subprocess.run(shlex.split(command) + [src, dst], capture_output=True,
                              text=True, timeout=timeout)
        if proc.returncode != 0 or not os.path.exists(dst):
            return SdpResult("indeterminate", None, None, None, 0,
                             {"returncode": proc.returncode, "stderr": proc.stderr[-2000:]})
        with open(dst) as fh:
            eta = np.asarray(json.load(fh)["eta"], dtype=float)
    if eta.shape != (p.d,):
        return SdpResult("indeterminate", None, None, None, 0, {"error": "wrong eta length"})
    lam = min_eigenvalue(p, eta)
    return SdpResult("feasible" if lam >= -tol else "indeterminate", eta, lam, lam, 0, {})


def eta_as_fractions(eta: Sequence[float]) -> list[Fraction]:
    return [Fraction(float(v)) for v in eta]
