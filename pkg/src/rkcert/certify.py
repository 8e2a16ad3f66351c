"""Rational rounding, exact verification and certificate files.

A certificate stores, per PSD block, an exact factorization
``P M P^T = L D L^T`` of the LMI block at the rounded multipliers.  The
verifier in this module trusts nothing in the file except the embedded
tableau: it recomputes the blocks, reassembles ``P^T L D L^T P`` and checks
the pivot signs.
"""
from __future__ import annotations

import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import __version__
from .butcher import (ButcherTableau, analytic_in_sector, krylov_M, stability_function,
                      tall_tree_order)
from .epoly import e_polynomial, factor_even_monomial, gram_data, quadratic_form_poly
from .exactnum import (LDL, IndefiniteStructure, Matrix, Poly, QuadExt, format_rat,
                       format_scalar, ldl_exact, parse_rat, parse_scalar, sign)
from .lmi import LmiProblem, assemble_cstw_lmi, assemble_sos_lmi, null_vectors
from .sdpsolve import SdpResult, SolverOptions, min_eigenvalue, solve_feasibility

__all__ = [
    "BlockFactor", "Certificate", "FailureReport", "RoundingLadder", "VerificationReport",
    "build_lmi", "certificate_from_json", "certificate_to_json", "certify_from_eta",
    "eta_digits", "load_certificate", "retry_policy", "round_rational", "save_certificate",
    "snap_candidates",
    "sos_decomposition", "verify_certificate", "verify_exact",
]

log = logging.getLogger(__name__)

# certificate denominators for the A(alpha) fixtures run to tens of thousands of digits
sys.set_int_max_str_digits(0)

METHODS = ("sos-epoly", "cstw", "cstw-modified")
_PROVENANCE_TO_METHOD = {"sos": "sos-epoly", "cstw": "cstw", "cstw-modified": "cstw-modified"}


# ---------------------------------------------------------------------------
# rounding

def round_rational(eta: Sequence[float], max_den: int | None = None,
                   snap_grid=None) -> list[Fraction]:
    """Per-entry rational approximation of a float vector.

    ``snap_grid`` is ``"integer"`` or a positive rational spacing (e.g.
    ``Fraction(1, 1000)``); otherwise each entry becomes the best rational
    with denominator at most ``max_den`` (continued-fraction convergents).
    """
    out = []
    for x in eta:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite multiplier {x}")
        if snap_grid == "integer":
            out.append(Fraction(round(x)))
        elif snap_grid is not None:
            h = Fraction(snap_grid)
            out.append(round(Fraction(x) / h) * h)
        elif max_den is None:
            out.append(Fraction(x))
        else:
            out.append(Fraction(x).limit_denominator(max_den))
    return out


def _snap_int(x: float, digits: int) -> Fraction:
    if x == 0:
        return Fraction(0)
    e = math.floor(math.log10(abs(x)))
    step = 10 ** max(0, e + 1 - digits)
    return Fraction(round(Fraction(x) / step) * step)


def snap_candidates(eta: Sequence[float]) -> list[list[Fraction]]:
    """Integer vectors near ``eta``, simplest first.

    Level k keeps k significant digits of every entry (never finer than the
    integers); the last level is the nearest integer vector.  -61.79 gives
    -60 and then -62.
    """
    if len(eta) == 0:
        return [[]]
    top = max((math.floor(math.log10(abs(x))) + 1 for x in eta if abs(x) >= 1), default=1)
    out: list[list[Fraction]] = []
    for k in range(1, top + 1):
        cand = [_snap_int(float(x), k) for x in eta]
        if cand not in out:
            out.append(cand)
    near = round_rational(eta, snap_grid="integer")
    if near not in out:
        out.append(near)
    return out


@dataclass(frozen=True)
class RoundingLadder:
    """Candidate schedule of :func:`retry_policy`."""
    integer_snap: bool = True
    denominators: tuple = (10 ** 2, 10 ** 6, 10 ** 12)
    resolve: bool = True
    # candidates whose float min-eigenvalue is below this are not tried exactly
    prescreen: float = -1e-9
    resolve_tol: float = 1e-11

    def to_dict(self) -> dict:
        return {"integer_snap": self.integer_snap, "denominators": list(self.denominators),
                "resolve": self.resolve, "prescreen": self.prescreen,
                "resolve_tol": self.resolve_tol}

    @classmethod
    def from_dict(cls, d: dict) -> RoundingLadder:
        d = dict(d)
        if "denominators" in d:
            d["denominators"] = tuple(int(x) for x in d["denominators"])
        return cls(**d)

    def candidates(self, eta: Sequence[float]) -> list[tuple[str, list[Fraction]]]:
        out: list[tuple[str, list[Fraction]]] = []
        seen: list[list[Fraction]] = []
        if self.integer_snap:
            for k, c in enumerate(snap_candidates(eta), start=1):
                if c not in seen:
                    seen.append(c)
                    out.append((f"integer-snap-{k}", c))
        for q in self.denominators:
            c = round_rational(eta, max_den=q)
            if c not in seen:
                seen.append(c)
                out.append((f"max-den-{q}", c))
        return out


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class BlockFactor:
    name: str
    perm: tuple
    L: Matrix
    D: tuple

    def reassemble(self) -> Matrix:
        return LDL(self.L, self.D, self.perm).reassemble()

    def zero_pivots(self) -> list[int]:
        return [k for k, d in enumerate(self.D) if not d]


@dataclass(frozen=True)
class Certificate:
    scheme: str
    tableau_sha256: str | None
    method: str
    alpha_mode: str
    beta: Fraction | None
    eta: tuple
    blocks: tuple
    verified: bool
    analyticity: str = ""
    raw_eta: tuple = ()
    order: int | None = None
    normalization: str | None = None
    failed_pivot: tuple | None = None
    notes: tuple = ()
    config: dict = field(default_factory=dict)
    tableau: dict | None = None
    tool_version: str = __version__

    def block(self, name: str) -> BlockFactor:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


@dataclass(frozen=True)
class FailureReport:
    """Why no certificate was produced; ``attempts`` lists (label, outcome)."""
    stage: str
    reason: str
    attempts: tuple = ()
    solver_status: str | None = None

    def to_dict(self) -> dict:
        return {"stage": self.stage, "reason": self.reason,
                "attempts": [list(a) for a in self.attempts], "solver_status": self.solver_status}


def verify_exact(p: LmiProblem, eta: Sequence, *, tableau: ButcherTableau | None = None,
                 beta=None, alpha_mode: str | None = None, normalization: str | None = None,
                 analyticity: str = "", order: int | None = None, config: dict | None = None,
                 notes: Sequence[str] = ()) -> Certificate:
    """Substitute ``eta`` exactly and factor every block.

    ``verified`` is True iff every pivot of every block is nonnegative.  A
    zero pivot with a nonzero column below it (``IndefiniteStructure``) or a
    negative pivot is recorded in ``failed_pivot`` as ``(block, index)``.
    """
    eta = tuple(x if isinstance(x, (Fraction, QuadExt)) else Fraction(x) for x in eta)
    if len(eta) != p.d:
        raise ValueError(f"expected {p.d} multipliers, got {len(eta)}")
    factors = []
    failed = None
    for b in p.blocks:
        M = b.at(eta)
        try:
            f = ldl_exact(M)
        except IndefiniteStructure as exc:
            failed = (b.name, exc.pivot)
            break
        factors.append(BlockFactor(b.name, tuple(f.perm), f.L, tuple(f.D)))
        neg = next((k for k, d in enumerate(f.D) if sign(d) < 0), None)
        if neg is not None:
            failed = (b.name, neg)
            break
    if alpha_mode is None:
        alpha_mode = "sector" if beta is not None else "right-angle"
    return Certificate(
        scheme=tableau.name if tableau is not None else "",
        tableau_sha256=tableau.sha256() if tableau is not None else None,
        method=_PROVENANCE_TO_METHOD[p.provenance],
        alpha_mode=alpha_mode,
        beta=None if beta is None else Fraction(beta),
        eta=eta,
        blocks=tuple(factors),
        verified=failed is None,
        analyticity=analyticity,
        raw_eta=p.raw_eta(eta) if p.lift is not None else (),
        order=order,
        normalization=normalization if p.provenance == "sos" else None,
        failed_pivot=failed,
        notes=tuple(notes),
        config=dict(config or {}),
        tableau=tableau.to_dict() if tableau is not None else None,
    )


def sos_decomposition(c: Certificate) -> list[tuple[Fraction, Poly]]:
    """``F(y) = sum_k d_k q_k(y)^2`` read off the rows of ``L^T P``."""
    if c.method != "sos-epoly":
        raise ValueError("sum-of-squares form only exists for sos-epoly certificates")
    if not c.verified:
        raise ValueError("certificate is not verified")
    (b,) = c.blocks
    n = len(b.D)
    out = []
    for k in range(n):
        if not b.D[k]:
            continue
        coeffs = [Fraction(0)] * n
        for i in range(k, n):
            coeffs[b.perm[i]] += b.L[i, k]
        out.append((b.D[k], Poly(coeffs)))
    return out


def _analyticity_text(t: ButcherTableau, beta) -> str:
    a = analytic_in_sector(t, Fraction(beta or 0))
    return f"{a.status}: {a.detail}"


def build_lmi(t: ButcherTableau, method: str, beta=None,
              normalization: str = "monic") -> LmiProblem:
    """Assemble the LMI for ``method`` (sos-epoly, cstw or cstw-modified).

    For sos-epoly a ``beta`` selects the sector E-polynomial; ``None`` the
    right-angle one.  May raise ``NotDivisible`` for the right-angle route.
    """
    if method in ("sos", "sos-epoly"):
        sf = stability_function(t)
        if beta is None:
            e = e_polynomial(sf, "right-angle", normalization=normalization)
            F = factor_even_monomial(e, tall_tree_order(t))
        else:
            e = e_polynomial(sf, "sector", Fraction(beta), normalization=normalization)
            F = factor_even_monomial(e)
        return assemble_sos_lmi(gram_data(F), {"F": [format_rat(c) for c in F.coeffs]})
    if method == "cstw":
        return assemble_cstw_lmi(t, modified=False)
    if method == "cstw-modified":
        return assemble_cstw_lmi(t, modified=True)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def retry_policy(p: LmiProblem, solve_result: SdpResult, *,
                 ladder: RoundingLadder | None = None,
                 solver_options: SolverOptions | None = None,
                 certify: Callable[[Sequence[Fraction]], Certificate] | None = None,
                 ) -> Certificate | FailureReport:
    """Walk the rounding ladder until a candidate verifies exactly.

    Feasible and indeterminate solver results are both rounded; a
    likely-infeasible one is reported as a failure straight away.

    If no candidate verifies, the problem is solved once more with a tighter
    tolerance and the ladder is walked again.  Never returns an unverified
    certificate.
    """
    ladder = ladder or RoundingLadder()
    certify = certify or (lambda eta: verify_exact(p, eta))
    attempts: list[tuple[str, str]] = []
    if p.d == 0:
        c = certify(())
        if c.verified:
            return c
        return FailureReport("verify", f"base matrix is not PSD (pivot {c.failed_pivot})",
                             (("no-variables", "indefinite"),), solve_result.status)
    # an indeterminate iterate may still round to an exact certificate: soundness
    # comes from the exact check, not from the solver status
    if solve_result.status == "likely-infeasible" or solve_result.eta is None:
        return FailureReport("solve", f"solver status {solve_result.status}",
                             (), solve_result.status)

    def walk(eta_f, tag: str):
        for label, cand in ladder.candidates(eta_f):
            lam = min_eigenvalue(p, [float(x) for x in cand])
            if lam < ladder.prescreen:
                attempts.append((tag + label, f"skipped: float min eig {lam:.3g}"))
                continue
            c = certify(cand)
            if c.verified:
                attempts.append((tag + label, "verified"))
                return c
            attempts.append((tag + label, f"negative pivot {c.failed_pivot}"))
        return None

    c = walk(solve_result.eta, "")
    if c is not None:
        return c
    if ladder.resolve:
        base = solver_options or SolverOptions()
        opts = SolverOptions(**{**base.to_dict(), "tol": ladder.resolve_tol,
                                "max_iter": 2 * base.max_iter})
        again = solve_feasibility(p, margin=True, options=opts)
        attempts.append(("resolve", f"{again.status} margin {again.margin}"))
        if again.eta is not None and again.status != "likely-infeasible":
            c = walk(again.eta, "resolve/")
            if c is not None:
                return c
    return FailureReport("round", "no rounded candidate verified exactly", tuple(attempts),
                         solve_result.status)


# ---------------------------------------------------------------------------
# serialization

def _mat_out(M: Matrix) -> list:
    return [[format_scalar(x) for x in r] for r in M.rows]


def certificate_to_json(c: Certificate) -> str:
    radicand = (c.tableau or {}).get("radicand")
    d = {
        "scheme": c.scheme,
        "tableau_sha256": c.tableau_sha256,
        "method": c.method,
        "alpha_mode": c.alpha_mode,
        "beta": None if c.beta is None else format_rat(c.beta),
        "eta": [format_scalar(x) for x in c.eta],
        "raw_eta": [format_scalar(x) for x in c.raw_eta],
        "blocks": [{"name": b.name, "perm": list(b.perm), "L": _mat_out(b.L),
                    "D": [format_scalar(x) for x in b.D]} for b in c.blocks],
        "verified": c.verified,
        "failed_pivot": None if c.failed_pivot is None else list(c.failed_pivot),
        "analyticity": c.analyticity,
        "order": c.order,
        "normalization": c.normalization,
        "notes": list(c.notes),
        "config": c.config,
        "tableau": c.tableau,
        "tool_version": c.tool_version,
    }
    if radicand is not None:
        d["radicand"] = radicand
    return json.dumps(d, indent=1, sort_keys=True) + "\n"


def certificate_from_json(text: str) -> Certificate:
    d = json.loads(text)
    r = d.get("radicand")
    ps = lambda x: parse_scalar(x, r, allow_decimal=False)  # noqa: E731
    blocks = tuple(BlockFactor(b["name"], tuple(int(i) for i in b["perm"]),
                               Matrix([[ps(x) for x in row] for row in b["L"]]),
                               tuple(ps(x) for x in b["D"]))
                   for b in d["blocks"])
    fp = d.get("failed_pivot")
    return Certificate(
        scheme=d["scheme"],
        tableau_sha256=d.get("tableau_sha256"),
        method=d["method"],
        alpha_mode=d.get("alpha_mode", "right-angle"),
        beta=None if d.get("beta") is None else parse_rat(d["beta"], allow_decimal=False),
        eta=tuple(ps(x) for x in d["eta"]),
        blocks=blocks,
        verified=bool(d["verified"]),
        analyticity=d.get("analyticity", ""),
        raw_eta=tuple(ps(x) for x in d.get("raw_eta", [])),
        order=d.get("order"),
        normalization=d.get("normalization"),
        failed_pivot=None if fp is None else (fp[0], int(fp[1])),
        notes=tuple(d.get("notes", [])),
        config=d.get("config", {}),
        tableau=d.get("tableau"),
        tool_version=d.get("tool_version", ""),
    )


def save_certificate(c: Certificate, path) -> None:
    with open(path, "w") as fh:
        fh.write(certificate_to_json(c))


def load_certificate(path) -> Certificate:
    with open(path) as fh:
        return certificate_from_json(fh.read())


# ---------------------------------------------------------------------------
# independent verification

@dataclass
class VerificationReport:
    ok: bool
    failures: list = field(default_factory=list)
    pivot: tuple | None = None
    checks: list = field(default_factory=list)

    def fail(self, msg: str, pivot: tuple | None = None) -> None:
        self.ok = False
        self.failures.append(msg)
        if pivot is not None and self.pivot is None:
            self.pivot = pivot


def _check_factor(b: BlockFactor, rep: VerificationReport) -> Matrix | None:
    n = len(b.D)
    if sorted(b.perm) != list(range(n)):
        rep.fail(f"block {b.name}: perm is not a permutation of 0..{n - 1}")
        return None
    if b.L.shape != (n, n):
        rep.fail(f"block {b.name}: L has shape {b.L.shape}, D has {n} entries")
        return None
    for i in range(n):
        if b.L[i, i] != 1 or any(b.L[i, j] for j in range(i + 1, n)):
            rep.fail(f"block {b.name}: L is not unit lower triangular (row {i})")
            return None
    for k, d in enumerate(b.D):
        if sign(d) < 0:
            rep.fail(f"block {b.name}: negative pivot D[{k}] = {format_scalar(d)}", (b.name, k))
    return b.reassemble()


def _cstw_blocks(t: ButcherTableau, raw: Sequence) -> dict:
    """R and X straight from their definitions, conjugated by M when needed."""
    s = t.s
    A = t.A
    R = [[Fraction(0)] * s for _ in range(s)]
    for i in range(s):
        R[i][i] = t.b[i]
    k = 0
    for i in range(s):
        for j in range(i + 1, s):
            x = raw[k]
            k += 1
            R[i][i] += x
            R[j][j] += x
            R[i][j] -= x
            R[j][i] -= x
    Rm = Matrix(R)
    X = [[sum((Rm[i, l] * A[l, j] + A[l, i] * Rm[l, j] for l in range(s)), Fraction(0))
          - t.b[i] * t.b[j] for j in range(s)] for i in range(s)]
    Xm = Matrix(X)
    kr = krylov_M(t)
    if not kr.full:
        M = kr.M
        return {"R": M.T @ Rm @ M, "X": M.T @ Xm @ M, "_X_full": Xm}
    return {"R": Rm, "X": Xm, "_X_full": Xm}


def verify_certificate(c: Certificate | dict | str) -> VerificationReport:
    """Re-check a certificate from scratch.

    The embedded tableau is hashed and compared, the LMI blocks are rebuilt
    and compared with ``P^T L D L^T P``, and every pivot sign is checked.
    SOS certificates additionally satisfy ``yhat^T M yhat == F(y)``;
    cstw-modified ones satisfy ``X A^{j-1} e = 0`` for ``j <= p/2``.
    """
    if isinstance(c, str):
        c = certificate_from_json(c)
    elif isinstance(c, dict):
        c = certificate_from_json(json.dumps(c))
    rep = VerificationReport(True)
    if c.method not in METHODS:
        rep.fail(f"unknown method {c.method!r}")
        return rep
    if not c.verified:
        rep.fail("certificate declares verified = false")
    if c.tableau is None:
        rep.fail("no embedded tableau")
        return rep
    try:
        t = ButcherTableau.from_dict(c.tableau, allow_decimal=True)
    except (ValueError, KeyError, TypeError) as exc:
        rep.fail(f"embedded tableau does not parse: {exc}")
        return rep
    if t.sha256() != c.tableau_sha256:
        rep.fail("tableau hash mismatch")
        return rep
    rep.checks.append("tableau hash")
    order = tall_tree_order(t)
    if c.order is not None and order.p < c.order:
        rep.fail(f"tableau has tall-tree order {order.p}, certificate claims {c.order}")

    try:
        p = build_lmi(t, c.method, c.beta if c.alpha_mode == "sector" else None,
                      c.normalization or "monic")
    except ArithmeticError as exc:
        rep.fail(f"LMI cannot be rebuilt: {exc}")
        return rep
    if len(c.eta) != p.d:
        rep.fail(f"eta has {len(c.eta)} entries, the LMI has {p.d} variables")
        return rep
    names = [b.name for b in p.blocks]
    if [b.name for b in c.blocks] != names:
        rep.fail(f"blocks {[b.name for b in c.blocks]} do not match {names}")
        return rep

    expected = {b.name: b.at(c.eta) for b in p.blocks}
    if c.method != "sos-epoly":
        raw = p.raw_eta(c.eta)
        if c.raw_eta and tuple(c.raw_eta) != tuple(raw):
            rep.fail("raw_eta does not match eta under the null-constraint lift")
        direct = _cstw_blocks(t, raw)
        for name in ("R", "X"):
            if direct[name] != expected[name]:
                rep.fail(f"block {name}: LMI assembly disagrees with the CSTW definition")
        if c.method == "cstw-modified":
            Xf = direct["_X_full"]
            for j, v in enumerate(null_vectors(t, order.p), start=1):
                if any(Xf.dot(v)):
                    rep.fail(f"X A^{j - 1} e != 0")
            rep.checks.append("null vectors")

    for b in c.blocks:
        M = _check_factor(b, rep)
        if M is None:
            continue
        if M != expected[b.name]:
            rep.fail(f"block {b.name}: P^T L D L^T P differs from the block at eta")
            continue
        rep.checks.append(f"block {b.name} reassembly")
        if c.method == "sos-epoly":
            F = Poly(parse_rat(x) for x in p.meta["F"])
            if quadratic_form_poly(M) != F:
                rep.fail("yhat^T M yhat differs from F(y)")
            else:
                rep.checks.append("Gram identity")
    return rep


def certify_from_eta(t: ButcherTableau, method: str, eta: Sequence, beta=None,
                     normalization: str = "monic", config: dict | None = None) -> Certificate:
    """Certificate for a given exact multiplier vector (e.g. a published one)."""
    p = build_lmi(t, method, beta, normalization)
    return verify_exact(p, [Fraction(x) for x in eta], tableau=t, beta=beta,
                        normalization=normalization,
                        analyticity=_analyticity_text(t, beta), order=tall_tree_order(t).p,
                        config=config)


def eta_digits(c: Certificate) -> int:
    """Largest number of decimal digits in any D denominator."""
    return max((len(str(Fraction(d).denominator)) for b in c.blocks for d in b.D
                if not isinstance(d, QuadExt)), default=0)
