"""Certified lower bounds on cos(alpha) for A(alpha)-stability."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .butcher import ButcherTableau, analytic_in_sector, tall_tree_order
from .certify import (Certificate, FailureReport, RoundingLadder, build_lmi, retry_policy,
                      verify_exact)
from .epoly import NotDivisible
from .exactnum import format_rat
from .sdpsolve import SolverOptions, solve_feasibility

__all__ = ["AlphaBound", "NoFeasibleBeta", "alpha_degrees", "bound_alpha", "certify_at"]

log = logging.getLogger(__name__)


class NoFeasibleBeta(RuntimeError):
    """No beta in the search range could be certified."""


def alpha_degrees(beta, digits: int = 5) -> str:
    return f"{math.degrees(math.acos(float(beta))):.{digits}f}"


@dataclass
class AlphaBound:
    beta_star: Fraction
    certificate: Certificate
    sweep_log: list = field(default_factory=list)
    caveat: str | None = None

    @property
    def alpha_star_degrees(self) -> str:
        return alpha_degrees(self.beta_star)

    def to_dict(self) -> dict:
        return {
            "beta_star": format_rat(self.beta_star),
            "alpha_star_degrees": self.alpha_star_degrees,
            "sweep_log": [[format_rat(b), s] for b, s in self.sweep_log],
            "caveat": self.caveat,
        }


def _caveat(t: ButcherTableau, beta: Fraction) -> str | None:
    a = analytic_in_sector(t, beta)
    if a.status == "proved":
        return None
    return (f"analyticity of S(z) in the sector is {a.status}: {a.detail}; "
            "the certificate covers the E-polynomial condition only")


def certify_at(t: ButcherTableau, beta, eta: Sequence | None = None, *,
               normalization: str = "monic", ladder: RoundingLadder | None = None,
               solver_options: SolverOptions | None = None,
               config: dict | None = None) -> Certificate | FailureReport:
    """Exact sector certificate at one beta, from ``eta`` if given, else solved and rounded."""
    beta = Fraction(beta)
    p = build_lmi(t, "sos-epoly", beta, normalization)
    a = analytic_in_sector(t, beta)
    kw = dict(tableau=t, beta=beta, alpha_mode="sector", normalization=normalization,
              analyticity=f"{a.status}: {a.detail}", order=tall_tree_order(t).p,
              config=config)
    if eta is not None:
        return verify_exact(p, [Fraction(x) for x in eta], **kw)
    res = solve_feasibility(p, margin=True, options=solver_options)
    return retry_policy(p, res, ladder=ladder, solver_options=solver_options,
                        certify=lambda e: verify_exact(p, e, **kw))


def bound_alpha(t: ButcherTableau, beta_hi=Fraction(1), beta_lo=Fraction(0),
                tol=Fraction(1, 10 ** 6), *, normalization: str = "monic",
                ladder: RoundingLadder | None = None,
                solver_options: SolverOptions | None = None,
                config: dict | None = None) -> AlphaBound:
    """Bisect on beta; every accepted endpoint carries an exact certificate.

    A candidate is accepted only when it certifies, so the upper end of the
    bracket is always certified and ``beta_star`` is the smallest certified
    beta tried.  Failures at smaller beta are advisory.
    """
    lo, hi, tol = Fraction(beta_lo), Fraction(beta_hi), Fraction(tol)
    if not 0 <= lo <= hi <= 1:
        raise ValueError("need 0 <= beta_lo <= beta_hi <= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    sweep: list[tuple[Fraction, str]] = []

    def attempt(beta: Fraction) -> Certificate | None:
        try:
            out = certify_at(t, beta, normalization=normalization, ladder=ladder,
                             solver_options=solver_options, config=config)
        except NotDivisible as exc:
            sweep.append((beta, f"not-divisible: {exc}"))
            return None
        if isinstance(out, Certificate) and out.verified:
            sweep.append((beta, "certified"))
            return out
        status = out.solver_status if isinstance(out, FailureReport) else "rejected"
        sweep.append((beta, f"not-certified ({status})"))
        log.info("beta %s: %s", beta, sweep[-1][1])
        return None

    best = attempt(lo)
    if best is not None:
        return AlphaBound(lo, best, sweep, _caveat(t, lo))
    best = attempt(hi)
    if best is None:
        raise NoFeasibleBeta(f"beta_hi = {hi} could not be certified")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        c = attempt(mid)
        if c is None:
            lo = mid
        else:
            hi, best = mid, c
    return AlphaBound(hi, best, sweep, _caveat(t, hi))
