"""Nearby rational tableaus that satisfy the tall-tree conditions exactly.

Only b is repaired.  A is rationalized entrywise and then held fixed, except
that for a stiffly accurate scheme (last row of A equal to b) the last row
follows b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .butcher import ButcherTableau, tall_tree_order
from .exactnum import Matrix, solve_exact

__all__ = [
    "InconsistentOrderSystem", "PerturbationReport", "rationalize_tableau",
    "repair_tall_tree", "perturbation_bounds", "order_system",
]


class InconsistentOrderSystem(ArithmeticError):
    """The tall-tree equations have no solution in the unpinned b entries."""


@dataclass(frozen=True)
class PerturbationReport:
    tilde_tableau: ButcherTableau
    eps_A: Fraction | None
    eps_b: Fraction | None
    order_verified: int
    free_variable_policy: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .exactnum import format_rat
        return {
            "tableau": self.tilde_tableau.to_dict(),
            "eps_A": None if self.eps_A is None else format_rat(self.eps_A),
            "eps_b": None if self.eps_b is None else format_rat(self.eps_b),
            "order_verified": self.order_verified,
            "free_variable_policy": self.free_variable_policy,
        }


def rationalize_tableau(t: ButcherTableau, max_den: int) -> ButcherTableau:
    """Entrywise best rational approximation with denominator at most ``max_den``."""
    if t.radicand is not None:
        raise ValueError("rationalize_tableau expects a rational (decimal) tableau")
    lim = lambda x: Fraction(x).limit_denominator(max_den)  # noqa: E731
    A = Matrix([[lim(x) for x in r] for r in t.A.rows])
    b = tuple(lim(x) for x in t.b)
    return ButcherTableau(A, b, t.name, None, t.declared_order)


def _is_stiffly_accurate(t: ButcherTableau) -> bool:
    return tuple(t.A.rows[-1]) == tuple(t.b)


def order_system(A: Matrix, p: int, stiffly_accurate: bool = False) -> list[tuple]:
    """Rows ``v_j = A^{j-1} e`` (j = 1..p) of the linear system ``v_j . b = 1/j!``.

    For stiffly accurate schemes the last component of ``A v`` is ``b . v``,
    which the previous equation fixes to ``1/(j-1)!``; substituting keeps the
    system linear in b.
    """
    s = A.nrows
    v = [Fraction(1)] * s
    rows = [tuple(v)]
    for j in range(2, p + 1):
        nxt = list(A.dot(v))
        if stiffly_accurate:
            nxt[s - 1] = Fraction(1, math.factorial(j - 1))
        v = nxt
        rows.append(tuple(v))
    return rows


def _least_squares_param(x0, K, target) -> list[Fraction]:
    """Exact minimizer t of ``||x0 + K t - target||^2`` (K given as columns)."""
    k = len(K)
    G = [[sum(a * b for a, b in zip(K[i], K[j])) for j in range(k)] for i in range(k)]
    r = [sum(a * (tg - x) for a, tg, x in zip(K[i], target, x0)) for i in range(k)]
    sol = solve_exact(Matrix(G), r)
    if sol is None:
        raise ArithmeticError("singular normal equations")
    return list(sol[0])


def repair_tall_tree(t: ButcherTableau, p: int, pins: Mapping[int, Fraction] | None = None,
                     reference: Sequence | None = None, objective: str = "reference",
                     stiffly_accurate: bool | None = None,
                     original: ButcherTableau | None = None) -> PerturbationReport:
    """Solve the tall-tree conditions of order ``p`` exactly for the unpinned b.

    ``pins`` maps 0-based indices to fixed values.  Remaining freedom is
    chosen to minimize ``||b - reference||_2`` (``objective="reference"``,
    reference defaulting to ``original.b``, else ``t.b``) or the quadrature residuals
    ``b . c^{k-1} - 1/k`` for ``k <= p`` (``objective="quadrature"``).
    ``original`` is the ingested decimal tableau that the eps bounds refer to.
    """
    s = t.s
    pins = {int(k): Fraction(v) for k, v in (pins or {}).items()}
    if stiffly_accurate is None:
        stiffly_accurate = _is_stiffly_accurate(t)
    rows = order_system(t.A, p, stiffly_accurate)
    free = [i for i in range(s) if i not in pins]
    rhs = []
    for j, v in enumerate(rows, start=1):
        rhs.append(Fraction(1, math.factorial(j)) - sum(v[i] * x for i, x in pins.items()))
    Msys = Matrix([[v[i] for i in free] for v in rows])
    sol = solve_exact(Msys, rhs)
    if sol is None:
        raise InconsistentOrderSystem(
            f"tall-tree system of order {p} has no solution in b entries {free}")
    x0, kernel = list(sol[0]), [list(k) for k in sol[1]]

    def assemble(x):
        b = [Fraction(0)] * s
        for i, val in pins.items():
            b[i] = val
        for i, val in zip(free, x):
            b[i] = val
        return b

    policy = {"pinned": {str(i + 1): str(v) for i, v in sorted(pins.items())},
              "solved": [i + 1 for i in free], "kernel_dim": len(kernel),
              "stiffly_accurate": stiffly_accurate}
    if kernel:
        if objective == "reference":
            if reference is None:
                reference = original.b if original is not None else t.b
            ref = [Fraction(x) for x in reference]
            target = [ref[i] for i in free]
            tpar = _least_squares_param(x0, kernel, target)
            x = [a + sum(tp * k[i] for tp, k in zip(tpar, kernel)) for i, a in enumerate(x0)]
        elif objective == "quadrature":
            x = _quadrature_fit(t, p, x0, kernel, free, assemble(x0), stiffly_accurate)
        else:
            raise ValueError(f"unknown objective {objective!r}")
        policy["objective"] = objective
    else:
        x = x0
    b = assemble(x)
    A_rows = [list(r) for r in t.A.rows]
    if stiffly_accurate:
        A_rows[-1] = list(b)
    tilde = ButcherTableau(Matrix(A_rows), tuple(b), t.name, None, p)
    rep = tall_tree_order(tilde, p)
    if rep.p < p:
        raise ArithmeticError(f"repaired tableau verifies only to order {rep.p}")
    eps_A = eps_b = None
    if original is not None:
        eps_A, eps_b = perturbation_bounds(original, tilde)
    return PerturbationReport(tilde, eps_A, eps_b, rep.p, policy)


def _quadrature_fit(t, p, x0, kernel, free, b0, stiffly_accurate):
    """Kernel coordinates minimizing sum_k (b . c^{k-1} - 1/k)^2, exactly."""
    c = list(t.A.dot(t.e))
    if stiffly_accurate:
        # last node is sum(b) = 1 by the first order condition
        c[-1] = Fraction(1)
    res0, cols = [], [[] for _ in kernel]
    for k in range(1, p + 1):
        w = [ci ** (k - 1) for ci in c]
        res0.append(sum(bi * wi for bi, wi in zip(b0, w)) - Fraction(1, k))
        for col, kv in zip(cols, kernel):
            col.append(sum(kv[n] * w[i] for n, i in enumerate(free)))
    tpar = _least_squares_param([Fraction(0)] * p, cols, [-r for r in res0])
    return [a + sum(tp * kv[i] for tp, kv in zip(tpar, kernel)) for i, a in enumerate(x0)]


def perturbation_bounds(original: ButcherTableau, tilde: ButcherTableau) -> tuple[Fraction, Fraction]:
    """Exact ``max |a_ij - ã_ij|`` and ``max |b_i - b̃_i|``."""
    if original.s != tilde.s:
        raise ValueError("tableaus differ in size")
    eA = max(abs(Fraction(a) - Fraction(b)) for ra, rb in zip(original.A.rows, tilde.A.rows)
             for a, b in zip(ra, rb))
    eb = max(abs(Fraction(a) - Fraction(b)) for a, b in zip(original.b, tilde.b))
    return eA, eb
