"""Butcher tableaus and their exact linear-stability structure."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exactnum import (Matrix, Poly, QuadExt, det_exact, format_scalar, interpolate,
                       parse_scalar, poly_gcd, rank_exact, sign)

__all__ = [
    "ButcherTableau", "StabilityFunction", "OrderReport", "KrylovInfo", "Analyticity",
    "load_tableau", "stability_function", "stability_polynomials", "tall_tree_order", "krylov_M",
    "analytic_in_sector", "routh_hurwitz_stable",
]


@dataclass(frozen=True)
class ButcherTableau:
    A: Matrix
    b: tuple
    name: str = ""
    radicand: int | None = None
    declared_order: int | None = None
    # True when entries were read from decimal strings (Strategy-1 ingestion)
    from_decimals: bool = False

    def __post_init__(self):
        s = len(self.b)
        if self.A.shape != (s, s):
            raise ValueError(f"A has shape {self.A.shape}, b has length {s}")
        for x in list(self.b) + [x for r in self.A.rows for x in r]:
            if isinstance(x, QuadExt) and self.radicand not in (None, x.r):
                raise ValueError("tableau mixes radicands")

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def e(self) -> tuple:
        return tuple(Fraction(1) for _ in range(self.s))

    @property
    def c(self) -> tuple:
        return self.A.dot(self.e)

    def is_lower_triangular(self) -> bool:
        return self.A.is_lower_triangular()

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "s": self.s,
            "A": [[format_scalar(x) for x in r] for r in self.A.rows],
            "b": [format_scalar(x) for x in self.b],
        }
        if self.radicand is not None:
            d["radicand"] = self.radicand
        if self.declared_order is not None:
            d["declared_order"] = self.declared_order
        return d

    @classmethod
    def from_dict(cls, d: dict, allow_decimal: bool = False) -> ButcherTableau:
        r = d.get("radicand")
        A = [[parse_scalar(x, r, allow_decimal) for x in row] for row in d["A"]]
        b = [parse_scalar(x, r, allow_decimal) for x in d["b"]]
        if "s" in d and d["s"] != len(b):
            raise ValueError(f"declared s={d['s']} but b has {len(b)} entries")
        if r is not None:
            A = [[x if isinstance(x, QuadExt) else QuadExt(x, 0, r) for x in row] for row in A]
            b = [x if isinstance(x, QuadExt) else QuadExt(x, 0, r) for x in b]
        decimals = any(isinstance(x, str) and any(ch in x for ch in ".eE")
                       for x in list(d["b"]) + [y for row in d["A"] for y in row])
        return cls(Matrix(A), tuple(b), d.get("name", ""), r, d.get("declared_order"), decimals)

    def sha256(self) -> str:
        """Hash of the canonical exact JSON form (name excluded)."""
        d = self.to_dict()
        d.pop("name", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_b(self, b) -> ButcherTableau:
        return ButcherTableau(self.A, tuple(b), self.name, self.radicand, self.declared_order,
                              self.from_decimals)


def load_tableau(path, allow_decimal: bool = False) -> ButcherTableau:
    with open(Path(path)) as fh:
        return ButcherTableau.from_dict(json.load(fh), allow_decimal=allow_decimal)


@dataclass(frozen=True)
class StabilityFunction:
    N: Poly
    D: Poly
    degenerate: bool
    reduced: bool = True

    def series(self, order: int) -> list:
        """Taylor coefficients of N/D about z = 0 up to ``z**order``."""
        out = []
        d0 = self.D[0]
        for k in range(order + 1):
            acc = self.N[k]
            for j in range(1, k + 1):
                acc = acc - self.D[j] * out[k - j]
            out.append(acc / d0)
        return out


def _shifted_matrix(t: ButcherTableau, with_b: bool, z=None) -> list[list]:
    """``I - zA (+ z e b^T)`` with polynomial entries, or evaluated at a scalar z."""
    s = t.s
    rows = []
    for i in range(s):
        row = []
        for j in range(s):
            lin = -t.A[i, j] + (t.b[j] if with_b else 0)
            if z is None:
                row.append(Poly([1 if i == j else 0, lin]))
            else:
                row.append((1 if i == j else 0) + z * lin)
        rows.append(row)
    return rows


def stability_polynomials(t: ButcherTableau, symbolic: bool = False) -> tuple[Poly, Poly]:
    """Unreduced ``(N, D)``.

    The default route evaluates both determinants exactly at z = 0..s and
    interpolates; ``symbolic=True`` runs Bareiss on polynomial entries.
    """
    if symbolic:
        return det_exact(_shifted_matrix(t, True)), det_exact(_shifted_matrix(t, False))
    zs = [Fraction(k) for k in range(t.s + 1)]
    N = interpolate(zs, [det_exact(_shifted_matrix(t, True, z)) for z in zs])
    D = interpolate(zs, [det_exact(_shifted_matrix(t, False, z)) for z in zs])
    return N, D


def stability_function(t: ButcherTableau) -> StabilityFunction:
    """``N(z) = det(I - zA + z e b^T)``, ``D(z) = det(I - zA)``, common factors removed."""
    N, D = stability_polynomials(t)
    g = poly_gcd(N, D)
    if g.degree > 0:
        N = N.exact_div(g)
        D = D.exact_div(g)
    # normalize so D(0) = 1
    d0 = D[0]
    if d0 != 1:
        N = N * (1 / d0)
        D = D * (1 / d0)
    degenerate = N.degree <= t.s - 1 and D.degree <= t.s - 1
    return StabilityFunction(N, D, degenerate, True)


@dataclass(frozen=True)
class OrderReport:
    p: int
    residuals: tuple

    @property
    def exact(self) -> bool:
        return all(r == 0 for r in self.residuals[:self.p])


def tall_tree_order(t: ButcherTableau, p_max: int = 12) -> OrderReport:
    """Residuals ``b^T A^{j-1} e - 1/j!`` for j = 1..p_max and the verified order."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    v = t.e
    res = []
    for j in range(1, p_max + 1):
        val = sum((bi * vi for bi, vi in zip(t.b, v)), Fraction(0))
        res.append(val - Fraction(1, math.factorial(j)))
        v = t.A.dot(v)
    p = 0
    while p < len(res) and res[p] == 0:
        p += 1
    return OrderReport(p, tuple(res))


@dataclass(frozen=True)
class KrylovInfo:
    M: Matrix
    r: int
    vectors: tuple  # e, Ae, ..., A^{r-1} e

    @property
    def full(self) -> bool:
        return self.r == self.M.nrows


def krylov_M(t: ButcherTableau) -> KrylovInfo:
    """``[e, Ae, ..., A^{r-1}e]`` with r the first index where A^r e is dependent.

    When ``r == s`` the identity is returned as ``M``.
    """
    vecs = [t.e]
    while len(vecs) < t.s:
        nxt = t.A.dot(vecs[-1])
        if rank_exact(Matrix.from_columns(vecs + [nxt])) == len(vecs):
            break
        vecs.append(nxt)
    r = len(vecs)
    M = Matrix.identity(t.s) if r == t.s else Matrix.from_columns(vecs)
    return KrylovInfo(M, r, tuple(vecs))


def routh_hurwitz_stable(q: Poly) -> bool:
    """Exact test that every root of ``q`` has strictly negative real part."""
    if q.is_zero():
        raise ValueError("zero polynomial")
    n = q.degree
    if n == 0:
        return True
    c = list(reversed(q.coeffs))  # descending powers
    row0 = c[0::2]
    row1 = c[1::2]
    width = len(row0)
    row1 = row1 + [Fraction(0)] * (width - len(row1))
    first = [row0[0], row1[0]]
    prev, cur = row0, row1
    for _ in range(n - 1):
        if sign(cur[0]) == 0:
            return False
        nxt = []
        for k in range(width - 1):
            nxt.append((cur[0] * prev[k + 1] - prev[0] * cur[k + 1]) / cur[0])
        nxt.append(Fraction(0))
        first.append(nxt[0])
        prev, cur = cur, nxt
    signs = [sign(x) for x in first[:n + 1]]
    return all(sg != 0 for sg in signs) and len(set(signs)) == 1


@dataclass(frozen=True)
class Analyticity:
    status: str  # "proved" | "disproved" | "undecided"
    detail: str
    eigenvalues: tuple = field(default=())


def analytic_in_sector(t: ButcherTableau, beta=Fraction(0)) -> Analyticity:
    """Decide whether S(z) has no poles inside the sector with cos(alpha) = beta."""
    beta = Fraction(beta)
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    sf = stability_function(t)
    if sf.D.degree <= 0:
        return Analyticity("proved", "D(z) is constant: S(z) is a polynomial")
    if beta == 0:
        q = sf.D.compose_scale(-1)
        if routh_hurwitz_stable(q):
            return Analyticity("proved", "Routh-Hurwitz: D(z) has no zeros with Re z <= 0")
        return Analyticity("disproved", "Routh-Hurwitz: D(z) has a zero with Re z <= 0")
    if t.is_lower_triangular():
        bad = [i for i, a in enumerate(t.A.diagonal()) if sign(a) < 0]
        if bad:
            return Analyticity("disproved", f"negative diagonal entries at {bad}: poles on the negative real axis")
        return Analyticity("proved", "triangular A with nonnegative diagonal: poles on the positive real axis")
    ev = tuple(complex(x) for x in np.linalg.eigvals(t.A.to_float()))
    return Analyticity("undecided",
                       "full A and alpha < 90 deg: no exact sector test; eigenvalues are advisory (floating point)",
                       ev)
