"""E-polynomials and the Gram data of their sum-of-squares LMI.

On the boundary ray ``z = -y e^{-i alpha}`` (``y >= 0``) of the sector
``|arg(-z)| <= alpha`` we have ``z^k conj(z)^l = (-y)^{k+l} e^{-i(k-l) alpha}``,
so with ``beta = cos(alpha)``

    E(y; beta) = |D(z)|^2 - |N(z)|^2
               = sum_{k,l} (d_k d_l - n_k n_l) (-y)^{k+l} T_{|k-l|}(beta)

where ``T_n`` is the Chebyshev polynomial of the first kind.  At ``beta = 0``
this is ``|D(iy)|^2 - |N(iy)|^2``.

E is only defined up to a positive factor (N and D can be rescaled together),
and a Gram certificate ``eta`` is only valid for the scale it was computed at.
``normalization`` selects the scale:

* ``"natural"``: N, D as returned by :func:`rkcert.butcher.stability_function` (``D(0) = 1``);
* ``"monic"``: leading y-coefficient equal to +1 or -1;
* ``"primitive"``: integer coefficients with content 1.

The factor is always positive, so the sign of E is preserved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .butcher import OrderReport, StabilityFunction
from .exactnum import BiPoly, Matrix, Poly, rationalize

__all__ = [
    "EPolynomial", "GramData", "NotDivisible", "NORMALIZATIONS", "chebyshev_T",
    "e_polynomial", "factor_even_monomial", "gram_data", "gram_index", "gram_pairs",
    "quadratic_form_poly", "sos_lmi_matrix",
]

NORMALIZATIONS = ("natural", "monic", "primitive")


class NotDivisible(ArithmeticError):
    """The E-polynomial lacks the monomial factor that the claimed order guarantees."""

    def __init__(self, kappa: int, low: list):
        super().__init__(f"not-divisible: E(y) is not divisible by y^{2 * kappa}; "
                         f"lowest coefficients {[str(c) for c in low]}")
        self.kappa = kappa
        self.low = low


def chebyshev_T(n: int) -> Poly:
    a, b = Poly([1]), Poly([0, 1])
    if n == 0:
        return a
    for _ in range(n - 1):
        a, b = b, Poly([0, 2]) * b - a
    return b


@dataclass(frozen=True)
class EPolynomial:
    """``raw`` is a Poly in y (right-angle).  In sector mode E is even in y and
    ``raw`` is stored in ``u = y^2``: a Poly at fixed beta, else a BiPoly in (u, beta).

    ``beta`` is None for the bivariate form, otherwise the fixed value of
    cos(alpha) (``0`` for right-angle mode).
    """
    raw: object
    mode: str  # "right-angle" | "sector"
    beta: Fraction | None
    normalization: str = "natural"
    kappa: int = 0

    @property
    def is_bivariate(self) -> bool:
        return isinstance(self.raw, BiPoly)

    def at(self, beta) -> EPolynomial:
        """Specialize a bivariate E to a fixed beta."""
        if not self.is_bivariate:
            raise ValueError("E-polynomial is already univariate")
        return EPolynomial(self.raw.at_beta(Fraction(beta)), "sector", Fraction(beta),
                           self.normalization)

    def coefficients(self) -> list:
        if self.is_bivariate:
            return [self.raw.coeff_y(k) for k in range(self.raw.degree_y + 1)]
        return list(self.raw.coeffs)


def _rational_coeffs(p: Poly, n: int) -> list[Fraction]:
    # N and D of a Q(sqrt r) scheme may carry irrational parts; E never does for the
    # fixtures we ship, but the products are formed in the field and checked afterwards.
    return [p[k] for k in range(n)]


def _scale_factor(lead, coeffs: list, normalization: str) -> Fraction:
    # always positive: a sign flip would turn a certificate for -E into one for E
    if normalization == "natural":
        return Fraction(1)
    if lead == 0:
        return Fraction(1)
    if normalization == "monic":
        return 1 / abs(Fraction(lead))
    if normalization == "primitive":
        den = 1
        for c in coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = [int(c * den) for c in coeffs]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        return Fraction(den, g or 1)
    raise ValueError(f"unknown normalization {normalization!r}; expected one of {NORMALIZATIONS}")


def e_polynomial(sf: StabilityFunction, mode: str = "right-angle", beta=None,
                 normalization: str = "natural") -> EPolynomial:
    """Exact E-polynomial of ``S = N/D``.

    ``mode="right-angle"`` gives a Poly in y.  ``mode="sector"`` gives the
    bivariate polynomial in (y, beta) when ``beta`` is None and its
    specialization otherwise; a fixed-beta E is normalized after specializing.
    """
    n = max(sf.N.degree, sf.D.degree) + 1
    N = _rational_coeffs(sf.N, n)
    D = _rational_coeffs(sf.D, n)
    if mode == "right-angle":
        if beta not in (None, 0):
            raise ValueError("right-angle mode is beta = 0")
        out = [Fraction(0)] * (2 * n)
        for k in range(n):
            for l in range(k % 2, n, 2):
                c = D[k] * D[l] - N[k] * N[l]
                # T_{|k-l|}(0) = (-1)^{(k-l)/2}, (-1)^{k+l} = 1
                if ((k - l) // 2) % 2:
                    c = -c
                out[k + l] = out[k + l] + c
        poly = Poly(rationalize(c) for c in out)
        f = _scale_factor(poly.lead() if poly.coeffs else 0, list(poly.coeffs), normalization)
        return EPolynomial(poly * f, "right-angle", Fraction(0), normalization)
    if mode != "sector":
        raise ValueError(f"unknown mode {mode!r}")
    terms: dict = {}
    cheb = [chebyshev_T(j) for j in range(n)]
    for k in range(n):
        for l in range(n):
            c = D[k] * D[l] - N[k] * N[l]
            if not c:
                continue
            if (k + l) % 2:
                c = -c
            for j, t in enumerate(cheb[abs(k - l)].coeffs):
                if t:
                    key = (k + l, j)
                    terms[key] = terms.get(key, Fraction(0)) + c * t
    bi = BiPoly(terms).rational()
    if beta is not None:
        # normalize after specializing, so a beta-dependent leading term is fine
        poly = bi.at_beta(Fraction(beta))
        f = _scale_factor(poly.lead() if poly.coeffs else 0, list(poly.coeffs), normalization)
        return EPolynomial(poly * f, "sector", Fraction(beta), normalization)
    top = bi.degree_y
    lead_poly = bi.coeff_y(top) if top >= 0 else Poly()
    if normalization == "monic" and lead_poly.degree > 0:
        raise ValueError("monic normalization needs a beta-independent leading y-coefficient")
    all_coeffs = list(bi.terms.values())
    f = _scale_factor(lead_poly[0] if top >= 0 else 0, all_coeffs, normalization)
    bi = BiPoly({k: v * f for k, v in bi.terms.items()})
    return EPolynomial(bi, "sector", None, normalization)


def factor_even_monomial(e: EPolynomial, order: OrderReport | int | None = None) -> Poly:
    """The F(y) of the Gram LMI.

    Right-angle: ``F = y^{-2 kappa} E`` with ``kappa = floor(p/2) + 1`` when the
    order was verified exactly, and ``kappa = 1`` otherwise (``order`` None or 0).
    Sector: ``F(y) = y^{-2v} E(y^2; beta)`` where ``y^{2v}`` is the largest even
    monomial dividing ``E(y^2)`` (v >= 1).  For beta > 0 this is ``y^{-2} E(y^2)``;
    at beta = 0 stripping the whole monomial keeps the Gram LMI strictly feasible.
    """
    if e.is_bivariate:
        raise ValueError("specialize beta before factoring")
    E = e.raw
    if E.is_zero():
        return Poly()
    if e.mode == "sector":
        E2 = E.substitute_square()
        return E2.shift_down(max(2, E2.valuation()))
    p = order.p if isinstance(order, OrderReport) else (order or 0)
    kappa = p // 2 + 1 if p > 0 else 1
    low = [E[k] for k in range(2 * kappa)]
    if any(c != 0 for c in low):
        raise NotDivisible(kappa, low)
    return E.shift_down(2 * kappa)


def gram_pairs(m: int) -> list[tuple[int, int]]:
    """1-based (i, j) with ``1 <= i <= m-2``, ``i+2 <= j <= m``, in basis order."""
    return [(i, j) for i in range(1, m - 1) for j in range(i + 2, m + 1)]


def gram_index(m: int, i: int, j: int) -> int:
    """1-based position of N_{ij} in the basis."""
    return m * (i - 1) - i * (i + 3) // 2 + j


def _basis_matrix(m: int, i: int, j: int) -> Matrix:
    rows = [[Fraction(0)] * m for _ in range(m)]
    a, b = (i + j) // 2, (i + j + 1) // 2
    rows[i - 1][j - 1] += 1
    rows[j - 1][i - 1] += 1
    rows[a - 1][b - 1] -= 1
    rows[b - 1][a - 1] -= 1
    return Matrix(rows)


@dataclass(frozen=True)
class GramData:
    m: int
    P: Matrix
    basis: tuple

    @property
    def d(self) -> int:
        return len(self.basis)


def gram_data(F: Poly) -> GramData:
    """P and the null-form basis for ``F(y) = yhat^T (P + sum eta_l N_l) yhat``."""
    deg = F.degree
    if F.is_zero():
        deg = 0
    if deg % 2:
        raise ValueError(f"odd-degree polynomial (degree {deg}) has no Gram representation")
    m = deg // 2 + 1
    rows = [[Fraction(0)] * m for _ in range(m)]
    for k in range(m):
        rows[k][k] = F[2 * k]
        if k + 1 < m:
            h = F[2 * k + 1] / 2
            rows[k][k + 1] = h
            rows[k + 1][k] = h
    basis = tuple(_basis_matrix(m, i, j) for i, j in gram_pairs(m))
    return GramData(m, Matrix(rows), basis)


def sos_lmi_matrix(g: GramData, eta) -> Matrix:
    """``P + sum eta_l N_l``."""
    if len(eta) != g.d:
        raise ValueError(f"expected {g.d} multipliers, got {len(eta)}")
    rows = [list(r) for r in g.P.rows]
    for (i, j), x in zip(gram_pairs(g.m), eta):
        if not x:
            continue
        a, b = (i + j) // 2, (i + j + 1) // 2
        rows[i - 1][j - 1] += x
        rows[j - 1][i - 1] += x
        rows[a - 1][b - 1] -= x
        rows[b - 1][a - 1] -= x
    return Matrix(rows)


def quadratic_form_poly(M: Matrix) -> Poly:
    """``yhat^T M yhat`` as a polynomial in y."""
    n = M.nrows
    out = [Fraction(0)] * (2 * n - 1)
    for i in range(n):
        for j in range(n):
            out[i + j] += M[i, j]
    return Poly(out)
