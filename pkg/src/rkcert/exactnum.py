"""Exact arithmetic: rationals, a quadratic field, dense polynomials and matrices.

Rationals are :class:`fractions.Fraction`.  Elements of Q(sqrt(r)) are
:class:`QuadExt`.  Every routine below is written against the field
operations (``+ - * /``, ``==``) plus :func:`sign`, so it works unchanged on
either scalar type.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

__all__ = [
    "Fraction", "QuadExt", "Poly", "BiPoly", "Matrix", "IndefiniteStructure",
    "RadicandMismatch", "parse_rat", "format_rat", "parse_scalar", "format_scalar",
    "to_float", "sign", "rationalize", "det_exact", "det_cofactor", "rank_exact",
    "nullspace_exact", "solve_exact", "ldl_exact", "is_psd", "LDL", "interpolate", "poly_gcd",
]


class RadicandMismatch(ValueError):
    """Raised when elements of two different quadratic fields are combined."""


class IndefiniteStructure(ArithmeticError):
    """A zero pivot has a nonzero off-diagonal remainder and no usable swap.

    Such a symmetric matrix cannot be positive semidefinite.
    """

    def __init__(self, pivot: int):
        super().__init__(f"indefinite-structure at pivot {pivot}")
        self.pivot = pivot


# ---------------------------------------------------------------------------
# scalars

def _squarefree(r: int) -> bool:
    if r < 2:
        return r in (0, 1)
    k = 2
    while k * k <= r:
        if r % (k * k) == 0:
            return False
        k += 1
    return True


class QuadExt:
    """``rational + irrational * sqrt(radicand)`` with exact Fraction parts."""

    __slots__ = ("a", "b", "r")

    def __init__(self, a=0, b=0, r: int = 2):
        if r < 2 or not _squarefree(r):
            raise ValueError(f"radicand must be a square-free integer >= 2, got {r}")
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.r = r

    def _coerce(self, other) -> QuadExt | None:
        if isinstance(other, QuadExt):
            if other.r != self.r:
                raise RadicandMismatch(f"cannot mix sqrt({self.r}) and sqrt({other.r})")
            return other
        if isinstance(other, Rational):
            return QuadExt(other, 0, self.r)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a + o.a, self.b + o.b, self.r)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.r)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a - o.a, self.b - o.b, self.r)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a * o.a + self.b * o.b * self.r, self.a * o.b + self.b * o.a, self.r)

    __rmul__ = __mul__

    def conjugate(self) -> QuadExt:
        return QuadExt(self.a, -self.b, self.r)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.r

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("QuadExt division by zero")
        num = self * o.conjugate()
        return QuadExt(num.a / n, num.b / n, self.r)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = QuadExt(1, 0, self.r)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.a == other.a and self.b == other.b and (self.r == other.r or self.b == 0)
        if isinstance(other, Rational):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self):
        return hash(self.a) if self.b == 0 else hash((self.a, self.b, self.r))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0 or sa == sb:
            return sa if sa else sb
        if sa == 0:
            return sb
        # opposite signs: the larger magnitude wins
        lhs = self.a * self.a
        rhs = self.b * self.b * self.r
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def __lt__(self, other):
        return sign(self - other) < 0

    def __le__(self, other):
        return sign(self - other) <= 0

    def __gt__(self, other):
        return sign(self - other) > 0

    def __ge__(self, other):
        return sign(self - other) >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.r)

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, r={self.r})"

    def __str__(self):
        if not self.b:
            return format_rat(self.a)
        root = f"{format_rat(self.b)}*sqrt({self.r})"
        return root if not self.a else f"{format_rat(self.a)} + {root}"


def sign(x) -> int:
    """Exact sign of a Fraction, int or QuadExt."""
    if isinstance(x, QuadExt):
        return x.sign()
    return (x > 0) - (x < 0)


def to_float(x) -> float:
    return float(x)


def rationalize(x):
    """Collapse a QuadExt with vanishing irrational part to a Fraction."""
    if isinstance(x, QuadExt):
        if x.b != 0:
            raise ValueError(f"{x!r} is not rational")
        return x.a
    return Fraction(x)


def parse_rat(text, allow_decimal: bool = True) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or (optionally) a decimal string, exactly."""
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise TypeError(f"rationals are serialized as strings, got {type(text).__name__}")
    s = text.strip()
    if not allow_decimal and any(ch in s for ch in ".eE"):
        raise ValueError(f"decimal literal {text!r} not accepted here")
    return Fraction(s)


def format_rat(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_scalar(obj, radicand: int | None = None, allow_decimal: bool = True):
    if isinstance(obj, dict):
        if radicand is None:
            raise ValueError("quadratic-field entry without a tableau-level radicand")
        return QuadExt(parse_rat(obj.get("r", "0"), allow_decimal),
                       parse_rat(obj.get("i", "0"), allow_decimal), radicand)
    return parse_rat(obj, allow_decimal)


def format_scalar(x):
    if isinstance(x, QuadExt):
        if x.b == 0:
            return format_rat(x.a)
        return {"r": format_rat(x.a), "i": format_rat(x.b)}
    return format_rat(x)


def _is_zero(x) -> bool:
    return not x


def _one_like(x):
    if isinstance(x, QuadExt):
        return QuadExt(1, 0, x.r)
    return Fraction(1)


def _zero_like(x):
    if isinstance(x, QuadExt):
        return QuadExt(0, 0, x.r)
    return Fraction(0)


# ---------------------------------------------------------------------------
# polynomials

class Poly:
    """Dense univariate polynomial; ``coeffs[k]`` multiplies ``y**k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [x if isinstance(x, (QuadExt, Fraction)) else Fraction(x) for x in coeffs]
        while c and _is_zero(c[-1]):
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def monomial(cls, k: int, c=1) -> Poly:
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def lead(self):
        return self.coeffs[-1]

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (Rational, QuadExt)):
            return self == Poly([other])
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self[k] + other[k] for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self + (-other)

    def __rsub__(self, other):
        return Poly([other]) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(c * other for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if _is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    def divmod(self, other: Poly) -> tuple[Poly, Poly]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - other.degree, 0)
        lead = other.lead()
        for k in range(len(rem) - 1, other.degree - 1, -1):
            c = rem[k]
            if _is_zero(c):
                continue
            f = c / lead
            q[k - other.degree] = f
            for j, oc in enumerate(other.coeffs):
                rem[k - other.degree + j] = rem[k - other.degree + j] - f * oc
        return Poly(q), Poly(rem)

    def exact_div(self, other: Poly) -> Poly:
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError("polynomial division is not exact")
        return q

    def monic(self) -> Poly:
        return self * (1 / self.lead()) if self.coeffs else self

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def compose_scale(self, factor) -> Poly:
        """p(factor * y)."""
        out, f = [], Fraction(1)
        for c in self.coeffs:
            out.append(c * f)
            f = f * factor
        return Poly(out)

    def substitute_square(self) -> Poly:
        """p(y**2)."""
        out = []
        for c in self.coeffs:
            out.extend([c, Fraction(0)])
        return Poly(out)

    def shift_down(self, k: int) -> Poly:
        """Divide by ``y**k``; the k lowest coefficients must vanish."""
        if any(not _is_zero(c) for c in self.coeffs[:k]):
            raise ArithmeticError(f"polynomial not divisible by y^{k}")
        return Poly(self.coeffs[k:])

    def valuation(self) -> int:
        """Index of the lowest nonzero coefficient (``-1`` for zero)."""
        for k, c in enumerate(self.coeffs):
            if not _is_zero(c):
                return k
        return -1

    def rational(self) -> Poly:
        return Poly(rationalize(c) for c in self.coeffs)

    def __repr__(self):
        return f"Poly({[format_scalar(c) for c in self.coeffs]})"

    def __str__(self):
        return self.show("y")

    def show(self, var: str = "y") -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if _is_zero(c):
                continue
            if isinstance(c, QuadExt):
                cs = f"({c})" if c.b else format_rat(c.a)
            else:
                cs = format_rat(c)
            terms.append(cs if k == 0 else f"{cs}*{var}^{k}")
        return " + ".join(terms)


_GCD_PRIMES = (2305843009213693951, 4611686018427387847, 9223372036854775783)


def _int_coeffs(p: Poly) -> list[int] | None:
    if not all(isinstance(c, Fraction) for c in p.coeffs):
        return None
    den = 1
    for c in p.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return [int(c * den) for c in p.coeffs]


def _gcd_degree_mod(a: list[int], b: list[int], m: int) -> int:
    """Degree of gcd(a, b) over GF(m); both leading coefficients must be units."""
    def trim(v):
        v = [x % m for x in v]
        while v and v[-1] == 0:
            v.pop()
        return v
    a, b = trim(a), trim(b)
    while b:
        inv = pow(b[-1], -1, m)
        r = a[:]
        while len(r) >= len(b):
            f = r[-1] * inv % m
            off = len(r) - len(b)
            for i, c in enumerate(b):
                r[off + i] = (r[off + i] - f * c) % m
            r = trim(r)
            if not r:
                break
        a, b = b, r
    return len(a) - 1


def _coprime_mod_p(p: Poly, q: Poly) -> bool:
    """True if some prime certifies gcd(p, q) = 1 over Q (sound, may be inconclusive)."""
    a, b = _int_coeffs(p), _int_coeffs(q)
    if a is None or b is None:
        return False
    for m in _GCD_PRIMES:
        if a[-1] % m and b[-1] % m:
            # reduction keeps degrees, so a nontrivial rational gcd would survive mod m
            return _gcd_degree_mod(a, b, m) == 0
    return False


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm over the coefficient field."""
    if p.degree > 0 and q.degree > 0 and _coprime_mod_p(p, q):
        return Poly([1])
    a, b = p, q
    while not b.is_zero():
        # monic remainders keep the Fraction sizes in check
        a, b = b.monic(), a.divmod(b)[1]
    return a.monic() if not a.is_zero() else a


def interpolate(xs: Sequence, ys: Sequence) -> Poly:
    """The polynomial of degree < len(xs) through (xs[k], ys[k]) (Newton form)."""
    n = len(xs)
    if n != len(ys) or len(set(xs)) != n:
        raise ValueError("interpolation needs distinct nodes and matching values")
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    out = Poly([coef[-1]])
    for k in range(n - 2, -1, -1):
        out = out * Poly([-xs[k], 1]) + coef[k]
    return out


class BiPoly:
    """Sparse bivariate polynomial: ``{(deg_y, deg_beta): coefficient}``."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if not _is_zero(v)}

    def __add__(self, other: BiPoly) -> BiPoly:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return BiPoly(out)

    def __sub__(self, other: BiPoly) -> BiPoly:
        return self + BiPoly({k: -v for k, v in other.terms.items()})

    def __eq__(self, other):
        return isinstance(other, BiPoly) and self.terms == other.terms

    @property
    def degree_y(self) -> int:
        return max((k[0] for k in self.terms), default=-1)

    def coeff_y(self, k: int) -> Poly:
        """The coefficient of ``y**k`` as a polynomial in beta."""
        d = max((j for (i, j) in self.terms if i == k), default=-1)
        return Poly(self.terms.get((k, j), 0) for j in range(d + 1))

    def at_beta(self, beta) -> Poly:
        out = [Fraction(0)] * (self.degree_y + 1)
        for (i, j), c in self.terms.items():
            out[i] = out[i] + c * beta ** j
        return Poly(out)

    def rational(self) -> BiPoly:
        return BiPoly({k: rationalize(v) for k, v in self.terms.items()})

    def __repr__(self):
        return f"BiPoly({ {k: format_scalar(v) for k, v in sorted(self.terms.items())} })"


# ---------------------------------------------------------------------------
# matrices

class Matrix:
    """Immutable dense matrix over Q or Q(sqrt r)."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable], symmetric: bool = False):
        self.rows = tuple(tuple(x if isinstance(x, (QuadExt, Fraction)) else Fraction(x) for x in r)
                          for r in rows)
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        if any(len(r) != self.ncols for r in self.rows):
            raise ValueError("ragged matrix")
        if symmetric and not self.is_symmetric():
            raise ValueError("matrix flagged symmetric is not symmetric")

    @classmethod
    def zeros(cls, n: int, m: int | None = None) -> Matrix:
        m = n if m is None else m
        return cls([[0] * m for _ in range(n)])

    @classmethod
    def identity(cls, n: int) -> Matrix:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, entries: Sequence) -> Matrix:
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def column(cls, v: Sequence) -> Matrix:
        return cls([[x] for x in v])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence]) -> Matrix:
        return cls([[c[i] for c in cols] for i in range(len(cols[0]))])

    @classmethod
    def block_diag(cls, blocks: Sequence[Matrix]) -> Matrix:
        n = sum(b.nrows for b in blocks)
        m = sum(b.ncols for b in blocks)
        out = [[Fraction(0)] * m for _ in range(n)]
        i0 = j0 = 0
        for b in blocks:
            for i, r in enumerate(b.rows):
                out[i0 + i][j0:j0 + b.ncols] = r
            i0 += b.nrows
            j0 += b.ncols
        return cls(out)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    def diagonal(self) -> tuple:
        return tuple(self.rows[i][i] for i in range(min(self.shape)))

    @property
    def T(self) -> Matrix:
        return Matrix(zip(*self.rows)) if self.rows else self

    def __eq__(self, other):
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __add__(self, other: Matrix) -> Matrix:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: Matrix) -> Matrix:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> Matrix:
        return Matrix([[-a for a in r] for r in self.rows])

    def scale(self, c) -> Matrix:
        return Matrix([[a * c for a in r] for r in self.rows])

    def __mul__(self, c):
        if isinstance(c, Matrix):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other: Matrix) -> Matrix:
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = Fraction(0)
                for a, b in zip(r, c):
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return Matrix(out)

    def dot(self, v: Sequence) -> tuple:
        """Matrix-vector product."""
        out = []
        for r in self.rows:
            acc = Fraction(0)
            for a, x in zip(r, v):
                if a and x:
                    acc = acc + a * x
            out.append(acc)
        return tuple(out)

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and all(
            self.rows[i][j] == self.rows[j][i] for i in range(self.nrows) for j in range(i))

    def is_zero(self) -> bool:
        return all(_is_zero(x) for r in self.rows for x in r)

    def is_lower_triangular(self) -> bool:
        return all(_is_zero(self.rows[i][j]) for i in range(self.nrows) for j in range(i + 1, self.ncols))

    def permuted(self, perm: Sequence[int]) -> Matrix:
        """``P M P^T`` with ``(P M P^T)[i][j] = M[perm[i]][perm[j]]``."""
        return Matrix([[self.rows[pi][pj] for pj in perm] for pi in perm])

    def to_float(self):
        import numpy as np
        return np.array([[float(x) for x in r] for r in self.rows], dtype=float).reshape(self.shape)

    def tolist(self) -> list[list]:
        return [list(r) for r in self.rows]

    def __repr__(self):
        return "Matrix(" + repr([[format_scalar(x) for x in r] for r in self.rows]) + ")"


def _as_rows(M) -> list[list]:
    return [list(r) for r in (M.rows if isinstance(M, Matrix) else M)]


def det_exact(M):
    """Determinant by Bareiss fraction-free elimination.

    Works for scalar entries and for :class:`Poly` entries (exact polynomial
    division at each step).
    """
    rows = _as_rows(M)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return Fraction(1)
    poly = any(isinstance(x, Poly) for r in rows for x in r)
    if poly:
        rows = [[x if isinstance(x, Poly) else Poly([x]) for x in r] for r in rows]
        one = Poly([1])

        def div(a, b):
            return a.exact_div(b)

        def zero(x):
            return x.is_zero()
    else:
        one = Fraction(1)

        def div(a, b):
            return a / b

        zero = _is_zero
    prev = one
    flip = False
    for k in range(n - 1):
        if zero(rows[k][k]):
            for i in range(k + 1, n):
                if not zero(rows[i][k]):
                    rows[k], rows[i] = rows[i], rows[k]
                    flip = not flip
                    break
            else:
                return Poly() if poly else Fraction(0)
        pk = rows[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = div(pk * rows[i][j] - rows[i][k] * rows[k][j], prev)
        prev = pk
    d = rows[n - 1][n - 1]
    return -d if flip else d


def det_cofactor(M):
    """Laplace expansion along the first row (oracle for small matrices)."""
    rows = _as_rows(M)
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return rows[0][0]
    total = Fraction(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * det_cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _rref(rows: list[list]) -> tuple[list[list], list[int]]:
    rows = [list(r) for r in rows]
    nr = len(rows)
    nc = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(nc):
        if r >= nr:
            break
        piv = next((i for i in range(r, nr) if not _is_zero(rows[i][c])), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nr):
            if i != r and not _is_zero(rows[i][c]):
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows, pivots


def rank_exact(M) -> int:
    rows = _as_rows(M)
    if not rows:
        return 0
    return len(_rref(rows)[1])


def nullspace_exact(M) -> list[tuple]:
    """Basis of ``{v : M v = 0}``, one vector per free column of the RREF."""
    rows = _as_rows(M)
    if isinstance(M, Matrix):
        nc = M.ncols
    else:
        nc = len(rows[0]) if rows else 0
    if not rows:
        return [tuple(Fraction(int(i == j)) for i in range(nc)) for j in range(nc)]
    red, pivots = _rref(rows)
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * nc
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -red[r][f]
        basis.append(tuple(v))
    return basis


def solve_exact(M, rhs: Sequence) -> tuple[tuple, list[tuple]] | None:
    """Solve ``M x = rhs``.

    Returns ``(particular, kernel_basis)`` where the particular solution has
    zeros in every free coordinate, or ``None`` if the system is inconsistent.
    """
    rows = _as_rows(M)
    nc = M.ncols if isinstance(M, Matrix) else (len(rows[0]) if rows else 0)
    aug = [r + [b] for r, b in zip(rows, rhs)]
    if not aug:
        units = [tuple(Fraction(int(i == j)) for i in range(nc)) for j in range(nc)]
        return tuple(Fraction(0) for _ in range(nc)), units
    red, pivots = _rref(aug)
    if nc in pivots:
        return None
    x = [Fraction(0)] * nc
    for r, p in enumerate(pivots):
        x[p] = red[r][nc]
    free = [c for c in range(nc) if c not in pivots]
    kernel = []
    for f in free:
        v = [Fraction(0)] * nc
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -red[r][f]
        kernel.append(tuple(v))
    return tuple(x), kernel


class LDL:
    """Result of :func:`ldl_exact`: ``P M P^T = L D L^T``."""

    __slots__ = ("L", "D", "perm")

    def __init__(self, L: Matrix, D: tuple, perm: tuple[int, ...]):
        self.L = L
        self.D = D
        self.perm = perm

    def reassemble(self) -> Matrix:
        """``P^T L D L^T P``, i.e. the original matrix."""
        n = len(self.D)
        LD = Matrix([[self.L[i, k] * self.D[k] for k in range(n)] for i in range(n)])
        PMPt = LD @ self.L.T
        inv = [0] * n
        for i, p in enumerate(self.perm):
            inv[p] = i
        return PMPt.permuted(inv)

    def zero_pivots(self) -> list[int]:
        return [k for k, d in enumerate(self.D) if _is_zero(d)]

    def __repr__(self):
        return f"LDL(D={[format_scalar(d) for d in self.D]}, perm={list(self.perm)})"


def ldl_exact(M: Matrix) -> LDL:
    """Symmetric ``P M P^T = L D L^T`` with unit lower-triangular ``L``.

    Pivots are taken in order.  A zero pivot whose remaining column is also
    zero is kept in place (``D_kk = 0``).  A zero pivot with a nonzero column
    is swapped with the first later nonzero diagonal entry; if there is none,
    :class:`IndefiniteStructure` is raised.
    """
    if not isinstance(M, Matrix):
        M = Matrix(M)
    if not M.is_symmetric():
        raise ValueError("ldl_exact requires a symmetric matrix")
    n = M.nrows
    W = [list(r) for r in M.rows]
    perm = list(range(n))
    L = [[Fraction(0)] * n for _ in range(n)]
    D = []
    for k in range(n):
        if _is_zero(W[k][k]):
            if all(_is_zero(W[i][k]) for i in range(k + 1, n)):
                L[k][k] = Fraction(1)
                D.append(W[k][k])
                continue
            swap = next((i for i in range(k + 1, n) if not _is_zero(W[i][i])), None)
            if swap is None:
                raise IndefiniteStructure(k)
            W[k], W[swap] = W[swap], W[k]
            for r in W:
                r[k], r[swap] = r[swap], r[k]
            L[k], L[swap] = L[swap], L[k]
            for r in L:
                r[k], r[swap] = r[swap], r[k]
            perm[k], perm[swap] = perm[swap], perm[k]
        d = W[k][k]
        D.append(d)
        L[k][k] = Fraction(1)
        inv = 1 / d
        for i in range(k + 1, n):
            if _is_zero(W[i][k]):
                continue
            lik = W[i][k] * inv
            L[i][k] = lik
            for j in range(k + 1, i + 1):
                if not _is_zero(W[k][j]):
                    W[i][j] = W[i][j] - lik * W[k][j]
                    W[j][i] = W[i][j]
        for i in range(k + 1, n):
            W[i][k] = W[k][i] = Fraction(0)
    return LDL(Matrix(L), tuple(D), tuple(perm))


def is_psd(D: Sequence, structure_ok: bool = True) -> bool:
    """True iff every pivot is nonnegative and no indefinite structure was seen."""
    return structure_ok and all(sign(d) >= 0 for d in D)
