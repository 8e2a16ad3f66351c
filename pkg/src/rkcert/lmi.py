"""Assembly of the two LMI feasibility problems.

Both problems have the shape ``F(eta) = base + sum_j eta_j basis_j >= 0`` over
a block-diagonal symmetric matrix.  Blocks are kept separate so that
verification can factor each one on its own.

* ``sos``: one block, the Gram matrix of F(y) (``P + sum eta_l N_l``).
* ``cstw``: blocks R and X with ``R = B + sum eta_ij Rb_ij`` and
  ``X = R A + A^T R - b b^T``.
* ``cstw-modified``: as ``cstw`` but with ``X A^{j-1} e = 0`` (j <= p/2)
  eliminated exactly; the variables are coordinates on the remaining kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .butcher import ButcherTableau, KrylovInfo, OrderReport, krylov_M, tall_tree_order
from .epoly import GramData, gram_pairs
from .exactnum import Matrix, QuadExt, _rref, format_scalar, parse_scalar, solve_exact

__all__ = [
    "Block", "LmiProblem", "InconsistentNullConstraints", "assemble_sos_lmi",
    "assemble_cstw_lmi", "affine_dimension_report", "cstw_pairs", "null_vectors",
]

PROVENANCES = ("sos", "cstw", "cstw-modified")


class InconsistentNullConstraints(ArithmeticError):
    """``X(eta) A^{j-1} e = 0`` has no solution: the CSTW LMI is infeasible for this order."""


@dataclass(frozen=True)
class Block:
    name: str
    base: Matrix
    basis: tuple

    def at(self, eta: Sequence) -> Matrix:
        if len(eta) != len(self.basis):
            raise ValueError(f"block {self.name}: expected {len(self.basis)} values, got {len(eta)}")
        rows = [list(r) for r in self.base.rows]
        n = len(rows)
        for x, N in zip(eta, self.basis):
            if not x:
                continue
            for i in range(n):
                Ni = N.rows[i]
                ri = rows[i]
                for j in range(n):
                    if Ni[j]:
                        ri[j] = ri[j] + x * Ni[j]
        return Matrix(rows)

    @property
    def size(self) -> int:
        return self.base.nrows


@dataclass(frozen=True)
class LmiProblem:
    """``F(eta) = base + sum_j eta_j basis_j`` split into symmetric blocks.

    ``lift`` maps the problem variables back to the raw ``eta_ij`` of the
    CSTW parameterization (``eta_raw = particular + sum_k t_k kernel_k``);
    it is None for the SOS problem and for unmodified CSTW.
    """
    blocks: tuple
    variable_names: tuple
    provenance: str
    lift: tuple | None = None
    raw_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        d = len(self.variable_names)
        for b in self.blocks:
            if len(b.basis) != d:
                raise ValueError(f"block {b.name} has {len(b.basis)} basis matrices, expected {d}")
            for M in (b.base,) + tuple(b.basis):
                if M.shape != (b.size, b.size) or not M.is_symmetric():
                    raise ValueError(f"block {b.name}: matrices must be symmetric {b.size}x{b.size}")

    @property
    def d(self) -> int:
        return len(self.variable_names)

    @property
    def base(self) -> Matrix:
        return Matrix.block_diag([b.base for b in self.blocks])

    @property
    def basis(self) -> list[Matrix]:
        return [Matrix.block_diag([b.basis[j] for b in self.blocks]) for j in range(self.d)]

    def evaluate(self, eta: Sequence) -> list[Matrix]:
        """Exact block matrices at ``eta``."""
        return [b.at(eta) for b in self.blocks]

    def raw_eta(self, eta: Sequence) -> tuple:
        if self.lift is None:
            return tuple(eta)
        part, kernel = self.lift
        return tuple(p + sum((t * k[i] for t, k in zip(eta, kernel)), Fraction(0))
                     for i, p in enumerate(part))

    def to_dict(self) -> dict:
        mat = lambda M: [[format_scalar(x) for x in r] for r in M.rows]  # noqa: E731
        out = {
            "provenance": self.provenance,
            "variable_names": list(self.variable_names),
            "blocks": [{"name": b.name, "base": mat(b.base), "basis": [mat(N) for N in b.basis]}
                       for b in self.blocks],
        }
        rad = _radicand(self)
        if rad is not None:
            out["radicand"] = rad
        if self.lift is not None:
            part, kernel = self.lift
            out["lift"] = {"raw_names": list(self.raw_names),
                           "particular": [format_scalar(x) for x in part],
                           "kernel": [[format_scalar(x) for x in k] for k in kernel]}
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, d: dict) -> LmiProblem:
        r = d.get("radicand")
        mat = lambda rows: Matrix([[parse_scalar(x, r) for x in row] for row in rows])  # noqa: E731
        blocks = tuple(Block(b["name"], mat(b["base"]), tuple(mat(N) for N in b["basis"]))
                       for b in d["blocks"])
        lift, raw = None, ()
        if "lift" in d:
            L = d["lift"]
            lift = (tuple(parse_scalar(x, r) for x in L["particular"]),
                    tuple(tuple(parse_scalar(x, r) for x in k) for k in L["kernel"]))
            raw = tuple(L["raw_names"])
        return cls(blocks, tuple(d["variable_names"]), d["provenance"], lift, raw, d.get("meta", {}))


def _radicand(p: LmiProblem) -> int | None:
    for b in p.blocks:
        for M in (b.base,) + tuple(b.basis):
            for r in M.rows:
                for x in r:
                    if isinstance(x, QuadExt):
                        return x.r
    return None


def assemble_sos_lmi(g: GramData, meta: dict | None = None) -> LmiProblem:
    """``P + sum_l eta_l N_l`` with d = (m-1)(m-2)/2 variables."""
    names = tuple(f"eta_{l}" for l in range(1, g.d + 1))
    pairs = {f"eta_{l}": f"N_{i},{j}" for l, (i, j) in enumerate(gram_pairs(g.m), start=1)}
    m = dict(meta or {})
    m.setdefault("m", g.m)
    m.setdefault("pairs", pairs)
    return LmiProblem((Block("F", g.P, tuple(g.basis)),), names, "sos", meta=m)


def cstw_pairs(s: int) -> list[tuple[int, int]]:
    """1-based (i, j), i < j, row-major."""
    return [(i, j) for i in range(1, s) for j in range(i + 1, s + 1)]


def _Rb(s: int, i: int, j: int) -> Matrix:
    rows = [[Fraction(0)] * s for _ in range(s)]
    rows[i - 1][i - 1] = rows[j - 1][j - 1] = Fraction(1)
    rows[i - 1][j - 1] = rows[j - 1][i - 1] = Fraction(-1)
    return Matrix(rows)


def _sym_AT(R: Matrix, A: Matrix) -> Matrix:
    """``R A + A^T R``."""
    RA = R @ A
    return RA + RA.T


def _conj(M: Matrix, K: Matrix) -> Matrix:
    return K.T @ M @ K


def null_vectors(t: ButcherTableau, p: int) -> list[tuple]:
    """``A^{j-1} e`` for j = 1..floor(p/2)."""
    out, v = [], t.e
    for _ in range(p // 2):
        out.append(tuple(v))
        v = t.A.dot(v)
    return out


def assemble_cstw_lmi(t: ButcherTableau, modified: bool = True,
                      order: OrderReport | int | None = None,
                      M: Matrix | KrylovInfo | None = None) -> LmiProblem:
    """CSTW LMI in the R and X blocks.

    ``order`` defaults to the verified tall-tree order, ``M`` to the Krylov
    matrix of the tableau (identity when the Krylov space is full).
    """
    s = t.s
    A = t.A
    if order is None:
        order = tall_tree_order(t)
    p = order.p if isinstance(order, OrderReport) else int(order)
    if M is None:
        M = krylov_M(t)
    if isinstance(M, KrylovInfo):
        M = None if M.full else M.M
    elif M is not None and M == Matrix.identity(s):
        M = None

    B = Matrix.diag(list(t.b))
    bbT = Matrix([[bi * bj for bj in t.b] for bi in t.b])
    X0 = _sym_AT(B, A) - bbT
    pairs = cstw_pairs(s)
    raw_names = tuple(f"eta_{i}{j}" if s < 10 else f"eta_{i},{j}" for i, j in pairs)
    Rb = [_Rb(s, i, j) for i, j in pairs]
    Xb = [_sym_AT(R, A) for R in Rb]

    meta = {"s": s, "p": p, "krylov_r": None if M is None else M.ncols}
    lift = None
    names = raw_names
    R_base, X_base, R_basis, X_basis = B, X0, Rb, Xb
    if modified:
        if p < 2:
            raise ValueError("modified CSTW needs an exactly verified order p >= 2")
        vs = null_vectors(t, p)
        rows, rhs = [], []
        for v in vs:
            x0v = X0.dot(v)
            cols = [Xk.dot(v) for Xk in Xb]
            for i in range(s):
                rows.append([c[i] for c in cols])
                rhs.append(-x0v[i])
        sol = solve_exact(Matrix(rows), rhs)
        if sol is None:
            raise InconsistentNullConstraints(
                f"X A^(j-1) e = 0 (j <= {p // 2}) has no solution in eta")
        part, kernel = sol
        lift = (tuple(part), tuple(tuple(k) for k in kernel))
        R_base = _combine(B, Rb, part, s)
        X_base = _combine(X0, Xb, part, s)
        R_basis = [_combine(None, Rb, k, s) for k in kernel]
        X_basis = [_combine(None, Xb, k, s) for k in kernel]
        free = [c for c in range(len(pairs)) if c not in _rref([list(r) for r in rows])[1]]
        names = tuple(raw_names[c] for c in free)
        meta["null_vectors"] = len(vs)
        meta["raw_dimension"] = len(pairs)
    if M is not None:
        R_base, X_base = _conj(R_base, M), _conj(X_base, M)
        R_basis = [_conj(N, M) for N in R_basis]
        X_basis = [_conj(N, M) for N in X_basis]
    blocks = (Block("R", R_base, tuple(R_basis)), Block("X", X_base, tuple(X_basis)))
    return LmiProblem(blocks, names, "cstw-modified" if modified else "cstw", lift,
                      raw_names if modified else (), meta)


def _combine(base: Matrix | None, mats: Sequence[Matrix], coeffs: Sequence, n: int) -> Matrix:
    rows = [list(r) for r in base.rows] if base is not None else [[Fraction(0)] * n for _ in range(n)]
    for c, N in zip(coeffs, mats):
        if not c:
            continue
        for i in range(n):
            for j in range(n):
                if N.rows[i][j]:
                    rows[i][j] = rows[i][j] + c * N.rows[i][j]
    return Matrix(rows)


def affine_dimension_report(p: LmiProblem) -> int:
    """Free variables left after exact elimination of the equality constraints."""
    return p.d
