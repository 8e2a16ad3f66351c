import json
import math
from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkcert.butcher import (ButcherTableau, analytic_in_sector, krylov_M, load_tableau,
                            routh_hurwitz_stable, stability_function, stability_polynomials,
                            tall_tree_order)
from rkcert.exactnum import Matrix, Poly, QuadExt, rank_exact

rats = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@st.composite
def tableaus(draw, s_max=4):
    s = draw(st.integers(1, s_max))
    A = [[draw(rats) for _ in range(s)] for _ in range(s)]
    b = [draw(rats) for _ in range(s)]
    return ButcherTableau(Matrix(A), tuple(b))


ALL_FIXTURES = ["sdirk54", "sdirk32", "hammer_hollingsworth", "backward_euler", "explicit_euler",
                "implicit_midpoint", "ramos_vigo", "skvortsov", "dirk66_perturbed"]


def test_hammer_hollingsworth_stability_function(fx):
    sf = stability_function(fx.hammer_hollingsworth())
    assert sf.N == Poly([1, Q(1, 2), Q(1, 12)])
    assert sf.D == Poly([1, Q(-1, 2), Q(1, 12)])


def test_backward_euler_and_sdirk54(fx):
    sf = stability_function(fx.backward_euler())
    assert (sf.N, sf.D) == (Poly([1]), Poly([1, -1]))
    assert stability_function(fx.sdirk54()).D == Poly([1, Q(-1, 4)]) ** 5


def test_degenerate_flag():
    # the second stage never reaches the output: S(z) = 1/(1 - z)
    t = ButcherTableau(Matrix([[1, 0], [Q(1, 3), Q(1, 2)]]), (Q(1), Q(0)))
    sf = stability_function(t)
    assert sf.degenerate
    assert (sf.N, sf.D) == (Poly([1]), Poly([1, -1]))
    assert not stability_function(ButcherTableau(Matrix([[Q(1, 2)]]), (Q(1),))).degenerate


def test_order_examples(fx):
    rep = tall_tree_order(fx.implicit_midpoint(), 4)
    assert rep.p == 2
    assert rep.residuals[:3] == (0, 0, Q(1, 4) - Q(1, 6))
    assert tall_tree_order(fx.sdirk54()).p >= 4
    assert tall_tree_order(fx.hammer_hollingsworth()).p >= 4
    with pytest.raises(ValueError):
        tall_tree_order(fx.sdirk54(), 0)


def test_krylov_examples(fx):
    k = krylov_M(fx.sdirk32())
    assert k.r == 3 and k.full and k.M == Matrix.identity(3)
    assert krylov_M(fx.explicit_euler()).r == 1
    half = Q(1, 2)
    t = ButcherTableau(Matrix([[half, half], [half, half]]), (half, half))
    assert krylov_M(t).r == 1


def test_analyticity_examples(fx):
    assert analytic_in_sector(fx.sdirk54()).status == "proved"
    assert analytic_in_sector(fx.sdirk54(), Q(1, 2)).status == "proved"
    assert analytic_in_sector(fx.explicit_euler()).status == "proved"
    bad = ButcherTableau(Matrix([[-1]]), (Q(1),))
    assert analytic_in_sector(bad).status == "disproved"
    assert analytic_in_sector(bad, Q(1, 2)).status == "disproved"
    rv = analytic_in_sector(fx.ramos_vigo(), Q(1, 100))
    assert rv.status == "undecided" and len(rv.eigenvalues) == 4
    with pytest.raises(ValueError):
        analytic_in_sector(fx.sdirk54(), Q(2))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_series_matches_exponential(fx, name):
    t = getattr(fx, name)()
    sf = stability_function(t)
    p = tall_tree_order(t).p
    assert sf.N[0] == sf.D[0] == 1
    series = sf.series(p)
    assert series == [Q(1, math.factorial(k)) for k in range(p + 1)]


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_krylov_invariants(fx, name):
    t = getattr(fx, name)()
    k = krylov_M(t)
    vecs = list(k.vectors)
    assert rank_exact(Matrix.from_columns(vecs)) == k.r
    nxt = t.A.dot(vecs[-1])
    assert rank_exact(Matrix.from_columns(vecs + [nxt])) == k.r


@given(tableaus())
def test_interpolation_matches_symbolic_determinants(t):
    assert stability_polynomials(t) == stability_polynomials(t, symbolic=True)


@given(tableaus())
def test_reduced_pair_is_coprime(t):
    from rkcert.exactnum import poly_gcd
    sf = stability_function(t)
    if sf.N.is_zero():
        return
    assert poly_gcd(sf.N, sf.D).degree == 0
    N, D = stability_polynomials(t)
    # N/D unchanged by the reduction
    assert N * sf.D == D * sf.N


@given(st.lists(st.integers(-9, 9), min_size=2, max_size=7))
def test_routh_hurwitz_against_roots(c):
    q = Poly([Q(x) for x in c])
    if q.is_zero() or q.degree < 1:
        return
    roots = np.roots([float(x) for x in reversed(q.coeffs)])
    re = roots.real
    if np.any(np.abs(re) < 1e-7):
        return  # numerically ambiguous
    assert routh_hurwitz_stable(q) == bool(np.all(re < 0))


def test_tableau_json_round_trip(tmp_path, fx):
    for t in (fx.sdirk54(), fx.ramos_vigo()):
        path = tmp_path / "t.json"
        path.write_text(json.dumps(t.to_dict()))
        u = load_tableau(path)
        assert u.A == t.A and u.b == t.b and u.sha256() == t.sha256()


def test_tableau_validation():
    with pytest.raises(ValueError):
        ButcherTableau(Matrix([[1, 0], [0, 1]]), (Q(1),))
    with pytest.raises(ValueError):
        ButcherTableau(Matrix([[QuadExt(1, 1, 2)]]), (QuadExt(1, 1, 3),), radicand=2)
    with pytest.raises(ValueError):
        ButcherTableau.from_dict({"s": 2, "A": [["1"]], "b": ["1"]})
    with pytest.raises(ValueError):
        ButcherTableau.from_dict({"A": [["0.5"]], "b": ["1"]}, allow_decimal=False)
