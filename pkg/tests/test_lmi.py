from fractions import Fraction as Q

import pytest
from hypothesis import given, strategies as st

from rkcert.butcher import ButcherTableau, stability_function, tall_tree_order
from rkcert.epoly import e_polynomial, factor_even_monomial, gram_data
from rkcert.exactnum import Matrix, QuadExt
from rkcert.lmi import (InconsistentNullConstraints, LmiProblem, affine_dimension_report,
                        assemble_cstw_lmi, assemble_sos_lmi, cstw_pairs, null_vectors)

M = lambda rows: Matrix([[Q(x) for x in r] for r in rows])  # noqa: E731


def test_sdirk32_modified_matches_hand_elimination(fx):
    p = assemble_cstw_lmi(fx.sdirk32())
    assert p.variable_names == ("eta_13",)
    R, X = p.blocks
    assert R.base == M([[4, -3, 0], [-3, 4, -2], [0, -2, 3]])
    assert R.basis == (M([[1, 0, -1], [0, 0, 0], [-1, 0, 1]]),)
    assert X.base == M([[4, -5, 1], [-5, 11, -6], [1, -6, 5]])
    assert X.basis == (M([[0, 1, -1], [1, 0, -1], [-1, -1, 2]]),)
    # eta_12 and eta_23 are pinned by the null-vector constraint
    raw = dict(zip(p.raw_names, p.raw_eta([Q(7, 5)])))
    assert raw == {"eta_12": 3, "eta_13": Q(7, 5), "eta_23": 2}


def test_dimension_report(fx):
    assert affine_dimension_report(assemble_cstw_lmi(fx.sdirk32(), modified=False)) == 3
    assert affine_dimension_report(assemble_cstw_lmi(fx.sdirk32())) == 1
    p = assemble_cstw_lmi(fx.sdirk54())
    assert p.d == 3 and p.meta["raw_dimension"] == 10


def test_hammer_hollingsworth(fx):
    t = fx.hammer_hollingsworth()
    p = assemble_cstw_lmi(t)
    assert p.d == 0
    half = QuadExt(Q(1, 2), 0, 3)
    R, X = p.evaluate([])
    assert R == Matrix([[half, 0], [0, half]])
    assert all(x == 0 for r in X.rows for x in r)
    e, Ae = null_vectors(t, 4)
    # unmodified: X(eta) = -(sqrt3/3) eta diag(1, -1); X(0) = 0 has e and Ae in its kernel
    u = assemble_cstw_lmi(t, modified=False)
    assert u.blocks[1].basis[0] == Matrix([[QuadExt(0, Q(-1, 3), 3), 0], [0, QuadExt(0, Q(1, 3), 3)]])
    X0 = u.evaluate([0])[1]
    assert all(x == 0 for x in X0.dot(e)) and all(x == 0 for x in X0.dot(Ae))


@pytest.mark.parametrize("name", ["sdirk32", "sdirk54", "hammer_hollingsworth", "ramos_vigo",
                                  "skvortsov", "dirk66_perturbed"])
@given(data=st.data())
def test_modified_problem_keeps_constraints(fx, name, data):
    t = getattr(fx, name)()
    p = _cached(t, name)
    eta = data.draw(st.lists(st.fractions(min_value=-50, max_value=50, max_denominator=9),
                             min_size=p.d, max_size=p.d))
    R, X = p.evaluate(eta)
    assert R.dot(t.e) == tuple(t.b)  # R e = b holds for every eta
    for v in null_vectors(t, p.meta["p"]):
        assert all(x == 0 for x in X.dot(v))
    # X computed from its definition with the lifted raw eta
    raw = p.raw_eta(eta)
    u = _cached(t, name, modified=False)
    Ru, Xu = u.evaluate(raw)
    assert (Ru, Xu) == (R, X)
    bbT = Matrix([[bi * bj for bj in t.b] for bi in t.b])
    RA = R @ t.A
    assert X == RA + RA.T - bbT


_CACHE: dict = {}


def _cached(t, name, modified=True):
    key = (name, modified)
    if key not in _CACHE:
        _CACHE[key] = assemble_cstw_lmi(t, modified=modified)
    return _CACHE[key]


def test_cstw_pairs():
    assert cstw_pairs(3) == [(1, 2), (1, 3), (2, 3)]
    assert len(cstw_pairs(12)) == 66


@pytest.mark.parametrize("modified", [True, False])
def test_dict_round_trip(fx, modified):
    for t in (fx.sdirk32(), fx.hammer_hollingsworth()):
        p = assemble_cstw_lmi(t, modified=modified)
        q = LmiProblem.from_dict(p.to_dict())
        assert q == p


def test_sos_lmi_for_sdirk54(fx):
    t = fx.sdirk54()
    e = e_polynomial(stability_function(t), normalization="primitive")
    g = gram_data(factor_even_monomial(e, tall_tree_order(t)))
    p = assemble_sos_lmi(g)
    assert p.d == 1 and p.provenance == "sos"
    assert p.base == M([[512, 0, 0], [0, -64, 0], [0, 0, 9]])
    assert p.basis == [M([[0, 0, 1], [0, -2, 0], [1, 0, 0]])]
    assert LmiProblem.from_dict(p.to_dict()) == p


def test_inconsistent_null_constraints():
    # b = (1, 0) with A = diag(0, 1): X e has a fixed nonzero entry no eta can cancel
    t = ButcherTableau(Matrix([[0, 0], [0, 1]]), (Q(1), Q(0)))
    with pytest.raises(InconsistentNullConstraints):
        assemble_cstw_lmi(t, order=2)


def test_modified_requires_order_two(fx):
    with pytest.raises(ValueError):
        assemble_cstw_lmi(fx.explicit_euler(), order=1)
