from decimal import Decimal
from fractions import Fraction as Q

import pytest
from hypothesis import given, strategies as st

from rkcert.butcher import ButcherTableau, stability_function, tall_tree_order
from rkcert.epoly import e_polynomial, factor_even_monomial
from rkcert.exactnum import Matrix
from rkcert.perturb import (InconsistentOrderSystem, perturbation_bounds, rationalize_tableau,
                            repair_tall_tree)


def _decimal(t: ButcherTableau, digits: int = 16) -> ButcherTableau:
    """The tableau as it would be printed with ``digits`` significant digits."""
    d = lambda x: Q(Decimal(f"{float(x):.{digits - 1}e}"))  # noqa: E731
    return ButcherTableau(Matrix([[d(x) for x in r] for r in t.A.rows]),
                          tuple(d(x) for x in t.b), t.name)


def test_rationalize_examples():
    t = ButcherTableau(Matrix([[Q("0.25")]]), (Q("0.3333333333333333"),))
    r = rationalize_tableau(t, 10**9)
    assert r.A[0, 0] == Q(1, 4) and r.b == (Q(1, 3),)
    assert rationalize_tableau(t, 2).b == (Q(1, 2),)


def test_rationalize_dirk66_denominator_scale(fx):
    # the printed fractions came from decimals we do not have; at 10^9 the
    # 16-digit decimals give fractions of the same denominator scale and accuracy
    A = fx.dirk66_perturbed_A()
    printed = _decimal(ButcherTableau(A, tuple([Q(0)] * 6)))
    r = rationalize_tableau(printed, 10**9)
    dens = [x.denominator for row in r.A.rows for x in row]
    assert max(dens) <= 10**9 and max(dens) >= 10**7
    assert perturbation_bounds(printed, r)[0] < Q(1, 10**16)


@pytest.mark.parametrize("name,p", [("sdirk54", 4), ("skvortsov", 6), ("sdirk32", 2)])
def test_exact_tableau_is_fixed_point(fx, name, p):
    t = getattr(fx, name)()
    rep = repair_tall_tree(t, p, original=t)
    assert rep.tilde_tableau.b == t.b
    assert rep.eps_A == 0 and rep.eps_b == 0
    again = repair_tall_tree(rep.tilde_tableau, p, original=rep.tilde_tableau)
    assert again.tilde_tableau == rep.tilde_tableau


def _synthetic(fx):
    return _decimal(fx.sdirk54(), 12)


def test_repair_restores_order_and_factor(fx):
    orig = _synthetic(fx)
    assert tall_tree_order(orig, 4).p < 4
    rep = repair_tall_tree(rationalize_tableau(orig, 10**8), 4, original=orig)
    assert rep.order_verified == 4
    t = rep.tilde_tableau
    factor_even_monomial(e_polynomial(stability_function(t)), tall_tree_order(t))
    assert rep.eps_A < Q(1, 10**11) and rep.eps_b < Q(1, 10**10)


@pytest.mark.parametrize("name,p", [("dirk66_perturbed", 6), ("sdirk96_perturbed", 6),
                                    ("dirk1255_perturbed", 5)])
def test_eps_monotone_in_max_den(fx, name, p):
    orig = _decimal(getattr(fx, name)())
    pinned = {"sdirk96_perturbed": fx.sdirk96_perturbed_rows,
              "dirk1255_perturbed": fx.dirk1255_perturbed_rows}.get(name)
    prev = None
    for q in (10**4, 10**6, 10**8, 10**10):
        r = rationalize_tableau(orig, q)
        pins = {k: r.b[k] for k in pinned()[1]} if pinned else None
        rep = repair_tall_tree(r, p, pins=pins, original=orig)
        if prev is not None:
            assert rep.eps_A <= prev[0] and rep.eps_b <= prev[1]
        prev = (rep.eps_A, rep.eps_b)


@given(st.lists(st.fractions(min_value=-1, max_value=1), min_size=3, max_size=3),
       st.sampled_from([10, 10**3, 10**6]))
def test_rationalization_error_is_monotone(xs, q):
    t = ButcherTableau(Matrix([[xs[0]]]), (xs[1],))
    e1 = perturbation_bounds(t, rationalize_tableau(t, q))
    e2 = perturbation_bounds(t, rationalize_tableau(t, 10 * q))
    assert e2[0] <= e1[0] and e2[1] <= e1[1]


def test_sdirk96_policy(fx):
    rows, pins = fx.sdirk96_perturbed_rows()
    t = fx.sdirk96_perturbed()
    assert t.b[0] == 0 and t.b[8] == pins[8]
    assert tuple(t.A.rows[-1]) == t.b
    assert tall_tree_order(t, 6).p == 6
    rep = repair_tall_tree(t, 6, pins=pins, stiffly_accurate=True, objective="quadrature")
    assert rep.free_variable_policy["kernel_dim"] == 1
    assert rep.free_variable_policy["pinned"] == {"1": "0", "9": "87518253/401224696"}
    assert rep.tilde_tableau == t


def test_dirk66_b_is_unique(fx):
    t = fx.dirk66_perturbed()
    assert tall_tree_order(t, 6).p == 6
    rep = repair_tall_tree(t, 6, stiffly_accurate=False)
    assert rep.free_variable_policy["kernel_dim"] == 0


def test_dirk66_eps_against_original(fx):
    orig = fx.external_tableau("dirk66_original")
    if orig is None:
        pytest.skip("original decimal DIRK(6,6) tableau not provided under data/external")
    eA, eb = perturbation_bounds(orig, fx.dirk66_perturbed())
    assert eA <= Q(5, 10**17) and eb <= Q(6, 10**15)


def test_inconsistent_system():
    # A = 0: A e = 0 so b . A e = 1/2 is unreachable
    t = ButcherTableau(Matrix.zeros(2), (Q(1, 2), Q(1, 2)))
    with pytest.raises(InconsistentOrderSystem):
        repair_tall_tree(t, 2)
