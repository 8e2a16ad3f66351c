from fractions import Fraction as Q

import pytest

from rkcert.alphasearch import NoFeasibleBeta, alpha_degrees, bound_alpha, certify_at
from rkcert.certify import verify_certificate


def test_a_stable_scheme_is_certified_at_zero(fx):
    b = bound_alpha(fx.sdirk54())
    assert b.beta_star == 0 and b.alpha_star_degrees == "90.00000"
    assert b.certificate.verified and b.caveat is None
    assert b.sweep_log == [(0, "certified")]


def test_alpha_degrees():
    assert alpha_degrees(Q(1, 2), 3) == "60.000"
    assert alpha_degrees(Q(19699132, 4466212691)).startswith("89.7472")


def test_ramos_vigo_appendix_eta_certifies(fx):
    c = certify_at(fx.ramos_vigo(), fx.RAMOS_VIGO_BETA_STAR, fx.RAMOS_VIGO_ETA)
    assert c.verified and c.alpha_mode == "sector"
    assert c.analyticity.startswith("undecided")
    assert verify_certificate(c).ok


@pytest.fixture(scope="module")
def rv_bound():
    from rkcert import fixtures as fx
    return bound_alpha(fx.ramos_vigo(), tol=Q(1, 2**12))


def test_ramos_vigo_bisection(rv_bound, fx):
    b = rv_bound
    assert b.certificate.verified and b.certificate.beta == b.beta_star
    assert verify_certificate(b.certificate).ok
    # our bound cannot beat the published one by more than the bracket width
    assert fx.RAMOS_VIGO_BETA_STAR <= b.beta_star <= fx.RAMOS_VIGO_BETA_STAR + Q(1, 2**11)
    assert "undecided" in b.caveat


def test_sweep_log_is_a_bracket(rv_bound):
    b = rv_bound
    for beta, status in b.sweep_log:
        if status == "certified":
            assert beta >= b.beta_star
        else:
            assert beta < b.beta_star
    assert all(isinstance(beta, Q) for beta, _ in b.sweep_log)
    d = b.to_dict()
    assert Q(d["beta_star"]) == b.beta_star


def test_explicit_euler_has_no_beta(fx):
    with pytest.raises(NoFeasibleBeta):
        bound_alpha(fx.explicit_euler(), tol=Q(1, 4))


def test_bad_ranges(fx):
    with pytest.raises(ValueError):
        bound_alpha(fx.sdirk54(), beta_hi=Q(2))
    with pytest.raises(ValueError):
        bound_alpha(fx.sdirk54(), tol=0)
