import json
from fractions import Fraction as Q

import pytest
from hypothesis import given, strategies as st

from rkcert.certify import (Certificate, FailureReport, RoundingLadder, build_lmi,
                            certificate_from_json, certificate_to_json, certify_from_eta,
                            load_certificate, retry_policy, round_rational, save_certificate,
                            snap_candidates, sos_decomposition, verify_certificate, verify_exact)
from rkcert.exactnum import Matrix, Poly
from rkcert.lmi import Block, LmiProblem
from rkcert.sdpsolve import solve_feasibility


def test_round_rational_examples():
    assert round_rational([0.5], max_den=10) == [Q(1, 2)]
    assert round_rational([0.333333333], max_den=1000) == [Q(1, 3)]
    assert round_rational([2.6], snap_grid="integer") == [3]
    assert round_rational([0.1234], snap_grid=Q(1, 100)) == [Q(12, 100)]
    assert round_rational([0.1]) == [Q(0.1)]
    with pytest.raises(ValueError):
        round_rational([float("nan")])


def test_snap_ladder_order():
    assert snap_candidates([-61.79]) == [[-60], [-62]]
    assert snap_candidates([0.2]) == [[0]]
    assert snap_candidates([]) == [[]]


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=4),
       st.sampled_from([10, 10**3, 10**6]))
def test_round_rational_is_close(xs, q):
    for x, r in zip(xs, round_rational(xs, max_den=q)):
        assert r.denominator <= q
        assert abs(float(r) - x) <= 1 / q


def test_ladder_round_trip():
    lad = RoundingLadder(denominators=(10, 1000), resolve=False)
    assert RoundingLadder.from_dict(lad.to_dict()) == lad
    labels = [lab for lab, _ in RoundingLadder().candidates([-61.786])]
    assert labels[:2] == ["integer-snap-1", "integer-snap-2"]


# --- SDIRK54 SOS certificate by hand ---------------------------------------------

def test_sdirk54_pivots(fx):
    t = fx.sdirk54()
    c = certify_from_eta(t, "sos-epoly", [-60], normalization="primitive")
    assert c.verified and c.blocks[0].D == (512, 56, Q(63, 32))
    assert c.blocks[0].L[2, 0] == Q(-15, 128)
    c = certify_from_eta(t, "sos-epoly", [-32], normalization="primitive")
    assert c.verified and c.blocks[0].D == (512, 0, 7)
    c = certify_from_eta(t, "sos-epoly", [100], normalization="primitive")
    assert not c.verified and c.failed_pivot == ("F", 1)


def test_sos_decomposition(fx):
    c = certify_from_eta(fx.sdirk54(), "sos-epoly", [-60], normalization="primitive")
    terms = sos_decomposition(c)
    assert terms == [(512, Poly([1, 0, Q(-15, 128)])), (56, Poly([0, 1])),
                     (Q(63, 32), Poly([0, 0, 1]))]
    total = Poly()
    for d, q in terms:
        total = total + q * q * Poly([d])
    assert total == Poly([512, 0, -64, 0, 9])
    # pivots that are zero contribute nothing
    c = certify_from_eta(fx.sdirk54(), "sos-epoly", [-32], normalization="primitive")
    assert [d for d, _ in sos_decomposition(c)] == [512, 7]
    with pytest.raises(ValueError):
        sos_decomposition(certify_from_eta(fx.sdirk54(), "cstw-modified", [0, 0, 0]))


def test_hammer_hollingsworth_zero_polynomial(fx):
    c = certify_from_eta(fx.hammer_hollingsworth(), "sos-epoly", [])
    assert c.verified and sos_decomposition(c) == []
    assert verify_certificate(c).ok


def test_cstw_modified_has_two_zero_pivots_in_x(fx):
    t = fx.sdirk54()
    p = build_lmi(t, "cstw-modified")
    c = retry_policy(p, solve_feasibility(p), certify=lambda eta: verify_exact(p, eta, tableau=t))
    assert isinstance(c, Certificate) and c.verified
    assert len(c.block("X").zero_pivots()) == 2
    assert verify_certificate(c).ok


# --- serialization and independent verification ------------------------------------

@pytest.fixture(scope="module")
def certs():
    from rkcert import fixtures as fx
    out = [certify_from_eta(fx.sdirk54(), "sos-epoly", [-60], normalization="primitive")]
    t = fx.sdirk32()
    out.append(certify_from_eta(t, "cstw-modified", [Q(1, 2)]))
    out.append(certify_from_eta(t, "cstw", [3, Q(1, 2), 2]))
    out.append(certify_from_eta(fx.hammer_hollingsworth(), "cstw-modified", []))
    out.append(certify_from_eta(fx.ramos_vigo(), "sos-epoly", fx.RAMOS_VIGO_ETA,
                                beta=fx.RAMOS_VIGO_BETA_STAR))
    return out


def test_certificates_verify(certs):
    for c in certs:
        assert c.verified, c.failed_pivot
        rep = verify_certificate(c)
        assert rep.ok, rep.failures


def test_json_round_trip_is_bit_exact(certs, tmp_path):
    for c in certs:
        text = certificate_to_json(c)
        back = certificate_from_json(text)
        assert back == c
        assert certificate_to_json(back) == text
        save_certificate(c, tmp_path / "c.json")
        assert load_certificate(tmp_path / "c.json") == c


def _tamper(c, edit):
    d = json.loads(certificate_to_json(c))
    edit(d)
    return verify_certificate(json.dumps(d))


@pytest.mark.parametrize("edit,needle", [
    (lambda d: d["blocks"][0]["D"].__setitem__(1, "-1"), "negative pivot"),
    (lambda d: d["blocks"][0]["D"].__setitem__(2, "2"), "differs"),
    (lambda d: d["eta"].__setitem__(0, "-61"), "differs"),
    (lambda d: d["blocks"][0]["L"][0].__setitem__(1, "1"), "unit lower"),
    (lambda d: d["blocks"][0].__setitem__("perm", [0, 0, 1]), "permutation"),
    (lambda d: d["tableau"]["b"].__setitem__(0, "1/3"), "hash"),
    (lambda d: d.__setitem__("verified", False), "verified = false"),
    (lambda d: d.__setitem__("method", "magic"), "unknown method"),
])
def test_tamper_is_detected(certs, edit, needle):
    rep = _tamper(certs[0], edit)
    assert not rep.ok and any(needle in f for f in rep.failures), rep.failures


def test_tampered_cstw_raw_eta(certs):
    rep = _tamper(certs[1], lambda d: d["raw_eta"].__setitem__(0, "4"))
    assert not rep.ok and any("raw_eta" in f for f in rep.failures)


def test_retry_policy_reports_infeasible():
    mk = lambda rows: Matrix([[Q(x) for x in r] for r in rows])  # noqa: E731
    p = LmiProblem((Block("F", mk([[1, 0], [0, -1]]), (mk([[0, 1], [1, 0]]),)),), ("eta_1",), "sos")
    out = retry_policy(p, solve_feasibility(p))
    assert isinstance(out, FailureReport) and out.stage == "solve"
    p0 = LmiProblem((Block("F", mk([[-1]]), ()),), (), "sos")
    out = retry_policy(p0, solve_feasibility(p0))
    assert isinstance(out, FailureReport) and out.stage == "verify"


def test_retry_policy_prefers_simple_rationals(fx):
    p = build_lmi(fx.sdirk54(), "sos-epoly", normalization="primitive")
    c = retry_policy(p, solve_feasibility(p))
    assert c.verified and all(x.denominator == 1 for x in c.eta)
