import json
from fractions import Fraction

import pytest

from rkcert.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_sdirk54_sos_and_verify(capsys, tmp_path):
    cert = str(tmp_path / "c.json")
    code, out = run(capsys, "stability", "--fixture", "sdirk54", "--out", cert)
    assert code == 0 and "verified" in out
    code, out = run(capsys, "verify", cert)
    assert code == 0 and out.strip().endswith("PASS")


def test_cstw_modified_zero_pivots(capsys, tmp_path):
    code, out = run(capsys, "stability", "--fixture", "sdirk54", "--method", "cstw-modified")
    assert code == 0
    line = next(l for l in out.splitlines() if "zero pivots" in l)
    assert "'X': [" in line and len(line.split("'X': [")[1].split("]")[0].split(",")) == 2


def test_both_methods_write_two_files(capsys, tmp_path):
    code, out = run(capsys, "stability", "--fixture", "sdirk32", "--method", "both",
                    "--out", str(tmp_path / "c.json"))
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["c.cstw-modified.json", "c.sos-epoly.json"]


def test_tampered_certificate_fails_with_pivot(capsys, tmp_path):
    cert = tmp_path / "c.json"
    run(capsys, "stability", "--fixture", "sdirk54", "--normalization", "primitive",
        "--out", str(cert))
    d = json.loads(cert.read_text())
    k = next(i for i, x in enumerate(d["blocks"][0]["D"]) if x != "0")
    d["blocks"][0]["D"][k] = "-" + d["blocks"][0]["D"][k]
    cert.write_text(json.dumps(d))
    code, out = run(capsys, "verify", str(cert))
    assert code == 8 and f"index {k}" in out


def test_not_a_stable_obstruction(capsys):
    code, out = run(capsys, "stability", "--fixture", "explicit-euler")
    assert code == 4 and "perturb" in out


def test_not_analytic(capsys, tmp_path):
    # S(z) = (1 - z)/(1 + z): |S(iy)| = 1 but a pole at z = -1
    path = _write(tmp_path, "t.json", {"A": [["-1"]], "b": ["-2"]})
    code, out = run(capsys, "stability", "--tableau", path)
    assert code == 9


def test_backward_euler_needs_no_sdp(capsys):
    code, out = run(capsys, "stability", "--fixture", "backward-euler")
    assert code == 0 and "0 free variables" in out


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "stability", "--tableau", str(tmp_path / "missing.json"))[0] == 3
    bad = _write(tmp_path, "bad.json", {"A": [["1", "2"]], "b": ["1"]})
    assert run(capsys, "stability", "--tableau", bad)[0] == 3
    dec = _write(tmp_path, "dec.json", {"A": [["0.5"]], "b": ["1"]})
    assert run(capsys, "stability", "--tableau", dec)[0] == 3
    assert run(capsys, "stability", "--tableau", dec, "--allow-decimal")[0] == 0
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["stability", "--method", "magic"])
    assert exc.value.code == 2


def test_deterministic_certificates(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "stability", "--fixture", "sdirk54", "--method", "cstw-modified",
                   "--seed", "7", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_report(capsys):
    code, out = run(capsys, "report", "--fixture", "sdirk32")
    assert code == 0
    assert "CSTW LMI: raw dimension 3" in out and "constrained dimension 1" in out
    code, out = run(capsys, "report", "--fixture", "hammer-hollingsworth")
    assert "E(y) = 0" in out
    code, out = run(capsys, "report", "--fixture", "backward-euler")
    assert "E(y) = 1*y^2" in out


def test_report_with_prior_certificate(capsys, tmp_path):
    cert = str(tmp_path / "c.json")
    run(capsys, "stability", "--fixture", "sdirk32", "--out", cert)
    code, out = run(capsys, "report", "--fixture", "sdirk32", "--certificate", cert)
    assert f"prior certificate {cert}: PASS" in out


def test_epoly(capsys, tmp_path):
    code, out = run(capsys, "epoly", "--fixture", "sdirk54", "--normalization", "primitive")
    assert code == 0 and "F(y) = 512 + -64*y^2 + 9*y^4" in out
    code, out = run(capsys, "epoly", "--fixture", "ramos-vigo", "--json")
    d = json.loads(out)
    assert d["F"] == ["-16", "0", "1"] and d["mode"] == "right-angle"
    code, out = run(capsys, "epoly", "--fixture", "sdirk54", "--beta", "1/2", "--json")
    assert json.loads(out)["variable"] == "u = y^2"


def test_alpha_bound(capsys, tmp_path):
    out_path = tmp_path / "ab.json"
    code, _ = run(capsys, "alpha-bound", "--fixture", "sdirk54", "--out", str(out_path))
    d = json.loads(out_path.read_text())
    assert code == 0 and d["beta_star"] == "0" and d["alpha_star_degrees"] == "90.00000"
    assert d["certificate"]["verified"] is True
    code, _ = run(capsys, "alpha-bound", "--fixture", "explicit-euler", "--tol", "1/4")
    assert code == 10


def test_perturb(capsys, tmp_path, fx):
    t = fx.sdirk54().to_dict()
    t["A"] = [[f"{float(Fraction(x)):.12e}" for x in r] for r in t["A"]]
    t["b"] = [f"{float(Fraction(x)):.12e}" for x in t["b"]]
    path = _write(tmp_path, "dec.json", t)
    out = tmp_path / "rep.json"
    code, _ = run(capsys, "perturb", "--tableau", path, "--order", "4",
                  "--max-denominator", "100000000", "--out", str(out))
    d = json.loads(out.read_text())
    assert code == 0 and d["order_verified"] == 4
    assert Fraction(d["eps_b"]) < Fraction(1, 10**10)
    # the repaired tableau certifies
    rep = _write(tmp_path, "tilde.json", d["tableau"])
    assert run(capsys, "stability", "--tableau", rep)[0] == 0
    code, _ = run(capsys, "perturb", "--tableau", path, "--order", "4", "--pin", "x1=0")
    assert code == 3


def test_perturb_inconsistent(capsys, tmp_path):
    path = _write(tmp_path, "z.json", {"A": [["0", "0"], ["0", "0"]], "b": ["0.5", "0.5"]})
    assert run(capsys, "perturb", "--tableau", path, "--order", "2")[0] == 5
