"""``rkcert`` command line.

Exit codes (stable):

==  =========================================================
0   success
2   usage error (argparse)
3   input could not be read or parsed
4   E-polynomial obstruction: not divisible, or E < 0 near 0 or infinity
5   LMI reported likely infeasible
6   solver indeterminate and no rounded point verified
7   solver feasible but no rounded point verified
8   certificate failed verification
9   certificate verified but S(z) is not analytic in the region
10  no beta in the search range could be certified
==  =========================================================
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__, fixtures
from .alphasearch import NoFeasibleBeta, bound_alpha
from .butcher import (ButcherTableau, analytic_in_sector, krylov_M, load_tableau,
                      stability_function, tall_tree_order)
from .certify import (FailureReport, RoundingLadder, build_lmi, certificate_to_json,
                      load_certificate, retry_policy, save_certificate, verify_certificate,
                      verify_exact)
from .epoly import NORMALIZATIONS, NotDivisible, e_polynomial, factor_even_monomial
from .exactnum import Poly, format_rat, parse_rat, sign
from .lmi import InconsistentNullConstraints, assemble_cstw_lmi
from .perturb import InconsistentOrderSystem, rationalize_tableau, repair_tall_tree
from .sdpsolve import SolverOptions, solve_feasibility

log = logging.getLogger("rkcert")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_EPOLY = 4
EXIT_INFEASIBLE = 5
EXIT_INDETERMINATE = 6
EXIT_ROUNDING = 7
EXIT_VERIFY = 8
EXIT_NOT_ANALYTIC = 9
EXIT_NO_BETA = 10

FIXTURES = {
    "sdirk54": fixtures.sdirk54,
    "sdirk32": fixtures.sdirk32,
    "hammer-hollingsworth": fixtures.hammer_hollingsworth,
    "backward-euler": fixtures.backward_euler,
    "explicit-euler": fixtures.explicit_euler,
    "implicit-midpoint": fixtures.implicit_midpoint,
    "ramos-vigo": fixtures.ramos_vigo,
    "skvortsov": fixtures.skvortsov,
    "dirk66-perturbed": fixtures.dirk66_perturbed,
    "sdirk96-perturbed": fixtures.sdirk96_perturbed,
    "dirk1255-perturbed": fixtures.dirk1255_perturbed,
}


@dataclass
class RunConfig:
    """Settings of one pipeline run.  ``to_dict`` is embedded in certificates."""
    method: str = "sos"
    normalization: str = "monic"
    ladder: RoundingLadder = field(default_factory=RoundingLadder)
    solver: SolverOptions = field(default_factory=SolverOptions)
    external_solver: str | None = None
    out: str | None = None
    verbosity: int = 0

    def to_dict(self) -> dict:
        # output path and verbosity do not affect the certificate contents
        return {"method": self.method, "normalization": self.normalization,
                "ladder": self.ladder.to_dict(), "solver": self.solver.to_dict(),
                "external_solver": self.external_solver}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_tableau(args) -> ButcherTableau:
    if getattr(args, "fixture", None):
        return FIXTURES[args.fixture]()
    if not getattr(args, "tableau", None):
        raise CliError(EXIT_INPUT, "give --tableau FILE or --fixture NAME")
    try:
        return load_tableau(args.tableau, allow_decimal=args.allow_decimal)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_INPUT, f"cannot read tableau {args.tableau}: {exc}") from exc


def _config(args) -> RunConfig:
    solver = SolverOptions(tol=args.solver_tol, max_iter=args.max_iter, seed=args.seed)
    ladder = RoundingLadder(denominators=tuple(int(float(q)) for q in args.denominators))
    return RunConfig(method=getattr(args, "method", "sos"), normalization=args.normalization,
                     ladder=ladder, solver=solver, external_solver=args.external_solver,
                     out=getattr(args, "out", None), verbosity=args.verbose)


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def sign_obstruction(F: Poly) -> str | None:
    """An exact reason why F is negative somewhere on y > 0, if the end coefficients give one."""
    if F.is_zero():
        return None
    low = next(k for k in range(F.degree + 1) if F[k] != 0)
    if sign(F[low]) < 0:
        return (f"lowest coefficient p_{low} = {format_rat(F[low])} < 0: "
                "E(y) is negative for y near 0")
    if sign(F.lead()) < 0:
        return f"leading coefficient {format_rat(F.lead())} < 0: E(y) is negative for large y"
    return None


def _solve(p, cfg: RunConfig):
    if cfg.external_solver:
        from .sdpsolve import solve_external
        return solve_external(p, cfg.external_solver)
    return solve_feasibility(p, margin=True, options=cfg.solver)


def run_stability(t: ButcherTableau, cfg: RunConfig) -> tuple[int, list, list[str]]:
    """Order check, analyticity, LMI solve, rounding and exact verification.

    Returns the exit code, the certificates produced and diagnostic lines.
    """
    msgs: list[str] = []
    order = tall_tree_order(t)
    msgs.append(f"tall-tree order verified exactly: p = {order.p}")
    ana = analytic_in_sector(t)
    msgs.append(f"analyticity in the left half-plane: {ana.status} ({ana.detail})")
    methods = ["sos", "cstw-modified"] if cfg.method == "both" else [cfg.method]
    certs, codes = [], []
    for method in methods:
        name = "sos-epoly" if method == "sos" else method
        try:
            p = build_lmi(t, name, None, cfg.normalization)
        except NotDivisible as exc:
            msgs.append(f"[{name}] F(y) does not exist: {exc}. The scheme is not A-stable as "
                        "given; if its decimals only approximate the order conditions, repair "
                        "them with `rkcert perturb`")
            codes.append(EXIT_EPOLY)
            continue
        except InconsistentNullConstraints as exc:
            msgs.append(f"[{name}] infeasible: {exc}")
            codes.append(EXIT_INFEASIBLE)
            continue
        except ValueError as exc:
            msgs.append(f"[{name}] LMI cannot be assembled: {exc}; try --method cstw")
            codes.append(EXIT_INPUT)
            continue
        if name == "sos-epoly":
            F = Poly(parse_rat(x) for x in p.meta["F"])
            why = sign_obstruction(F)
            if why:
                msgs.append(f"[{name}] {why}; no certificate is possible. See `rkcert perturb` "
                            "for a nearby tableau that satisfies the order conditions exactly")
                codes.append(EXIT_EPOLY)
                continue
        msgs.append(f"[{name}] LMI: {p.d} free variables, blocks "
                    f"{[(b.name, b.size) for b in p.blocks]}")
        res = _solve(p, cfg)
        msgs.append(f"[{name}] solver: {res.status} after {res.iterations} iterations, "
                    f"margin {res.margin}")
        kw = dict(tableau=t, normalization=cfg.normalization,
                  analyticity=f"{ana.status}: {ana.detail}", order=order.p,
                  config=cfg.to_dict())
        out = retry_policy(p, res, ladder=cfg.ladder, solver_options=cfg.solver,
                           certify=lambda e, p=p, kw=kw: verify_exact(p, e, **kw))
        if isinstance(out, FailureReport):
            for label, outcome in out.attempts:
                msgs.append(f"[{name}]   {label}: {outcome}")
            msgs.append(f"[{name}] no certificate: {out.reason}")
            codes.append({"likely-infeasible": EXIT_INFEASIBLE,
                          "indeterminate": EXIT_INDETERMINATE}.get(out.solver_status,
                                                                    EXIT_ROUNDING))
            continue
        zero = {b.name: b.zero_pivots() for b in out.blocks}
        msgs.append(f"[{name}] verified: eta = {[format_rat(x) for x in out.eta]}, "
                    f"zero pivots {zero}")
        certs.append(out)
        codes.append(EXIT_NOT_ANALYTIC if name == "sos-epoly" and ana.status == "disproved"
                     else EXIT_OK)
    code = EXIT_OK if codes and all(c == EXIT_OK for c in codes) else max(codes or [EXIT_INPUT])
    return code, certs, msgs


def cmd_stability(args) -> int:
    t = _read_tableau(args)
    cfg = _config(args)
    code, certs, msgs = run_stability(t, cfg)
    for m in msgs:
        print(m)
    for c in certs:
        if cfg.out:
            path = Path(cfg.out)
            if len(certs) > 1:
                path = path.with_name(f"{path.stem}.{c.method}{path.suffix}")
            save_certificate(c, path)
            print(f"certificate written to {path}")
    return code


def cmd_verify(args) -> int:
    try:
        c = load_certificate(args.certificate)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"cannot read certificate: {exc}")
        return EXIT_INPUT
    rep = verify_certificate(c)
    for chk in rep.checks:
        print(f"ok   {chk}")
    for f in rep.failures:
        print(f"FAIL {f}")
    if rep.pivot is not None:
        print(f"first failing pivot: block {rep.pivot[0]}, index {rep.pivot[1]}")
    print("PASS" if rep.ok else "FAIL")
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_alpha_bound(args) -> int:
    t = _read_tableau(args)
    cfg = _config(args)
    try:
        ab = bound_alpha(t, parse_rat(args.beta_hi), parse_rat(args.beta_lo),
                         parse_rat(args.tol), normalization=cfg.normalization,
                         ladder=cfg.ladder, solver_options=cfg.solver, config=cfg.to_dict())
    except NoFeasibleBeta as exc:
        print(str(exc))
        return EXIT_NO_BETA
    out = ab.to_dict()
    out["certificate"] = json.loads(certificate_to_json(ab.certificate))
    _emit(out, args.out)
    if args.out:
        print(f"beta* = {out['beta_star']} (alpha* = {out['alpha_star_degrees']} deg)")
    return EXIT_OK


def cmd_perturb(args) -> int:
    t = _read_tableau(args)
    pins = {}
    for item in args.pin or []:
        key, _, val = item.partition("=")
        if not key.startswith("b") or not val:
            raise CliError(EXIT_INPUT, f"--pin expects bK=value, got {item!r}")
        pins[int(key[1:]) - 1] = parse_rat(val)
    rat = rationalize_tableau(t, args.max_denominator)
    try:
        rep = repair_tall_tree(rat, args.order, pins=pins, original=t)
    except InconsistentOrderSystem as exc:
        print(f"{exc}; try a larger --max-denominator")
        return EXIT_INFEASIBLE
    _emit(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_epoly(args) -> int:
    t = _read_tableau(args)
    sf = stability_function(t)
    out = {"normalization": args.normalization}
    if args.beta is None:
        e = e_polynomial(sf, "right-angle", normalization=args.normalization)
        out.update(mode="right-angle", beta=None, variable="y")
        try:
            F = factor_even_monomial(e, tall_tree_order(t))
        except NotDivisible as exc:
            F, out["obstruction"] = None, str(exc)
    else:
        beta = parse_rat(args.beta)
        e = e_polynomial(sf, "sector", beta, normalization=args.normalization)
        out.update(mode="sector", beta=format_rat(beta), variable="u = y^2")
        F = factor_even_monomial(e)
    out["E"] = [format_rat(c) for c in e.raw.coeffs]
    out["F"] = None if F is None else [format_rat(c) for c in F.coeffs]
    if args.json or args.out:
        _emit(out, args.out)
        return EXIT_OK
    if args.beta is None:
        print(f"E(y) = {e.raw}")
    else:
        print(f"E(u) = {e.raw.show('u')}   (u = y^2, beta = {out['beta']})")
    print(f"F(y) = {F}" if F is not None else f"F(y): {out['obstruction']}")
    return EXIT_OK


def cmd_report(args) -> int:
    t = _read_tableau(args)
    order = tall_tree_order(t)
    sf = stability_function(t)
    kr = krylov_M(t)
    print(f"scheme: {t.name or '(unnamed)'}")
    print(f"stages s = {t.s}")
    print(f"tall-tree order (exact) p = {order.p}")
    print(f"S(z) = ({sf.N.show('z')}) / ({sf.D.show('z')})")
    print(f"degenerate stability function: {sf.degenerate}")
    print(f"Krylov dimension r = {kr.r}")
    e = e_polynomial(sf, "right-angle", normalization=args.normalization)
    print(f"E(y) = {e.raw}" if not e.raw.is_zero() else "E(y) = 0")
    try:
        F = factor_even_monomial(e, order)
        sos = build_lmi(t, "sos-epoly", None, args.normalization)
        print(f"F(y) = {F}")
        print(f"SOS LMI: m = {sos.blocks[0].size}, d = {sos.d}")
    except NotDivisible as exc:
        print(f"SOS LMI: unavailable ({exc})")
    raw = assemble_cstw_lmi(t, modified=False)
    print(f"CSTW LMI: raw dimension {raw.d}")
    try:
        mod = assemble_cstw_lmi(t, modified=True, order=order)
        print(f"modified CSTW LMI: constrained dimension {mod.d} "
              f"(free: {', '.join(mod.variable_names) or 'none'})")
    except (InconsistentNullConstraints, ValueError) as exc:
        print(f"modified CSTW LMI: unavailable ({exc})")
    print(f"analyticity: {analytic_in_sector(t).status}")
    if args.certificate:
        rep = verify_certificate(load_certificate(args.certificate))
        print(f"prior certificate {args.certificate}: {'PASS' if rep.ok else 'FAIL'}")
    return EXIT_OK


def _add_tableau(sp) -> None:
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--tableau", help="tableau JSON file")
    g.add_argument("--fixture", choices=sorted(FIXTURES), help="built-in tableau")
    sp.add_argument("--allow-decimal", action="store_true",
                    help="accept decimal literals, read as exact rationals")


def _add_solver(sp) -> None:
    d = SolverOptions()
    sp.add_argument("--normalization", choices=NORMALIZATIONS, default="monic")
    sp.add_argument("--solver-tol", type=float, default=d.tol)
    sp.add_argument("--max-iter", type=int, default=d.max_iter)
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.add_argument("--denominators", nargs="+", default=["1e2", "1e6", "1e12"],
                    help="max denominators of the rounding ladder after integer snapping")
    sp.add_argument("--external-solver", default=None,
                    help="command run as CMD IN.json OUT.json (see README)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rkcert", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rkcert {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stability", help="certify A-stability")
    _add_tableau(sp)
    _add_solver(sp)
    sp.add_argument("--method", choices=("sos", "cstw", "cstw-modified", "both"), default="sos")
    sp.add_argument("--out", help="certificate path")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("verify", help="re-check a certificate")
    sp.add_argument("certificate")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("alpha-bound", help="certified lower bound on cos(alpha)")
    _add_tableau(sp)
    _add_solver(sp)
    sp.add_argument("--beta-hi", default="1")
    sp.add_argument("--beta-lo", default="0")
    sp.add_argument("--tol", default="1/1000000", help="final bracket width in beta")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_alpha_bound)

    sp = sub.add_parser("perturb", help="nearby rational tableau meeting the tall-tree conditions")
    _add_tableau(sp)
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--max-denominator", type=int, default=10 ** 10)
    sp.add_argument("--pin", action="append", help="bK=value, may repeat")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_perturb, allow_decimal=True)

    sp = sub.add_parser("epoly", help="print the E-polynomial")
    _add_tableau(sp)
    sp.add_argument("--beta", default=None, help="cos(alpha) for the sector form")
    sp.add_argument("--normalization", choices=NORMALIZATIONS, default="monic")
    sp.add_argument("--json", action="store_true", help="emit coefficients as JSON")
    sp.add_argument("--out", help="JSON output path (implies --json)")
    sp.set_defaults(func=cmd_epoly)

    sp = sub.add_parser("report", help="summary of a tableau")
    _add_tableau(sp)
    sp.add_argument("--normalization", choices=NORMALIZATIONS, default="monic")
    sp.add_argument("--certificate", help="prior certificate to re-check")
    sp.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
