"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import algebra as alg_mod
from . import permutohedral as perm
from . import potentials as pot
from . import qcoh, saito
from .series import SeriesError, TruncatedSeries

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    parameters: dict
    residuals: dict[str, Any] = field(default_factory=dict)
    verdicts: dict[str, bool] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def check(self, name: str, value, ok: bool) -> None:
        self.residuals[name] = value
        self.verdicts[name] = bool(ok)

    def to_doc(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "residuals": self.residuals,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "timings": self.timings,
            **({"output": self.extra} if self.extra else {}),
        }


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _write_json(path: str, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _complex_doc(z) -> Any:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


# -- subcommands ---------------------------------------------------------------


def cmd_gw(args, out) -> RunReport:
    if not 1 <= args.r <= qcoh.MAX_R:
        raise UsageError(f"--r must be in 1..{qcoh.MAX_R}")
    if not 1 <= args.max_degree <= qcoh.MAX_DEGREE:
        raise UsageError(f"--max-degree must be in 1..{qcoh.MAX_DEGREE}")
    rep = RunReport("gw", {"r": args.r, "max_degree": args.max_degree})
    setup = qcoh.QcohSetup(args.r, args.max_degree)
    t0 = time.perf_counter()
    try:
        table = qcoh.solve_gw(setup)
    except qcoh.GwError as exc:
        rep.check("solver", str(exc), False)
        print(f"solver failed: {exc}", file=out)
        return rep
    rep.timings["solve"] = time.perf_counter() - t0
    rep.check("solver", "consistent, unique, integral", True)
    if args.r == 2:
        ref = qcoh.kontsevich_p2(args.max_degree)
        got = [table.get(d, (3 * d - 1,)) for d in range(1, args.max_degree + 1)]
        rep.check("recursion_agreement", got == ref, got == ref)
    for line in table.tsv_lines():
        print(line, file=out)
    rep.extra["table"] = table.to_doc()
    if args.emit_potential:
        phi = qcoh.quantum_potential(setup, table)
        _write_json(args.emit_potential, phi.phi.to_doc())
        _write_json(args.emit_potential + ".metric.json", phi.metric.to_doc())
    return rep


def _report_residual(rep: RunReport, r: pot.ResidualReport, out) -> None:
    rep.check(r.name, r.as_dict(), r.zero)
    print(r.summary(), file=out)


def cmd_wdvv(args, out) -> RunReport:
    if not args.metric:
        raise UsageError("wdvv needs --metric FILE")
    try:
        phi = TruncatedSeries.from_doc(_load_json(args.potential))
        metric = pot.FlatMetric.from_doc(_load_json(args.metric))
        wp = pot.WdvvPotential(phi, metric)
    except (SeriesError, pot.PotentialError) as exc:
        raise UsageError(str(exc)) from exc
    rep = RunReport("wdvv", {"potential": args.potential, "metric": args.metric, "projective": args.projective})
    t0 = time.perf_counter()
    _report_residual(rep, pot.wdvv_residual(wp), out)
    _report_residual(rep, pot.flat_identity_residual(wp), out)
    if args.projective is not None:
        setup = qcoh.QcohSetup(args.projective, order=phi.order)
        if setup.dim != wp.dim:
            raise UsageError("--projective does not match the potential dimension")
        _report_residual(rep, pot.euler_residual(wp, qcoh.euler_field_p_r(setup, phi.order)), out)
    rep.timings["check"] = time.perf_counter() - t0
    return rep


def cmd_assoc(args, out) -> RunReport:
    try:
        tensor = pot.StructureTensor.from_doc(_load_json(args.tensor))
    except (SeriesError, pot.PotentialError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed tensor document: {exc}") from exc
    rep = RunReport("assoc", {"tensor": args.tensor})
    t0 = time.perf_counter()
    sym = tensor.is_supersymmetric()
    rep.check("supersymmetric", sym, sym)
    print(f"supersymmetric: {'yes' if sym else 'no'}", file=out)
    _report_residual(rep, pot.oriented_associativity_residual(tensor), out)
    _report_residual(rep, pot.structure_identity_residual(tensor), out)
    rep.timings["check"] = time.perf_counter() - t0
    return rep


def _load_coeffs(path: str, n: int) -> list[complex]:
    doc = _load_json(path)
    if isinstance(doc, dict):
        doc = doc.get("a", doc.get("coeffs"))
    if not isinstance(doc, list) or len(doc) != n:
        raise UsageError(f"coefficient file must hold a list of {n} numbers")
    vals = []
    for x in doc:
        if isinstance(x, list) and len(x) == 2:
            vals.append(complex(x[0], x[1]))
        elif isinstance(x, (int, float, str)):
            vals.append(complex(x))
        else:
            raise UsageError(f"bad coefficient {x!r}")
    return vals


def cmd_an(args, out) -> RunReport:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    tol = args.tol if args.tol is not None else 1e-6
    rep = RunReport("an", {"n": args.n, "fd_step": args.fd_step, "tol": tol, "seed": args.seed})
    t0 = time.perf_counter()
    if args.coeffs:
        a = _load_coeffs(args.coeffs, args.n)
        try:
            chart = saito.build_chart(args.n, a)
            md = saito.metric_data(chart)
        except saito.SaitoError as exc:
            raise UsageError(str(exc)) from exc
        rel = float(np.max(np.abs(md.eta_grad_u / md.g_diag - 1)))
        ec = saito.euler_consistency(chart)
        rep.check("metric_potential_rel", rel, rel < 1e-8)
        rep.check("euler_consistency", ec.euler, ec.euler < 1e-8)
        rep.check("flat_identity", ec.flat_identity, ec.flat_identity < 1e-10)
        if args.n >= 3:
            try:
                de = saito.darboux_egoroff_residual(chart, args.fd_step)
            except saito.SaitoError as exc:
                print(f"darboux-egoroff skipped: {exc}", file=out)
            else:
                rep.check("darboux_egoroff_rotation", de.rotation, de.rotation < tol)
        rep.extra.update({
            "rho": [_complex_doc(z) for z in chart.rho],
            "u": [_complex_doc(z) for z in chart.u],
            "eta": _complex_doc(md.eta),
            "g_diag": [_complex_doc(z) for z in md.g_diag],
        })
        for key in ("rho", "u", "g_diag"):
            print(f"{key}: {rep.extra[key]}", file=out)
        print(f"eta: {rep.extra['eta']}", file=out)
    else:
        sw = saito.sweep(args.n, args.samples, seed=args.seed, fd_step=args.fd_step,
                         convergence_steps=(1e-2, 5e-3))
        r = sw.residuals()
        rep.check("darboux_egoroff_rotation", r["darboux_egoroff_rotation"], r["darboux_egoroff_rotation"] < tol)
        rep.check("darboux_egoroff_e_gamma", r["darboux_egoroff_e_gamma"], r["darboux_egoroff_e_gamma"] < tol)
        rep.check("metric_potential_rel", r["metric_potential_rel"], r["metric_potential_rel"] < 1e-8)
        rep.check("euler_consistency", r["euler_consistency"], r["euler_consistency"] < 1e-8)
        rep.check("flat_identity", r["flat_identity"], r["flat_identity"] < 1e-10)
        rep.residuals["e_eta_flow_variation"] = r["e_eta_flow_variation"]
        if sw.convergence_ratios:
            worst = min(sw.convergence_ratios)
            rep.check("convergence_ratio_min", worst, worst >= 3.5)
    rep.timings["total"] = time.perf_counter() - t0
    for name, value in rep.residuals.items():
        if isinstance(value, float):
            flag = "" if rep.verdicts.get(name, True) else "  FAIL"
            print(f"{name:28s} {value:.3e}{flag}", file=out)
    return rep


def _parse_vector(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def cmd_fan(args, out) -> RunReport:
    if not 1 <= args.n <= perm.MAX_FAN:
        raise UsageError(f"--n must be in 1..{perm.MAX_FAN}")
    if args.verify and args.n > perm.MAX_VERIFY:
        raise UsageError(f"--verify is capped at n <= {perm.MAX_VERIFY}")
    rep = RunReport("fan", {"n": args.n, "verify": args.verify, "locate": args.locate})
    t0 = time.perf_counter()
    fan = perm.build_fan(args.n)
    ncones, nmax = len(fan.cones), len(fan.maximal)
    rep.check("cone_count", ncones, ncones == perm.fubini(args.n))
    rep.check("maximal_count", nmax, nmax == _factorial(args.n))
    line = f"{ncones} cones, {nmax} maximal"
    if args.verify:
        bad = perm.verify_faces(fan)
        rep.check("face_intersections", len(bad), not bad)
        line += f", verify: {'pass' if not bad else 'fail'}"
    print(line, file=out)
    if args.locate:
        try:
            v = [int(x) for x in _parse_vector(args.locate)]
        except ValueError as exc:
            raise UsageError("--locate expects comma-separated integers") from exc
        if len(v) != args.n:
            raise UsageError(f"--locate needs {args.n} coordinates")
        tau = perm.locate(v, fan)
        m = perm.conic_membership(v, fan.cone(tau))
        rep.check("locate_certificate", [str(c) for c in m.coeffs or ()], m.interior)
        rep.extra["located"] = fan.cone(tau).to_doc()
        print(f"locate: {tau} coefficients {[str(c) for c in m.coeffs or ()]}", file=out)
    rep.timings["total"] = time.perf_counter() - t0
    return rep


def _factorial(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def _load_algebra(path: str) -> alg_mod.PointAlgebra:
    try:
        return alg_mod.PointAlgebra.from_doc(_load_json(path))
    except alg_mod.AlgebraError as exc:
        raise UsageError(str(exc)) from exc


def cmd_twist(args, out) -> RunReport:
    a = _load_algebra(args.algebra)
    try:
        eps = [Fraction(x) if a.exact else complex(x) for x in _parse_vector(args.epsilon)]
    except ValueError as exc:
        raise UsageError("--epsilon expects comma-separated numbers") from exc
    if len(eps) != a.dim:
        raise UsageError(f"--epsilon needs {a.dim} entries")
    rep = RunReport("twist", {"algebra": args.algebra, "epsilon": [str(x) for x in eps]})
    try:
        tw = alg_mod.twist(a, eps)
    except alg_mod.AlgebraError as exc:
        raise UsageError(f"epsilon: {exc}") from exc
    ver = alg_mod.verify_algebra(tw)
    rep.check("twisted_algebra", ver.failures, ver.ok)
    doc = tw.to_doc()
    rep.extra["algebra"] = doc
    print(json.dumps(doc), file=out)
    return rep


def cmd_algebra(args, out) -> RunReport:
    a = _load_algebra(args.algebra)
    rep = RunReport("algebra", {"algebra": args.algebra, "seed": args.seed})
    ver = alg_mod.verify_algebra(a)
    rep.check("algebra_axioms", ver.failures, ver.ok)
    for f in ver.failures:
        print(f, file=out)
    if not ver.ok:
        return rep
    dec = alg_mod.decompose(a, seed=args.seed)
    rep.residuals["semisimple"] = dec.semisimple
    rep.residuals["block_dims"] = dec.block_dims
    rep.extra["idempotents"] = [[str(x) if a.exact else _complex_doc(x) for x in e] for e in dec.idempotents]
    print(f"blocks: {dec.block_dims} ({'semisimple' if dec.semisimple else 'not semisimple'})", file=out)
    for e in rep.extra["idempotents"]:
        print("idempotent:", e, file=out)
    return rep


# -- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--tol", type=float, default=None, help="tolerance for floating checks")
    common.add_argument("--json", metavar="FILE", help="also write the report as JSON")

    p = _Parser(prog="fforge", description="F-manifold and Frobenius manifold checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gw", parents=[common], help="genus-zero invariants of P^r")
    g.add_argument("--r", type=int, required=True)
    g.add_argument("--max-degree", type=int, default=3)
    g.add_argument("--emit-potential", metavar="FILE")
    g.set_defaults(func=cmd_gw)

    w = sub.add_parser("wdvv", parents=[common], help="check a potential against WDVV")
    w.add_argument("--potential", required=True, metavar="FILE")
    w.add_argument("--metric", metavar="FILE")
    w.add_argument("--projective", type=int, metavar="R", help="also check the Euler field of P^R")
    w.set_defaults(func=cmd_wdvv)

    s = sub.add_parser("assoc", parents=[common], help="check a multiplication tensor")
    s.add_argument("--tensor", required=True, metavar="FILE")
    s.set_defaults(func=cmd_assoc)

    an = sub.add_parser("an", parents=[common], help="A_n unfolding checks")
    an.add_argument("--n", type=int, required=True)
    src = an.add_mutually_exclusive_group(required=True)
    src.add_argument("--coeffs", metavar="FILE")
    src.add_argument("--random", action="store_true")
    an.add_argument("--samples", type=int, default=20)
    an.add_argument("--fd-step", type=float, default=saito.DEFAULT_FD_STEP)
    an.set_defaults(func=cmd_an)

    f = sub.add_parser("fan", parents=[common], help="permutohedral fan")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--verify", action="store_true")
    f.add_argument("--locate", metavar="V")
    f.set_defaults(func=cmd_fan)

    t = sub.add_parser("twist", parents=[common], help="twist an algebra by a virtual identity")
    t.add_argument("--algebra", required=True, metavar="FILE")
    t.add_argument("--epsilon", required=True)
    t.set_defaults(func=cmd_twist)

    a = sub.add_parser("algebra", parents=[common], help="verify and decompose an algebra")
    a.add_argument("--algebra", required=True, metavar="FILE")
    a.set_defaults(func=cmd_algebra)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        rep = args.func(args, out)
    except UsageError as exc:
        print(f"fforge {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        _write_json(args.json, rep.to_doc())
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
