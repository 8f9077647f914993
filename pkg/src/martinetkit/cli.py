"""Command-line front end: analyze, trace, blowup, chain, selftest.

Exit codes: 0 success, 1 selftest failure, 2 usage or parse error,
3 invariant failure, 4 start point off the surface, 5 degenerate chart,
6 shooting failure in a chain.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .blowup import (DegenerateChartError, chart_map, strict_transform, transformed_characteristic,
                     verify_div_compat)
from .examples import (BUILTIN_NAMES, ChainOptions, builtin, curvature_polynomial, derived_field,
                       printed_field, run_chain)
from .flow import IntegratorOpts, OffSurfaceError, integrate_orbit
from .martinet import (Distribution, InvariantError, MartinetData, check_bracket_generating,
                       classify_point)
from .poly import ParseError
from .selftest import run_selftest
from .svg import polyline_plot

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVARIANT, EXIT_OFF_SURFACE, EXIT_CHART, EXIT_SHOOTING = range(7)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load(source: str) -> Distribution:
    path = Path(source)
    if path.exists():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}", EXIT_USAGE)
        try:
            return Distribution.from_dict(data)
        except ParseError as exc:
            raise CliError(f"{source}: {exc}", EXIT_USAGE)
        except (KeyError, ValueError, TypeError) as exc:
            raise CliError(f"{source}: invalid distribution: {exc}", EXIT_USAGE)
    if source in BUILTIN_NAMES:
        return builtin(source)
    raise CliError(f"{source}: no such file or builtin (builtins: {', '.join(BUILTIN_NAMES)})", EXIT_USAGE)


def _point(text: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three coordinates, got {text!r}")
    return vals


def _center(text: str):
    names = {"x": 1, "y": 2, "z": 3, "1": 1, "2": 2, "3": 3}
    try:
        return tuple(names[v.strip()] for v in text.split(","))
    except KeyError:
        raise argparse.ArgumentTypeError(f"center entries must be among x, y, z or 1, 2, 3: {text!r}")


def _index(text: str) -> int:
    return _center(text)[0]


def _sign(text: str) -> int:
    if text in ("+", "+1", "1"):
        return 1
    if text in ("-", "-1"):
        return -1
    raise argparse.ArgumentTypeError("sign must be + or -")


def _emit(args, payload: dict, text_lines):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _write(args, name: str, content: str) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(content)
    return path


def cmd_analyze(args) -> int:
    D = _load(args.input)
    try:
        md = MartinetData.from_distribution(D)
        quotient = md.tangency_quotient()
    except InvariantError as exc:
        raise CliError(f"invariant failure: {exc}", EXIT_INVARIANT)
    points = []
    for p in args.point or []:
        points.append({"point": list(p), "bracket_generating": check_bracket_generating(D, p, args.depth),
                       "stratum": classify_point(md, p, args.tol).value})
    payload = {"name": D.name, "h_raw": str(md.h_raw), "h": str(md.h), "sigma_empty": md.sigma_empty,
               "Z": md.Z.to_strings(), "tangency_certificate": {"ok": True, "quotient": str(quotient)},
               "points": points}
    lines = [f"distribution: {D.name or args.input}",
             f"det[X, Y, [X, Y]] = {md.h_raw}",
             f"reduced h = {md.h}"]
    if md.sigma_empty:
        lines.append("Sigma empty (h is a nonzero constant)")
    lines += [f"Z = {md.Z}", f"tangency certificate: Z.h = ({quotient}) * h"]
    for e in points:
        verdict = "bracket-generating" if e["bracket_generating"] else "NOT bracket-generating"
        lines.append(f"at {tuple(e['point'])}: {verdict} (depth {args.depth}), stratum {e['stratum']}")
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_trace(args) -> int:
    D = _load(args.input)
    try:
        md = MartinetData.from_distribution(D)
    except InvariantError as exc:
        raise CliError(f"invariant failure: {exc}", EXIT_INVARIANT)
    opts = IntegratorOpts(max_time=args.t_max, max_steps=args.max_steps, stop_speed=args.stop_speed)
    try:
        tr = integrate_orbit(md, args.p0, opts, direction=args.direction)
    except OffSurfaceError as exc:
        raise CliError(str(exc), EXIT_OFF_SURFACE)
    csv_path = _write(args, args.output, tr.to_csv())
    files = [str(csv_path)]
    if args.svg:
        pts = [(p[0], p[1]) for p in tr.points]
        svg = polyline_plot([("orbit", pts)], f"orbit of Z from {args.p0}", "x", "y")
        files.append(str(_write(args, Path(args.output).with_suffix(".svg").name, svg)))
    payload = {"termination": tr.termination.value, "samples": len(tr.times), "t_end": tr.times[-1],
               "end": list(tr.end), "arc_length": tr.arc_length, "div_integral": tr.div_integral,
               "files": files}
    lines = [f"termination: {tr.termination.value} after {len(tr.times)} samples (t = {tr.times[-1]:.6g})",
             f"end point: {tuple(round(v, 12) for v in tr.end)}",
             f"arc length: {tr.arc_length:.12g}", f"divergence integral: {tr.div_integral:.12g}",
             *[f"wrote {f}" for f in files]]
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_blowup(args) -> int:
    D = _load(args.input)
    try:
        c = chart_map(args.center, args.j, args.sign)
    except DegenerateChartError as exc:
        raise CliError(f"degenerate chart: {exc}", EXIT_CHART)
    try:
        md = MartinetData.from_distribution(D)
    except InvariantError as exc:
        raise CliError(f"invariant failure: {exc}", EXIT_INVARIANT)
    if md.sigma_empty:
        raise CliError("Sigma is empty; nothing to blow up", EXIT_CHART)
    tr = strict_transform(md.h, c)
    payload = {"chart": c.to_dict(), "alpha": tr.alpha, "beta": c.beta, "total": str(tr.total),
               "strict": str(tr.strict)}
    lines = [f"chart: {' , '.join(payload['chart']['images'])}",
             f"alpha = {tr.alpha}, beta = {c.beta}",
             f"total transform = {tr.total}", f"strict transform = {tr.strict}"]
    if tr.alpha == 0:
        print("warning: center not in zero set (alpha = 0)", file=sys.stderr)
        _emit(args, payload, lines)
        return EXIT_OK
    try:
        tc = transformed_characteristic(D, md.h, c)
    except AssertionError as exc:
        raise CliError(f"invariant failure: {exc}", EXIT_INVARIANT)
    rep = verify_div_compat(D, md.h, c, n=args.samples, seed=args.seed, margin=args.margin)
    payload.update({"Zstar": tc.Zstar.to_strings(), "Ztilde": tc.Ztilde.to_strings(),
                    "W": tc.W.to_strings(), "extends_smoothly": tc.extends_smoothly,
                    "compat": rep.to_dict()})
    lines += [f"Ztilde = {tc.Ztilde}", f"W = {tc.W}",
              f"extends smoothly across the divisor: {tc.extends_smoothly}",
              f"divergence compatibility: max |LHS - RHS| = {rep.max_abs_err:.3e} over {rep.n} points"]
    _emit(args, payload, lines)
    return EXIT_OK


def _chain_figures(report):
    phase, xz = [], []
    for k, ln in enumerate(report.links):
        loop = [p for _, p in reversed(ln.backward)] + [p for _, p in ln.forward[1:]]
        phase.append((f"loop {k}", [(p[0], p[1]) for p in loop]))
        xz.append((f"loop {k}", [(p[0], p[2]) for p in loop]))
    return (polyline_plot(phase, "planar loops", "x", "y"),
            polyline_plot(xz, "chain of loops, (x, z) projection", "x", "z"))


def cmd_chain(args) -> int:
    if not 0 < args.z0 <= 1:
        raise CliError("z0 must lie in (0, 1]", EXIT_USAGE)
    opts = ChainOptions(field=args.field, slack=args.slack)
    report = run_chain(args.z0, args.n, opts)
    files = [str(_write(args, "chain.json", json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"))]
    if report.links:
        phase, xz = _chain_figures(report)
        files.append(str(_write(args, "chain_phase.svg", phase)))
        files.append(str(_write(args, "chain_xz.svg", xz)))
    if args.csv:
        for k, ln in enumerate(report.links):
            rows = ["t,x,y,z"] + [f"{-t!r},{p[0]!r},{p[1]!r},{p[2]!r}" for t, p in reversed(ln.backward[1:])]
            rows += [f"{t!r},{p[0]!r},{p[1]!r},{p[2]!r}" for t, p in ln.forward]
            files.append(str(_write(args, f"link_{k}.csv", "\n".join(rows) + "\n")))
    payload = {"z_seq": report.z_seq, "len_seq": report.len_seq, "K": report.K,
               "violations": [c[0] for c in report.ineq_violations], "error": report.error, "files": files}
    lines = [f"z0 = {args.z0}, links built: {len(report.links)}, K = {report.K:.6g}"]
    for k, ln in enumerate(report.links):
        lines.append(f"  link {k}: xbar = {ln.xbar:.12g}  z- = {ln.z_minus:.12g}  z+ = {ln.z_plus:.12g}  "
                     f"len_planar = {ln.len_planar:.8g}  len_3d = {ln.len_3d:.8g}")
    for name, lhs, rhs, ok in report.checks:
        lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}: {lhs:.6g} <= {rhs:.6g}")
    lines += [f"wrote {f}" for f in files]
    _emit(args, payload, lines)
    if report.error:
        print(f"shooting failure: {report.error}", file=sys.stderr)
        return EXIT_SHOOTING
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed, cases=args.cases, data=args.data)
    payload = {"seed": args.seed, "results": [r.to_dict() for r in results],
               "passed": all(r.passed for r in results)}
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}" + (f"  {r.detail}" if r.detail else "")
             for r in results]
    failed = [r.name for r in results if not r.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} passed" +
                 (f"; failed: {', '.join(failed)}" if failed else ""))
    _emit(args, payload, lines)
    return EXIT_OK if not failed else EXIT_FAIL


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="classification tolerance")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for written files")
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="martinetkit",
                                description="Martinet surfaces, characteristic flows and blow-up checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("json", "text"), default="text")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="Martinet surface and characteristic field")
    a.add_argument("input", help="distribution JSON file or builtin name")
    a.add_argument("--point", type=_point, action="append", help="x,y,z to test (repeatable)")
    a.add_argument("--depth", type=int, default=4, help="maximal bracket length")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("trace", parents=[common], help="integrate the characteristic field on the surface")
    t.add_argument("input")
    t.add_argument("--p0", type=_point, required=True)
    t.add_argument("--direction", type=int, choices=(1, -1), default=1)
    t.add_argument("--t-max", type=float, default=1e6)
    t.add_argument("--max-steps", type=_positive_int, default=200000)
    t.add_argument("--stop-speed", type=float, default=1e-8)
    t.add_argument("--output", default="trace.csv", help="CSV file name inside --out-dir")
    t.add_argument("--svg", action="store_true", help="also write an (x, y) polyline plot")
    t.set_defaults(func=cmd_trace)

    b = sub.add_parser("blowup", parents=[common], help="directional blow-up chart and checks")
    b.add_argument("input")
    b.add_argument("--center", type=_center, required=True, help="e.g. x,y or 1,2,3")
    b.add_argument("--j", type=_index, required=True, help="direction variable")
    b.add_argument("--sign", type=_sign, default=1)
    b.add_argument("--samples", type=_positive_int, default=200)
    b.add_argument("--margin", type=float, default=0.1, help="minimal distance to the divisor")
    b.set_defaults(func=cmd_blowup)

    c = sub.add_parser("chain", parents=[common], help="chain of homoclinic loops")
    c.add_argument("--z0", type=float, default=0.5)
    c.add_argument("--n", type=_positive_int, default=4, help="number of loops")
    c.add_argument("--field", choices=("printed", "derived"), default="printed")
    c.add_argument("--slack", type=float, default=0.05)
    c.add_argument("--csv", action="store_true", help="write one CSV per loop")
    c.set_defaults(func=cmd_chain)

    s = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    s.add_argument("--cases", type=_positive_int, default=100)
    s.add_argument("--data", help="alternative builtins JSON file")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
