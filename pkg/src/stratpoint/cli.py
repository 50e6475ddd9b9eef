"""``stratpoint`` command line.

Exit codes: 0 ok, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .core import PolyProblem, to_rational
from .jets import build_normal_form, jet_sp, normal_form_jacobian, point_code
from .problems import BUILTINS, ProblemFileError, SqpFile, format_text, load
from .qp import InfeasibleSubproblem
from .suites import SUITES, run_report
from .tracer import (
    MF_BOUNDARY,
    SP_INTERIOR,
    GridSpec,
    boundary_probe,
    export_trace,
    trace_grid,
    trace_problem,
)
from .transforms import apply_slack, mf2sp, sp2mf, verify_commutation

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def _vector(text: str | None, label: str) -> tuple[Fraction, ...]:
    if text is None or text.strip() == "":
        return ()
    try:
        return tuple(to_rational(v) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--{label}: expected comma-separated numbers, got {text!r}") from None


def _load(source: str):
    try:
        return load(source)
    except ProblemFileError as exc:
        raise UsageError(f"{source}: {exc}") from None


def _as_problem(obj) -> PolyProblem:
    return obj.sqp.to_problem() if isinstance(obj, SqpFile) else obj


def _point(prob: PolyProblem, args):
    x, y = _vector(args.x, "x"), _vector(args.y, "y")
    if len(x) != prob.size.n or len(y) != prob.size.p:
        raise UsageError(
            f"point has dimensions (x: {len(x)}, y: {len(y)}), problem expects "
            f"(x: {prob.size.n}, y: {prob.size.p})")
    return x, y


def _emit(args, text: str, doc: dict):
    if getattr(args, "json", False):
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text, end="")


def _yes(v: bool) -> str:
    return "yes" if v else "no"


# ---------------------------------------------------------------------------
# commands


def cmd_code(args) -> int:
    prob = _as_problem(_load(args.problem))
    x, y = _point(prob, args)
    pc = point_code(prob, x, y)
    code = pc.code
    sp = ", ".join(code.format_pair(pr) for pr in sorted(code.sp_pairs, key=_pair_key))
    mf = ", ".join(code.format_pair(pr) for pr in sorted(code.mf_pairs, key=_pair_key))
    text = (
        f"I0: {{{','.join(str(i) for i in sorted(code.i0))}}}\n"
        f"SP pairs: {{{sp}}}\n"
        f"MF pairs: {{{mf}}}\n"
        f"feasible: {_yes(pc.feasible)}\n"
        f"stationary: {_yes(pc.stationary)}\n"
        f"MFCQ violated: {_yes(pc.mfcq_violated)}\n"
    )
    doc = {"code": code.to_json(), "feasible": pc.feasible, "stationary": pc.stationary,
           "mfcq_violated": pc.mfcq_violated}
    _emit(args, text, doc)
    return EXIT_OK


def _pair_key(pr):
    return (len(pr[0]) + len(pr[1]), sorted(pr[0]), sorted(pr[1]))


def cmd_normal_form(args) -> int:
    prob = _as_problem(_load(args.problem))
    x, y = _point(prob, args)
    jet = jet_sp(prob, x, y)
    nf = build_normal_form(jet)
    _, det = normal_form_jacobian(jet)
    out = SqpFile(nf.sqp, nf.y_bar)
    if args.out:
        Path(args.out).write_text(format_text(out))
    ok = nf.round_trip_ok and abs(det) == 1
    text = (
        f"normal form size: n={nf.sqp.size.n} m_le={nf.sqp.size.m_le} "
        f"m_eq={nf.sqp.size.m_eq} p={nf.sqp.p}\n"
        f"c: ({', '.join(str(v) for v in nf.sqp.c)})\n"
        f"y_bar: ({', '.join(str(v) for v in nf.y_bar)})\n"
        f"jacobian determinant: {det}\n"
        f"round trip: {'ok' if nf.round_trip_ok else 'FAILED'}\n"
    )
    if not args.out:
        text += format_text(out)
    doc = {"determinant": str(det), "round_trip": nf.round_trip_ok,
           "sqp": json.loads(format_text(out))}
    _emit(args, text, doc)
    return EXIT_OK if ok else EXIT_FAIL


def _commutation_samples(prob: PolyProblem):
    from .suites import grid_points

    return grid_points(prob.size.n, prob.size.p, (-1, 0, 1))[:64]


def cmd_transform(args) -> int:
    prob = _as_problem(_load(args.problem))
    samples = _commutation_samples(prob)
    if args.kind == "mf2sp":
        if prob.size.m_eq:
            raise UsageError(f"mf2sp needs a problem without equalities (m_eq = {prob.size.m_eq})")
        tp = mf2sp(prob)
    elif args.kind == "sp2mf":
        tp = sp2mf(prob)
    else:
        if not 1 <= args.index <= prob.size.m_le:
            raise UsageError(f"--index must name an inequality 1..{prob.size.m_le}")
        # g <= 0 is the same as -g >= 0
        tp = apply_slack(-prob.g[args.index - 1])
    report = verify_commutation(tp, samples)
    lines = []
    if tp.problem is not None:
        if args.out:
            Path(args.out).write_text(format_text(tp.problem))
        lines.append(f"objective: {tp.problem.f}")
        lines += [f"g{i + 1}: {g} <= 0" for i, g in enumerate(tp.problem.g)]
        lines += [f"h{j + 1}: {h} = 0" for j, h in enumerate(tp.problem.h)]
    else:
        f1, f2 = tp.functions
        lines.append(f"f'1: {f1} >= 0")
        lines.append(f"f'2: {f2} = 0")
    if tp.code_action is not None:
        lines.append(f"code action: I0 {tp.code_action.i0_action}, pairs {tp.code_action.pair_action}")
    lines.append(f"commutation: {report.checked - len(report.failures)}/{report.checked} samples")
    lines += [f"  - {f}" for f in report.failures]
    if tp.problem is not None and not args.out:
        lines.append(format_text(tp.problem).rstrip("\n"))
    doc = {"kind": tp.kind, "commutation_failures": report.failures,
           "checked": report.checked,
           "problem": json.loads(format_text(tp.problem)) if tp.problem is not None else None}
    if tp.code_action is not None:
        doc["code_action"] = {"i0": tp.code_action.i0_action, "pairs": tp.code_action.pair_action}
    _emit(args, "\n".join(lines) + "\n", doc)
    return EXIT_OK if report.ok else EXIT_FAIL


def parse_grid(text: str, fixes: list[str]) -> GridSpec:
    """``k:min:max:steps,...`` (1-based ``k``) plus ``--fix k=value``."""
    axes, fixed = {}, {}
    try:
        for part in filter(None, (text or "").split(",")):
            k, lo, hi, steps = part.split(":")
            axes[int(k) - 1] = (to_rational(lo), to_rational(hi), int(steps))
        for f in fixes or []:
            k, v = f.split("=")
            fixed[int(k) - 1] = to_rational(v)
        return GridSpec(axes, fixed)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad grid specification: {exc}") from None


def _consistency(records) -> list[str]:
    bad = []
    for r in records:
        if r.classification == SP_INTERIOR and (not r.stationary or r.mfcq_violated):
            bad.append(f"y={[str(v) for v in r.y]}: sp_interior record inconsistent")
        if r.classification == MF_BOUNDARY and not r.mfcq_violated:
            bad.append(f"y={[str(v) for v in r.y]}: mf_boundary record without MF pair")
    return bad


def cmd_trace(args) -> int:
    obj = _load(args.problem)
    grid = parse_grid(args.grid, args.fix)
    p = obj.sqp.p if isinstance(obj, SqpFile) else obj.size.p
    try:
        grid.check(p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    projection = None
    if args.project:
        try:
            i, j = (int(v) - 1 for v in args.project.split(","))
        except ValueError:
            raise UsageError("--project expects two 1-based coordinate indices") from None
        projection = (i, j)
    if args.format == "svg" and projection is None:
        raise UsageError("svg output needs --project")
    if isinstance(obj, SqpFile):
        records = trace_grid(obj.sqp, grid)
        n = obj.sqp.size.n
    else:
        records = trace_problem(obj, grid)
        n = obj.size.n
    try:
        data = export_trace(records, args.format, projection, p=p, n=n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    problems = _consistency(records)
    if args.distinguish is not None:
        if not isinstance(obj, SqpFile) or not obj.sqp.canonical:
            raise UsageError("--distinguish needs a canonical special quadratic problem")
        from .jets import param_index

        m = args.distinguish
        if not 1 <= m <= obj.sqp.size.m_le:
            raise UsageError(f"--distinguish must be 1..{obj.sqp.size.m_le}")
        skip = param_index(obj.sqp.size, "alpha", m)
        nodes = {tuple(v for k, v in enumerate(r.y) if k != skip) for r in records}
        try:
            probe = boundary_probe(obj.sqp, m, sorted(nodes))
        except InfeasibleSubproblem as exc:
            raise UsageError(f"boundary probe: {exc}") from None
        print(f"boundary probe m={m}: {probe.probes - len(probe.violations)}/{probe.probes} probes ok",
              file=sys.stderr)
        problems += probe.violations
    counts = {}
    for r in records:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    summary = ", ".join(f"{k}={counts[k]}" for k in sorted(counts))
    print(f"records: {len(records)} ({summary})", file=sys.stderr)
    for msg in problems:
        print(f"inconsistent: {msg}", file=sys.stderr)
    return EXIT_FAIL if problems else EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 0:
        raise UsageError("--trials must be non-negative")
    report, ok = run_report(args.suite, args.seed, args.trials)
    sys.stdout.write(report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_examples(args) -> int:
    for name, ex in BUILTINS.items():
        print(name)
        for fact in ex.facts:
            print(f"  {fact}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _default_seed() -> int:
    raw = os.environ.get("STRATPOINT_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        return DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratpoint",
        description="Exact combinatorial codes, normal forms and traces of stationary-point sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_arg(p):
        p.add_argument("problem", help="problem file or built-in example name")

    def point_args(p):
        p.add_argument("--x", help="state point, comma separated (fractions allowed)")
        p.add_argument("--y", help="parameter point, comma separated")
        p.add_argument("--json", action="store_true", help="structured output")

    p = sub.add_parser("code", help="combinatorial code at a point")
    problem_arg(p)
    point_args(p)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("normal-form", help="universal quadratic normal form at a point")
    problem_arg(p)
    point_args(p)
    p.add_argument("--out", help="write the normal form to this file")
    p.set_defaults(func=cmd_normal_form)

    p = sub.add_parser("transform", help="apply a regular transformation")
    problem_arg(p)
    p.add_argument("--kind", choices=("slack", "sp2mf", "mf2sp"), required=True)
    p.add_argument("--index", type=int, default=1, help="inequality for --kind slack")
    p.add_argument("--out", help="write the transformed problem to this file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("trace", help="trace a parameter grid")
    problem_arg(p)
    p.add_argument("--grid", required=True, help="k:min:max:steps,... with 1-based k")
    p.add_argument("--fix", action="append", default=[], help="k=value for a fixed parameter")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--project", help="two 1-based indices into (y, x) for svg")
    p.add_argument("--distinguish", type=int, help="run the boundary probe for inequality m")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("verify", help="run the randomized verification suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="list built-in examples")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
