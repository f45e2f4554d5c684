"""Command-line entry point: ``mprkimex {run,fig2,converge,scan,tableau}``.

Exit codes: 0 on success (a Diverged verdict is a result, not an error),
1 for usage or configuration errors, 2 when the implicit stage solver fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .advdiff import ConfigError
from .stage_solver import StageSolverError
from .tableau import augment_implicit, check_order_conditions, format_tableau, heun, make_scheme

EXIT_USAGE = 1
EXIT_SOLVER = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _range(text: str) -> tuple:
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None


def _out(args) -> Path:
    return Path(args.out) if args.out else harness.output_dir()


def cmd_run(args) -> int:
    res = harness.run(args.target, out=_out(args), snapshot_every=args.snapshot_every)
    print(res.summary_line())
    if res.report.error:
        return EXIT_SOLVER
    return 0


def cmd_fig2(args) -> int:
    table = harness.reproduce_fig2(out=_out(args) if args.write else None)
    print(table.format())
    print("verdict pattern:", "matches" if table.all_match else "DOES NOT match")
    return EXIT_SOLVER if any(r.error for r in table.rows) else 0


def _convergence_problem(target: str, m: int):
    # ode:<variant>[:<stiffness>] selects the built-in smooth split ODE
    if target.startswith("ode"):
        parts = target.split(":")
        variant = parts[1] if len(parts) > 1 else "astable2"
        stiff = float(parts[2]) if len(parts) > 2 else 1.0
        return harness.smooth_split_problem(variant, stiff=stiff, m=m)
    return harness.benchmark_problem(harness.resolve_config(target))


def cmd_converge(args) -> int:
    try:
        problem = _convergence_problem(args.target, args.m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    table = harness.convergence(problem, args.halvings)
    print(table.format())
    return 0


def cmd_scan(args) -> int:
    result = harness.scan(args.variant, args.re, args.im, m=args.m, part=args.part,
                          levels=args.levels)
    text = result.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_tableau(args) -> int:
    scheme = make_scheme(heun(), args.m, args.levels)
    if args.variant != "none":
        scheme = augment_implicit(scheme, args.variant)
    sections = [("base", scheme.base), ("slow", scheme.slow), ("fast", scheme.fast)]
    for label, tab in sections:
        print(f"# {label}")
        print(format_tableau(tab), end="")
    if scheme.implicit is not None:
        print(f"# implicit ({scheme.implicit.variant.value}), base")
        print(_format_matrix(scheme.implicit_base.a_tilde, scheme.implicit_base.c_tilde), end="")
        print(f"# implicit ({scheme.implicit.variant.value}), slow/fast")
        print(_format_matrix(scheme.implicit.a_tilde, scheme.implicit.c_tilde), end="")
    print("# order conditions")
    print(check_order_conditions(scheme))
    return 0


def _format_matrix(a, c) -> str:
    lines = [f"s={len(c)}"]
    lines += [" ".join(format(float(v), ".17g") for v in (c[i], *a[i])) for i in range(len(c))]
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mprkimex", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a preset (fig2a..fig2f) or a config file")
    r.add_argument("target")
    r.add_argument("--out", help=f"output directory (default ${harness.OUTPUT_ENV})")
    r.add_argument("--snapshot-every", type=int, default=None)
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fig2", help="run all six presets and print the summary table")
    f.add_argument("--write", action="store_true", help="also write per-run CSVs")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fig2)

    c = sub.add_parser("converge", help="observed order of accuracy")
    c.add_argument("target", help="config file, preset, or ode:<variant>[:<stiffness>]")
    c.add_argument("--halvings", type=int, default=4)
    c.add_argument("--m", type=int, default=2)
    c.set_defaults(func=cmd_converge)

    s = sub.add_parser("scan", help="stability-function scan as CSV")
    s.add_argument("variant", choices=["none", "astable2", "lstable1"])
    s.add_argument("--re", type=_range, required=True, metavar="a:b:n")
    s.add_argument("--im", type=_range, default=None, metavar="a:b:n")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--levels", type=int, default=1)
    s.add_argument("--part", choices=["implicit", "explicit", "fast", "slow"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_scan)

    t = sub.add_parser("tableau", help="print the tableaux of an m-rate scheme")
    t.add_argument("m", type=int)
    t.add_argument("--variant", choices=["none", "astable2", "lstable1"], default="none")
    t.add_argument("--levels", type=int, default=1)
    t.set_defaults(func=cmd_tableau)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageSolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
