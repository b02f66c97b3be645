"""Command-line entry point: ``run``, ``audit`` and ``curves``.

Exit codes: 0 success, 1 invalid input or config, 2 audit failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import audit, experiment
from .errors import InvalidInputError

EXIT_OK, EXIT_INVALID, EXIT_AUDIT, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _number_list(kind):
    def parse(text: str):
        try:
            vals = [kind(v) for v in text.replace(",", " ").split()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a list of {kind.__name__}: {text!r}") from None
        if not vals:
            raise argparse.ArgumentTypeError("empty list")
        return vals
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wgan-robust", description="Robust estimation with constrained W-GAN critics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment grid from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--smoke", action="store_true", help="only cells with p <= 20 and n <= 1024")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, default=None, help="base seed (overrides the config)")

    aud = sub.add_parser("audit", help="run invariant property suites")
    aud.add_argument("--suite", required=True, choices=[*audit.SUITES, "all"])

    cur = sub.add_parser("curves", help="write theoretical error-bound curves as CSV")
    cur.add_argument("--p", type=_number_list(int), required=True)
    cur.add_argument("--n", type=_number_list(int), required=True)
    cur.add_argument("--L", type=int, default=2)
    cur.add_argument("--eps", type=_number_list(float), default=[0.0])
    cur.add_argument("--C", type=float, default=1.0)
    cur.add_argument("--variant", choices=["dense", "sparse", "banded"], default="dense")
    cur.add_argument("--k", type=int, default=None)
    cur.add_argument("--out", required=True)
    return parser


def _cmd_run(args) -> int:
    cfg = experiment.load_config(args.config)
    if args.smoke:
        cfg.smoke = True
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs < 1:
        raise InvalidInputError("--jobs must be positive")
    cfg.validate()
    if not cfg.cells():
        raise InvalidInputError("no grid cells left to run (check --smoke against the grids)")
    rows, summary = experiment.run_experiment(cfg, jobs=args.jobs)
    experiment.write_outputs(cfg, rows, summary, cfg.out)
    failed = sum(r.status != "ok" for r in rows)
    print(f"{len(rows)} runs over {len(summary)} cells ({failed} diverged) -> {os.path.abspath(cfg.out)}")
    for s in summary:
        print(f"  {s['task']} {s['model']} p={s['p']} n={s['n']} alpha={s['alpha']}: {s['table_cell']}")
    return EXIT_OK


def _cmd_audit(args) -> int:
    results = audit.run_suite(args.suite)
    print(audit.format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_AUDIT


def _cmd_curves(args) -> int:
    path = experiment.emit_theory_curves(args.p, args.n, args.L, args.eps, args.C, args.out, args.variant, args.k)
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "audit": _cmd_audit, "curves": _cmd_curves}[args.command]
    try:
        return handler(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
