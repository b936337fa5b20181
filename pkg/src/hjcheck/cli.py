"""Command-line entry point.

Exit codes: 0 when every verdict passes, 1 when any check fails, 2 for
usage, config and validation errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hjcheck import __version__
from hjcheck.config import ConfigError, bundled_configs, load
from hjcheck.crosscheck import run_cross_check
from hjcheck.errors import HJError
from hjcheck.models.registry import REGISTRY
from hjcheck.runner import TOOLKIT, clean, run

log = logging.getLogger("hjcheck")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SUBCOMMAND_CHECKS = {
    "run": None,
    "check-lagrangian": ("lagrangian",),
    "check-hj": ("hj",),
    "flow-compare": ("flow",),
    "rank-scan": ("rank",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjcheck",
        description="Numerical Hamilton-Jacobi checks on fibered almost-Poisson manifolds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    helps = {
        "run": "run every check listed in the config",
        "check-lagrangian": "coordinate residual grid with the subspace cross-check",
        "check-hj": "Hamilton-Jacobi condition against relatedness, per model family",
        "flow-compare": "lifted base flow against the upstairs flow, with CSV dumps",
        "rank-scan": "rank of the bivector over the grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("config", help="path to a JSON config, or the name of a bundled one")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--csv-dir", help="directory for trajectory CSV files")
        p.add_argument("--tol", type=float, help="override tolerances.defect_tol")
        p.add_argument("--grid", type=int, help="override the grid count on every axis")

    p = sub.add_parser("list-models", help="registry names, parameters and bundled configs")
    p.add_argument("--out")

    p = sub.add_parser("cross-check", help="randomized residual test against subspace test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--out")
    return parser


def emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_list_models(args) -> int:
    report = {
        "toolkit": TOOLKIT,
        "version": __version__,
        "models": [
            {"name": name, "params": entry.defaults, "description": entry.description,
             "hamiltonian_from_config": entry.hamiltonian_coords is not None}
            for name, entry in sorted(REGISTRY.items())
        ],
        "bundled_configs": bundled_configs(),
    }
    emit(report, args.out)
    return EXIT_OK


def cmd_cross_check(args) -> int:
    if args.samples < 1:
        print("hjcheck: error: --samples must be positive", file=sys.stderr)
        return EXIT_CONFIG
    samples = run_cross_check(args.seed, args.samples)
    disagreements = [s for s in samples if not s.agree]
    report = clean({
        "toolkit": TOOLKIT,
        "version": __version__,
        "seed": args.seed,
        "samples": len(samples),
        "disagreements": len(disagreements),
        "residual_pass": sum(s.residual_holds for s in samples),
        "records": [
            {"index": i, "model": s.model, "point": s.point, "residual": s.residual,
             "residual_holds": s.residual_holds, "subspace_holds": s.subspace_holds,
             "subspace_defect": s.subspace_defect, "agree": s.agree}
            for i, s in enumerate(samples)
        ],
    })
    emit(report, args.out)
    return EXIT_OK if not disagreements else EXIT_FAIL


def cmd_config(args) -> int:
    try:
        exp = load(args.config, tol=args.tol, grid=args.grid)
        forced = SUBCOMMAND_CHECKS[args.command]
        if forced is not None:
            exp = exp.with_checks(forced)
        if not exp.checks:
            print("hjcheck: error: no checks requested", file=sys.stderr)
            return EXIT_CONFIG
        missing = {"flow": exp.flow is None, "hj": exp.section is None,
                   "lagrangian": exp.section is None}
        for check in exp.checks:
            if missing.get(check):
                raise ConfigError(f"the {check!r} check needs "
                                  f"{'a flow block' if check == 'flow' else 'a section'}",
                                  exp.source)
        log.info("running %s on %s", ", ".join(exp.checks), exp.source)
        report = run(exp, csv_dir=args.csv_dir)
    except HJError as exc:
        print(f"hjcheck: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit(report, args.out)
    return EXIT_OK if report["summary"]["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "list-models":
        return cmd_list_models(args)
    if args.command == "cross-check":
        return cmd_cross_check(args)
    return cmd_config(args)


if __name__ == "__main__":
    sys.exit(main())
