"""Command-line interface.

Subcommands: recover, phase, doa, illustrative, selftest.  Exit codes:
0 success, 1 usage/config error, 2 solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .admm import SolverError
from .oracles import OracleError

USAGE_ERROR = 1
SOLVER_ERROR = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ramfreq",
        description="Gridless frequency recovery by reweighted atomic-norm minimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (see docs/config_schema.json)")
    common.add_argument("--seed", type=int, help="RNG seed override")
    common.add_argument("--out", help="output directory override")
    common.add_argument("--threads", type=int, help="worker process count override")
    common.add_argument("--format", choices=("csv", "json"), help="tabular output format")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub.add_parser("recover", parents=[common], help="recover one dataset's spectrum")
    sub.add_parser("phase", parents=[common], help="sparsity-separation phase transition sweep")
    doa = sub.add_parser("doa", parents=[common], help="DOA simulation on the sparse array")
    doa.add_argument("--coherent", action="store_true", help="make sources 1 and 3 coherent")
    sub.add_parser("illustrative", parents=[common], help="single-instance iteration trace")
    sub.add_parser("selftest", parents=[common], help="run the property/oracle self checks")
    return parser


def _load_config(args):
    from .harness import ExperimentConfig

    doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ValueError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"{args.config}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
            )
        if not isinstance(doc, dict):
            raise ValueError(f"{args.config}: top level must be a JSON object")
    cfg = ExperimentConfig.from_dict(doc, kind=args.command)
    import dataclasses

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.format is not None:
        overrides["table_format"] = args.format
    if getattr(args, "coherent", False):
        overrides["coherent"] = True
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "selftest":
            from .selftest import run_selftest

            return 0 if run_selftest() else USAGE_ERROR
        cfg = _load_config(args)
        from . import harness

        runner = {
            "recover": harness.run_recover,
            "phase": harness.run_phase,
            "doa": harness.run_doa,
            "illustrative": harness.run_illustrative,
        }[args.command]
        runner(cfg)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (SolverError, OracleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
