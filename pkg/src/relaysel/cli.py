"""Command line entry point: ``relaysel run`` drives a sweep and writes CSV.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 input/output failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import build_config, load_config
from .errors import ConfigError, NumericError
from .experiment import consensus_trace, emit_csv, emit_trace_csv, run_sweep

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysel",
        description="MMSE relay beamforming and relay-selection sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a sweep and write a results CSV")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--seed", type=int, help="master seed (overrides config)")
    run.add_argument("--out", default="results.csv", help="results CSV path")
    run.add_argument("--sweep", choices=("snr", "m"), help="sweep axis")
    run.add_argument(
        "--methods",
        help="comma list from none,lmmsec,smmsec,exhaustive (overrides config)",
    )
    run.add_argument("--trials", type=int, help="Monte Carlo repetitions per point")
    run.add_argument(
        "--solver", choices=("centralized", "consensus"), help="weight solver"
    )
    run.add_argument(
        "--trace",
        help="write the consensus iteration trace of the first point's full set",
    )
    run.add_argument("--figures", help="directory for summary figures")
    return parser


def _cli_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    if args.sweep is not None:
        overrides["sweep"] = args.sweep
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.methods is not None:
        overrides["methods"] = tuple(
            tok.strip() for tok in args.methods.split(",") if tok.strip()
        )
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.solver is not None:
        overrides["solver"] = args.solver
    return overrides


def run_command(args: argparse.Namespace) -> int:
    if args.config:
        cfg = load_config(args.config, _cli_overrides(args))
    else:
        cfg = build_config(_cli_overrides(args))

    table = run_sweep(cfg)
    emit_csv(table, args.out)
    n_failed = sum(s.n_failed for s in table.summary)
    print(f"wrote {len(table.rows)} rows to {args.out}" + (
        f" ({n_failed} failed solves)" if n_failed else ""
    ))
    for s in table.summary:
        print(
            f"  {s.method:11s} {s.sweep_param}={s.sweep_value:<6g} "
            f"mean SINR {s.mean_sinr_db:+.3f} dB  mean MMSE {s.mean_mmse:.6g}"
        )

    if args.trace:
        if cfg.solver != "consensus":
            logger.warning("--trace is only meaningful with --solver consensus")
            emit_trace_csv([], args.trace)
        else:
            emit_trace_csv(consensus_trace(cfg), args.trace)
        print(f"wrote consensus trace to {args.trace}")

    if args.figures:
        from .plotting import render_figures

        for path in render_figures(table, args.figures):
            print(f"wrote figure {path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_command(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
