import argparse
import sys
from pathlib import Path
from typing import List, Optional

from src import harness, verify
from src.config import OUTPUT_DIR
from src.logger_config import app_logger
from src.parser import SweepConfigParser

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", type=Path, help="sweep configuration XML file")
    parser.add_argument("--output-dir", type=Path, default=None)
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--max-sweeps", type=int, default=None, help="cap on burn-in sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filament-equilibrium",
        description="Equilibrium Monte Carlo and mean-field theory of nearly parallel vortex filaments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_override_flags(sub.add_parser("run", help="run a beta sweep"))
    _add_override_flags(sub.add_parser("resume", help="continue a sweep from its checkpoints"))

    table = sub.add_parser("table", help="re-emit comparison tables from stored records")
    table.add_argument("output_dir", type=Path, nargs="?", default=OUTPUT_DIR)

    check = sub.add_parser("verify", help="run the self-check suite")
    check.add_argument("--perturb-eta", type=float, default=0.0, help=argparse.SUPPRESS)
    check.add_argument("--skip-chains", action="store_true", help="skip the Monte Carlo checks")
    return parser


def _load_config(args: argparse.Namespace):
    return SweepConfigParser(str(args.config)).parse(
        output_dir=args.output_dir,
        master_seed=args.seed,
        workers=args.workers,
        max_sweeps=args.max_sweeps,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            results = verify.run_all(perturb_eta=args.perturb_eta, include_chains=not args.skip_chains)
            for result in results:
                print(result)
            failed = [r for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} checks passed")
            return EXIT_CHECK_FAILED if failed else EXIT_OK

        if args.command == "table":
            records = harness.load_records(args.output_dir)
            path = harness.emit_comparison_table(records, args.output_dir)
            print(path)
            return EXIT_OK

        cfg = _load_config(args)
        records = harness.run_sweep(cfg) if args.command == "run" else harness.resume(cfg)
        for record in records:
            print(record)
        return EXIT_OK
    except (ValueError, IOError) as e:
        app_logger.error(f"{args.command} failed: {e}")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
