"""CLI entrypoint for imethod-lab."""

import argparse
import logging
import sys

from .config import THREADS_ENV_VAR, ConfigError, load_config
from .runner import EXIT_CONFIG, EXIT_FAILED, EXIT_INTERRUPTED, EXIT_OK, ExperimentRunner

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False) -> None:
    """Setup logging configuration.

    Args:
        verbose: Enable verbose (DEBUG) logging
    """
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Path to the JSON run configuration")
    common.add_argument("--out", help="Output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="Initial data seed (overrides initial_data.seed)")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable DEBUG logging")

    parser = argparse.ArgumentParser(
        prog="imethod-lab",
        description="Pseudospectral NLS simulator and I-method verification harness",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Examples:
  # Evolve initial data, writing checkpoints and norms.csv
  imethod-lab evolve --config configs/plane_wave.json

  # Almost-conservation N-sweep
  imethod-lab sweep --config configs/sweep_n3.json --out runs

  # Run the declared checks
  imethod-lab check --config configs/plane_wave.json

  # Functional table for one checkpoint
  imethod-lab norms --config configs/plane_wave.json --checkpoint runs/.../state_00010.nlsf

Exit codes:
  0 all hard checks passed, 1 a hard check failed, 2 configuration error,
  3 solver abort, 130 interrupted.

Environment:
  {THREADS_ENV_VAR} caps the worker count (default: CPU count).
""",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")
    subparsers.required = True

    subparsers.add_parser("evolve", parents=[common], help="Evolve and write checkpoints plus norms.csv")
    subparsers.add_parser("sweep", parents=[common], help="Almost-conservation sweep over N_list")
    subparsers.add_parser("check", parents=[common], help="Run the checks declared in the config")
    norms_parser = subparsers.add_parser("norms", parents=[common], help="Functional table for a checkpoint")
    norms_parser.add_argument("--checkpoint", required=True, help="Checkpoint file to evaluate")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main CLI entrypoint."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = load_config(args.config).with_overrides(output_dir=args.out, seed=args.seed)
    except ValueError as e:
        print(f"✗ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    runner = ExperimentRunner(config)
    try:
        code = runner.run(args.command, checkpoint=getattr(args, "checkpoint", None))
    except ConfigError as e:
        print(f"✗ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\n✗ Interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.exception(f"{args.command} failed")
        print(f"✗ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_FAILED

    if code == EXIT_OK:
        print(f"✓ {args.command} completed: {runner.run_logger.run_dir}")
    else:
        print(f"✗ {args.command} finished with exit code {code}: {runner.run_logger.run_dir}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
