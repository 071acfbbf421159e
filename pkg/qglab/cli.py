"""
Command-line interface for qglab.
"""
import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from .config import load_config, parse_potential
from .errors import QGLabError
from .experiments import cmd_lemma_check, cmd_report, cmd_resolvent_compare, cmd_spectrum_converge
from .storage import FileStorage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2

COMMANDS = {
    "lemma-check": cmd_lemma_check,
    "resolvent-compare": cmd_resolvent_compare,
    "spectrum-converge": cmd_spectrum_converge,
}


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--nu", type=int, help="Dimension (1 or 2)")
    parser.add_argument("--potential", type=parse_potential, help="Potential as label or label:key=value,...")
    parser.add_argument("--m-shift", type=float, help="Shift M of the inverse-shifted spectra")
    parser.add_argument("--z", type=complex, nargs="+", help="Spectral parameters, e.g. 1j 2+0.5j")
    parser.add_argument("--ell-list", type=float, nargs="+", help="Strictly decreasing lattice spacings")
    parser.add_argument("--radius", type=float, help="Half-width of the Dirichlet box")
    parser.add_argument("--radius-list", type=float, nargs="+", help="Box half-widths of a truncation sweep")
    parser.add_argument("--fine-h", type=float, help="Continuum mesh width")
    parser.add_argument("--window", type=float, nargs=2, metavar=("A", "B"), help="Spectral window (a, b)")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--out-dir", help="Output directory")
    parser.add_argument("--prefix", help="Output file name prefix")
    parser.add_argument("--workers", type=int, help="Worker threads of the sweep")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    parser = argparse.ArgumentParser(prog="qglab", description="Quantum graph continuum-limit laboratory")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Shortcut for --log-level DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)

    helps = {
        "lemma-check": "Check the identification operator and discrete resolvent bounds on probe suites",
        "resolvent-compare": "Compare the discrete and quantum graph resolvents over the ell sweep",
        "spectrum-converge": "Compare windowed spectra against the continuum reference",
    }
    for name, text in helps.items():
        _add_experiment_arguments(subparsers.add_parser(name, help=text))

    report = subparsers.add_parser("report", help="Merge reports into a summary, plot data and figures")
    report.add_argument("reports", nargs="*", help="Report files")
    report.add_argument("--out-dir", default="qglab-out", help="Output directory (default: qglab-out)")
    report.add_argument("--prefix", default="qglab", help="Output file name prefix (default: qglab)")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    return build_parser().parse_args(argv)


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Config fields set on the command line."""
    fields = [
        "nu", "potential", "m_shift", "z", "ell_list", "radius", "radius_list",
        "fine_h", "window", "seed", "out_dir", "prefix", "workers",
    ]
    return {name: getattr(args, name) for name in fields}


async def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        int: 0 when every criterion passes, 1 when one fails, 2 on an error
    """
    args = parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, args.log_level)
    logging.basicConfig(level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    try:
        if args.command == "report":
            storage = FileStorage(args.out_dir, args.prefix)
            summary = await cmd_report(args.reports, storage)
            print(summary, end="")
            return EXIT_OK

        config = load_config(args.config, overrides_from_args(args))
        storage = FileStorage(config.out_dir, config.prefix)
        report = await COMMANDS[args.command](config, storage)
    except QGLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_ERROR
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return EXIT_ERROR

    return EXIT_OK if report.passed else EXIT_FAILED


def run() -> None:
    """Console script entry point."""
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    run()
