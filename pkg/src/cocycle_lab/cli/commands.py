"""CLI commands for the cocycle laboratory.

This module provides the command-line interface using argparse. Every
computational subcommand is turned into a RunConfig and handed to the
LabEngine; only the two configuration helpers act directly.
"""

import argparse
import json
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

from .. import __version__
from ..core.engine import LabEngine
from ..core.maps import MAP_NAMES
from ..core.services.bench import KERNELS
from ..core.services.reproduce import SUITES
from ..output.svg import STYLES
from ..utils.config import Config, RunConfig, create_example_config, get_settings
from ..utils.logging import configure_logging, get_logger

logger = get_logger(__name__)
# Type alias for argparse.Namespace
Args = argparse.Namespace
AddParser = Callable[..., argparse.ArgumentParser]

# Namespace entries that are not command parameters
GLOBAL_KEYS = frozenset(
    {"config", "verbose", "func", "command", "precision", "seed", "output_dir", "map"}
)


def setup_logging_and_config(config_path: str | None, verbose: bool) -> Config:
    """Set up logging and load configuration.

    Args:
        config_path: Path to configuration file
        verbose: Enable verbose logging

    Returns:
        Loaded configuration

    Raises:
        SystemExit: If configuration loading fails
    """
    try:
        config = get_settings(config_path)

        # Override log level if verbose
        if verbose:
            config.logging.level = "DEBUG"

        configure_logging(config.logging)
        return config

    except FileNotFoundError as e:
        print(f"Configuration file not found: {e}", file=sys.stderr)
        sys.exit(2)
    except ValueError as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        sys.exit(2)


def count(text: str) -> int:
    """Non-negative integer, also accepting ``1e6`` and ``10**6``."""
    try:
        if "**" in text:
            base, exponent = text.split("**", 1)
            value = int(base) ** int(exponent)
        else:
            number = float(text)
            if not number.is_integer():
                raise ValueError
            value = int(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def build_run_config(args: Args, config: Config) -> RunConfig:
    """Turn parsed arguments into a fully resolved RunConfig."""
    params = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in GLOBAL_KEYS and value is not None and value is not False
    }
    return RunConfig(
        command=args.command,
        params=params,
        precision_bits=args.precision or config.precision.bits,
        seed=args.seed if args.seed is not None else config.probes.seed,
        output_dir=args.output_dir or config.output.directory,
        map_name=args.map,
    )


def cmd_run(args: Args) -> None:
    """Run one laboratory command through the engine."""
    config = setup_logging_and_config(args.config, args.verbose)

    try:
        run = build_run_config(args, config)
    except ValueError as e:
        print(f"Invalid run configuration: {e}", file=sys.stderr)
        sys.exit(2)

    outcome = LabEngine(config).run(run)

    if outcome.error:
        print(f"Error: {outcome.error}", file=sys.stderr)
    if outcome.summary:
        print(json.dumps(outcome.summary, sort_keys=True, indent=2, default=str))
    for path in outcome.artifacts:
        print(f"Wrote {path}")

    sys.exit(outcome.exit_code)


def cmd_config_init(args: Args) -> None:
    """Create example configuration file."""
    output = Path(args.output)

    if output.exists() and not args.force:
        print(
            f"Configuration file {output} already exists (use --force to overwrite)",
            file=sys.stderr,
        )
        sys.exit(2)

    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        create_example_config(output)
        print(f"Example configuration created: {output}")
        print("\nThe configuration is found automatically in:")
        print("  - Current directory: cocycle_lab.toml or cocycle-lab.toml")
        print("  - ~/.config/cocycle-lab/config.toml")

    except OSError as e:
        print(f"Error creating configuration: {e}", file=sys.stderr)
        sys.exit(1)


def cmd_config_validate(args: Args) -> None:
    """Validate configuration file."""
    config = setup_logging_and_config(args.config, args.verbose)
    print("Configuration is valid")

    # Show some key settings
    print(f"Precision: {config.precision.bits} bits (boundary tol {config.precision.boundary_tol})")
    print(f"Seed: {config.probes.seed}")
    print(f"Fourier truncation: {config.fourier.h_max}")
    print(f"Output directory: {config.output.directory}")


# Argument groups shared by several subcommands


def _run_options(parser: argparse.ArgumentParser, default: Any) -> None:
    """Run settings accepted before or after the subcommand."""
    parser.add_argument(
        "--precision", type=count, default=default, help="Working precision in bits"
    )
    parser.add_argument("--seed", type=count, default=default, help="Random seed")
    parser.add_argument("--output-dir", "-o", default=default, help="Artifact directory")
    parser.add_argument(
        "--map",
        "-m",
        default=default,
        help=f"Registry map ({', '.join(MAP_NAMES)}), e.g. 'gamma(2.5,1.5)'",
    )


def _alpha(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--alpha",
        required=True,
        help="Rotation vector, e.g. 'sqrt(2), e' or 'golden'",
    )


def _schedule(parser: argparse.ArgumentParser, n_max: int, per_decade: int = 10) -> None:
    parser.add_argument("--n-max", type=count, help=f"Largest N (default {n_max})")
    parser.add_argument(
        "--per-decade", type=count, help=f"Schedule points per decade (default {per_decade})"
    )


def _triangle(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--triangle", help="Triangle 'a,b,c' instead of --map")
    parser.add_argument(
        "--uncentered", action="store_true", help="Keep the mean of the triangle indicator"
    )


def _add_diophantine(add: AddParser) -> None:
    cf = add("cf", help="Continued fraction and convergents")
    cf.add_argument("--value", required=True, help="Value, e.g. '(sqrt(5)-1)/2'")
    cf.add_argument("--depth", type=count, help="Number of partial quotients (default 20)")

    ostrowski = add("ostrowski", help="Ostrowski digits of an integer")
    ostrowski.add_argument("--value", required=True, help="Irrational base")
    ostrowski.add_argument("--n", type=count, required=True, help="Integer to expand")

    badmargin = add("badmargin", help="Inhomogeneous bad margin")
    badmargin.add_argument("--theta", required=True, help="Irrational theta")
    badmargin.add_argument("--x", help="Inhomogeneous shift (default 0)")
    badmargin.add_argument("--q-min", type=count, help="Smallest q (default 1)")
    badmargin.add_argument("--q-max", type=count, help="Largest q (default 10000)")
    badmargin.add_argument("--workers", type=count, help="Worker processes (default 1)")

    typeprobe = add("typeprobe", help="Diophantine type probe")
    typeprobe.add_argument("--value", required=True, help="Irrational value")
    typeprobe.add_argument("--epsilon", type=float, help="Exponent slack (default 0.1)")
    typeprobe.add_argument("--q-max", type=count, help="Largest denominator (default 1e6)")
    typeprobe.add_argument("--eta", type=float, help="Type exponent (default 1)")

    series = add("series", help="Partial sums of the summability series")
    series.add_argument("--value", required=True, help="Irrational value")
    series.add_argument("--eta", type=float, help="Type exponent (default 1)")
    series.add_argument("--delta", type=float, help="Series exponent (default 0.1)")
    series.add_argument("--k-max", type=count, help="Largest index (default 1e6)")
    series.add_argument("--per-decade", type=count, help="Points per decade (default 10)")


def _add_dynamics(add: AddParser) -> None:
    sums = add("sums", help="Ergodic sums along a schedule")
    _alpha(sums)
    sums.add_argument("--x0", help="Start point (default 0.3,0.7)")
    _schedule(sums, 10**6)
    sums.add_argument("--sup-grid", type=count, help="Grid size for the sup over x")
    sums.add_argument("--shadow", action="store_true", help="Audit float64 against exact")

    add("lambda", help="Lambda functionals of a map")

    sandwich = add("sandwich", help="Sandwich threshold along a schedule")
    _alpha(sandwich)
    sandwich.add_argument("--n-max", type=count, help="Largest N (default 1e4)")
    sandwich.add_argument("--samples", type=count, help="Sample points (default 1000)")

    deviation = add("deviation", help="First-order expansion of the ergodic sums")
    _alpha(deviation)
    deviation.add_argument("--n-max", type=count, help="Largest N (default 1e4)")
    deviation.add_argument("--samples", type=count, help="Sample pairs (default 1000)")
    deviation.add_argument("--tolerance", type=float, help="Relative error bound (default 0.1)")


def _add_fourier(add: AddParser) -> None:
    fourier = add("fourier", help="Fourier spectrum of a map or triangle")
    _triangle(fourier)
    fourier.add_argument("--h-max", type=count, help="Truncation (default from config)")
    fourier.add_argument(
        "--verify", type=count, help="Check closed forms by quadrature up to this frequency"
    )

    growth = add("growth", help="L2 growth of ergodic sums")
    _alpha(growth)
    _triangle(growth)
    growth.add_argument("--h-max", type=count, help="Truncation (default 64)")
    growth.add_argument("--n-min", type=count, help="Smallest N (default 16)")
    growth.add_argument("--n-max", type=count, help="Largest N (default 2**14)")
    growth.add_argument("--t", type=float, help="Decay exponent (default 1.5)")

    niederreiter = add("niederreiter", help="Niederreiter series plateau")
    _alpha(niederreiter)
    niederreiter.add_argument("--forms", help="Linear forms, e.g. '1,0;0,1'")
    niederreiter.add_argument("--h-max", type=count, help="Truncation (default 64)")
    niederreiter.add_argument("--t", type=float, help="Decay exponent (default 1.5)")

    coboundary = add("coboundary", help="Solve the coboundary equation")
    _alpha(coboundary)
    coboundary.add_argument("--h-max", type=count, help="Truncation (default 1000)")
    coboundary.add_argument("--grid", type=count, help="Residual grid (default 10000)")


def _add_partition(add: AddParser) -> None:
    partition = add("partition", help="Coding partition of the torus")
    _alpha(partition)
    partition.add_argument("--ell", type=count, required=True, help="Orbit length")
    partition.add_argument("--no-diagonals", action="store_true", help="Axis lines only")
    partition.add_argument("--export", action="store_true", help="Write every cell as JSON")
    partition.add_argument("--svg", help="SVG path (relative to the output directory)")
    partition.add_argument("--style", choices=list(STYLES), help="SVG style")
    partition.add_argument("--svg-size", type=count, help="SVG size in pixels")

    eqfunct = add("eqfunct", help="Equicontinuity hypotheses by level")
    _alpha(eqfunct)
    eqfunct.add_argument("--ells", help="Comma-separated levels")
    eqfunct.add_argument("--count", type=count, help="Levels when --ells is absent")
    eqfunct.add_argument("--edge-factor", type=float, help="Vertical edge factor")
    eqfunct.add_argument("--neighbor-bound", type=count, help="Neighbour bound")

    gaps = add("gaps", help="Gap statistics of inhomogeneous orbits")
    _alpha(gaps)
    gaps.add_argument("--betas", help="Comma-separated shifts (default 0)")
    _schedule(gaps, 10**4)

    hypothesis = add("hypothesis", help="Bad_Z margins of the break differences of a map")
    _alpha(hypothesis)
    hypothesis.add_argument("--q-max", type=count, help="Largest |q| (default 1e4)")
    hypothesis.add_argument("--floor", type=float, help="Smallest accepted margin (default 1e-3)")

    schmidt = add("schmidt", help="Simultaneous approximation exponent")
    _alpha(schmidt)
    _schedule(schmidt, 10**4)


def _add_probes(add: AddParser) -> None:
    skew = add("skew", help="Orbit of the skew product")
    _alpha(skew)
    skew.add_argument("--x0", help="Base start point")
    skew.add_argument("--z0", help="Fiber start point")
    skew.add_argument("--n", type=count, help="Orbit length (default 1e6)")
    skew.add_argument("--mode", choices=["real", "torus"], help="Fiber mode")
    skew.add_argument("--a", help="Torus fiber rotation, comma-separated")
    skew.add_argument("--decimation", type=count, help="Keep every k-th point")
    skew.add_argument("--bins", type=count, help="Histogram bins (default 32)")

    recur = add("recur", help="Recurrence probe")
    _alpha(recur)
    recur.add_argument("--n-max", type=count, help="Largest N (default 1e6)")
    recur.add_argument("--points", type=count, help="Start points (default 100)")

    l2probe = add("l2probe", help="Sampled L2 norm of ergodic sums")
    _alpha(l2probe)
    _schedule(l2probe, 10**4, 4)
    l2probe.add_argument("--points", type=count, help="Sample points (default 1000)")

    essval = add("essval", help="Essential value probe")
    _alpha(essval)
    essval.add_argument("--window", required=True, help="Window 'lo,hi'")
    essval.add_argument("--box", action="append", help="Box 'lo1,hi1[,lo2,hi2]' (repeatable)")
    essval.add_argument("--n-list", help="Comma-separated N values")
    _schedule(essval, 10**5)
    essval.add_argument("--grid", type=count, help="Grid per axis")
    essval.add_argument("--signed", action="store_true", help="Signed window")

    weyl = add("weyl", help="Weyl averages of the compact extension")
    _alpha(weyl)
    weyl.add_argument("--a", required=True, help="Fiber rotation, comma-separated")
    weyl.add_argument("--frequency", action="append", help="Frequency 'h;k' (repeatable)")
    weyl.add_argument("--n", type=count, help="Orbit length (default 4e5)")
    weyl.add_argument("--x0", help="Base start point")
    weyl.add_argument("--y0", help="Fiber start point")

    conjugation = add("conjugation", help="Conjugation identity check")
    _alpha(conjugation)
    conjugation.add_argument("--a", required=True, help="Fiber rotation value")
    conjugation.add_argument("--samples", type=count, help="Samples (default 1e5)")

    induced = add("induced", help="Induced cocycle on a box")
    _alpha(induced)
    induced.add_argument("--box", action="append", help="Box 'lo1,hi1[,lo2,hi2]' (repeatable)")
    induced.add_argument("--x0", help="Start point inside the box")
    induced.add_argument("--returns", type=count, help="Returns (default 1000)")
    induced.add_argument("--cap", type=count, help="Return time cap")


def _add_runner(add: AddParser) -> None:
    reproduce = add("reproduce", help="Run an acceptance suite")
    reproduce.add_argument("suite", choices=sorted(SUITES), help="Suite name")
    reproduce.add_argument("--ell-max", type=count, help="partition-counts: largest level")
    reproduce.add_argument("--bound", type=count, help="fourier: quadrature bound")
    reproduce.add_argument("--grid", type=count, help="Grid size for sup or event probes")
    reproduce.add_argument("--n", type=count, help="weyl: orbit length")

    bench = add("bench", help="Time a hot kernel")
    bench.add_argument("kernel", choices=sorted(KERNELS), help="Kernel name")
    bench.add_argument("--size", type=count, help="Problem size (default 0)")


def create_parser() -> argparse.ArgumentParser:
    """Create and configure argument parser."""
    parser = argparse.ArgumentParser(
        description="Numerical laboratory for cocycles over torus rotations"
    )

    # Global options
    parser.add_argument("--config", "-c", type=str, help="Path to configuration file")
    parser.add_argument(
        "--verbose", "-v", action="store_true", help="Enable verbose logging"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    _run_options(parser, default=None)

    # Subcommands
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    run_options = argparse.ArgumentParser(add_help=False)
    _run_options(run_options, default=argparse.SUPPRESS)

    def add(name: str, **kwargs: Any) -> argparse.ArgumentParser:
        subparser = subparsers.add_parser(name, parents=[run_options], **kwargs)
        subparser.set_defaults(func=cmd_run)
        return subparser

    _add_diophantine(add)
    _add_dynamics(add)
    _add_fourier(add)
    _add_partition(add)
    _add_probes(add)
    _add_runner(add)

    # Config init command
    config_init_parser = subparsers.add_parser(
        "config-init", help="Create example configuration file"
    )
    config_init_parser.add_argument(
        "--output",
        type=str,
        default="cocycle_lab.toml",
        help="Output path for configuration file",
    )
    config_init_parser.add_argument(
        "--force", "-f", action="store_true", help="Overwrite an existing file"
    )
    config_init_parser.set_defaults(func=cmd_config_init)

    # Config validate command
    config_validate_parser = subparsers.add_parser(
        "config-validate", help="Validate configuration file"
    )
    config_validate_parser.set_defaults(func=cmd_config_validate)

    return parser


def create_cli(argv: list[str] | None = None) -> Callable[[], None]:
    """Create and return the CLI function.

    Args:
        argv: Arguments to parse instead of ``sys.argv``

    Returns:
        Callable that runs the CLI
    """

    def cli() -> None:
        parser = create_parser()
        args = parser.parse_args(argv)

        if not hasattr(args, "func"):
            parser.print_help()
            sys.exit(1)

        args.func(args)

    return cli


def main() -> None:
    """Main CLI entry point."""
    cli = create_cli()
    cli()


if __name__ == "__main__":
    main()
