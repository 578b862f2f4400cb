"""Command-line front end.

    cmscat run --config scenario.cfg --out results/
    cmscat run --preset fig3 --out results/ [--no-scatterer] [--threads 4]
               [--grid NX NY] [--extent L]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 output I/O error.
"""

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, NumericalError
from .scenario import load_preset, parse_config, run_scenario, write_outputs


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cmscat",
        description="Quantum two-photon scattering maps for 2D conducting "
                    "cylinders in the characteristic-mode basis")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write its outputs")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario configuration file")
    src.add_argument("--preset", choices=("fig3", "fig4", "fig5"),
                     help="bundled scenario preset")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--no-scatterer", action="store_true",
                     help="force the free-space baseline")
    run.add_argument("--threads", type=int, default=None,
                     help="pixel-loop worker count (numba backend)")
    run.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"),
                     default=None, help="override grid resolution")
    run.add_argument("--extent", type=float, default=None,
                     help="override grid to [-L, L] x [-L, L]")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.config:
            config = parse_config(args.config)
        else:
            config = load_preset(args.preset)
        if args.no_scatterer:
            config = replace(config, scatterer="none", radius=None)
        if args.threads is not None:
            if args.threads <= 0:
                raise ConfigError("--threads must be positive")
            config = replace(config, threads=args.threads)
        grid = list(config.grid)
        if args.extent is not None:
            if args.extent <= 0:
                raise ConfigError("--extent must be positive")
            grid[:4] = [-args.extent, args.extent, -args.extent, args.extent]
        if args.grid is not None:
            if min(args.grid) < 2:
                raise ConfigError("--grid values must be at least 2")
            grid[4], grid[5] = args.grid
        config = replace(config, grid=tuple(grid))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_scenario(config)
    except (NumericalError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    try:
        written = write_outputs(result, args.out)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 4
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
