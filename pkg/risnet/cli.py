#!/usr/bin/env python3
# risnet/cli.py
"""
Command-line front end for the RIS link experiments.

Subcommands:
1. table1  - single-element transfer versus normalized reactance
2. table2  - optimal two-element reactances at five spacings
3. sweep   - optimized, cross-applied and random-phase gains over spacing
4. convert - Z <-> S conversion of a block-matrix file
5. eval    - all model variants for given reactances

Run: python -m risnet.cli sweep --spacing-steps 101 --trials 100000 --output sweep.csv

Exit status: 0 on success, 1 on bad input or I/O failure, 2 when an
internal cross-check fails.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from .analysis import analyze_sweep
from .errors import CrossCheckError, RisNetError
from .experiments import (
    COMMANDS,
    DEFAULT_SWEEP_STEPS,
    EVAL_COLUMNS,
    FORMATS,
    SWEEP_COLUMNS,
    TABLE1_COLUMNS,
    TABLE2_COLUMNS,
    ExperimentSpec,
    render_convert,
    render_rows,
    run_convert,
    run_eval,
    run_sweep,
    run_table1,
    run_table2,
    write_output,
)
from .multiport import DEFAULT_RESISTANCE
from .optimizer import DEFAULT_STARTS, DEFAULT_TRIALS
from .ris import MODELS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CROSS_CHECK = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risnet",
        description="Physically consistent RIS link model: tables, sweeps and conversions",
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable debug logging')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--d-rs', type=float, default=100.0,
                        help='Tx to RIS distance in wavelengths [default: 100]')
    common.add_argument('--d-dr', type=float, default=1000.0,
                        help='RIS to Rx distance in wavelengths [default: 1000]')
    common.add_argument('--resistance', type=float, default=DEFAULT_RESISTANCE,
                        help='Port resistance R in ohms [default: 50]')
    common.add_argument('--wavelength', type=float, default=1.0,
                        help='Wavelength in meters [default: 1]')
    common.add_argument('--model', choices=MODELS, default='physical',
                        help='Model for table1/table2 [default: physical]')
    common.add_argument('--seed', type=int, default=0, help='Random seed [default: 0]')
    common.add_argument('--starts', type=int, default=DEFAULT_STARTS,
                        help=f'Random optimizer starts [default: {DEFAULT_STARTS}]')
    common.add_argument('--output', '-o', type=str, default=None,
                        help='Output path [default: stdout]')
    common.add_argument('--format', dest='fmt', choices=FORMATS, default='csv',
                        help='Output format [default: csv]')
    common.add_argument('--excess-hop', choices=('dr', 'rs'), default='dr',
                        help="Hop carrying element 2's extra path [default: dr]")

    sub = parser.add_subparsers(dest='command', required=True, metavar='{' + ','.join(COMMANDS) + '}')

    p = sub.add_parser('table1', parents=[common], help='Single-element transfer versus reactance')
    p.add_argument('--x', type=float, action='append', default=[],
                   help='Extra normalized reactance X/R (repeatable; inf and -inf allowed)')

    p = sub.add_parser('table2', parents=[common], help='Optimal two-element reactances')
    p.add_argument('--grid-step', type=float, default=0.01,
                   help='Grid oracle step in normalized reactance [default: 0.01]')

    p = sub.add_parser('sweep', parents=[common], help='Gains over element spacing')
    p.add_argument('--spacing-min', type=float, default=0.0, help='Smallest spacing in wavelengths [default: 0]')
    p.add_argument('--spacing-max', type=float, default=1.0, help='Largest spacing in wavelengths [default: 1]')
    p.add_argument('--spacing-steps', type=int, default=DEFAULT_SWEEP_STEPS,
                   help=f'Number of spacings [default: {DEFAULT_SWEEP_STEPS}]')
    p.add_argument('--trials', type=int, default=DEFAULT_TRIALS,
                   help=f'Monte-Carlo trials per random baseline [default: {DEFAULT_TRIALS}]')
    p.add_argument('--workers', type=int, default=1, help='Worker processes [default: 1]')
    p.add_argument('--report', action='store_true',
                   help='Print the closed-form consistency report after the sweep')

    p = sub.add_parser('convert', parents=[common], help='Convert a Z or S block file')
    p.add_argument('--input', '-i', type=str, required=True, help='Block-matrix file to convert')

    p = sub.add_parser('eval', parents=[common], help='Evaluate all model variants')
    p.add_argument('--scenario', type=str, default=None, help='Scenario file [default: built-in link]')
    p.add_argument('--x', type=float, action='append', default=[],
                   help='Normalized reactance per RIS element (repeatable)')
    p.add_argument('--spacing', type=float, default=0.0,
                   help='Element spacing of the built-in two-element link [default: 0]')
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Translate parsed arguments into an :class:`ExperimentSpec`."""
    options = dict(
        command=args.command,
        d_rs=args.d_rs,
        d_dr=args.d_dr,
        resistance=args.resistance,
        wavelength=args.wavelength,
        model=args.model,
        seed=args.seed,
        starts=args.starts,
        output=args.output,
        fmt=args.fmt,
        excess_hop=args.excess_hop,
        x_values=tuple(getattr(args, 'x', ()) or ()),
    )
    if args.command == 'sweep':
        options.update(
            spacing_min=args.spacing_min,
            spacing_max=args.spacing_max,
            steps=args.spacing_steps,
            trials=args.trials,
            workers=args.workers,
        )
    elif args.command == 'table2':
        options.update(grid_step=args.grid_step)
    elif args.command == 'convert':
        options.update(input=args.input)
    elif args.command == 'eval':
        options.update(scenario=args.scenario, spacing_min=args.spacing, spacing_max=args.spacing)
    return ExperimentSpec(**options)


def _run(spec: ExperimentSpec, args: argparse.Namespace) -> int:
    if spec.command == 'table1':
        write_output(render_rows(TABLE1_COLUMNS, run_table1(spec), spec.fmt), spec.output)
    elif spec.command == 'table2':
        write_output(render_rows(TABLE2_COLUMNS, run_table2(spec), spec.fmt), spec.output)
    elif spec.command == 'sweep':
        rows = run_sweep(spec)
        write_output(render_rows(SWEEP_COLUMNS, rows, spec.fmt), spec.output)
        if args.report:
            results = analyze_sweep(rows, verbose=True)
            if not results['passed']:
                raise CrossCheckError("sweep deviates from the closed-form references")
    elif spec.command == 'convert':
        write_output(render_convert(run_convert(spec)), spec.output)
    elif spec.command == 'eval':
        result = run_eval(spec)
        write_output(render_rows(EVAL_COLUMNS, result.rows, spec.fmt), spec.output)
        print(f"impedance/scattering/theta-form agreement: {result.deviation:.3e}")
        print(f"conventional deviation from physical:      {result.conventional_deviation:.3e}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        spec = spec_from_args(args)
        return _run(spec, args)
    except CrossCheckError as exc:
        print(f"cross-check failed: {exc}", file=sys.stderr)
        return EXIT_CROSS_CHECK
    except (RisNetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
