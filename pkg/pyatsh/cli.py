#    This script is part of pyatsh.
#
#   This program is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#    (at your option) any later version.
#
#    This program is distributed in the hope that it will be useful,
#    but WITHOUT ANY WARRANTY; without even the implied warranty of
#    MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#    GNU General Public License for more details.

"""Command-line interface.

Exit codes: 0 on success, 1 if any run failed (or a check did not pass),
2 on configuration errors.
"""

import argparse
import math
import sys

import numpy as np
import pandas as pd

from . import __version__, config, utils
from .bench import ConfigError, SweepConfig, emit, records_frame, run_sweep
from .integrator import integrate
from .methods import available_methods, build, method_label, method_name
from .order_conditions import residual_table, verify_order
from .problems import BenchmarkId, make_problem, reference_solution, stepsize_base
from .stability import estimate_leading, phase_table, scan_region, stability_intervals

logger = config.get_logger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _parse_value(s):
    """Turn a ``--param`` value into int, float, bool or str."""
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    if s.lower() in ('true', 'false'):
        return s.lower() == 'true'
    return s


def _parse_params(items):
    params = {}
    for item in items or []:
        if '=' not in item:
            raise ConfigError(f'--param expects key=value, got "{item}"')
        key, value = item.split('=', 1)
        params[key.strip()] = _parse_value(value.strip())
    return params


def _split(value):
    if value is None:
        return None
    return [v.strip() for v in value.split(',') if v.strip()]


def _print_frame(df):
    with pd.option_context('display.max_rows', None, 'display.width', 120):
        print(df.to_string(index=False))


def cmd_integrate(args):
    problem = make_problem(args.problem, **_parse_params(args.param))
    if args.h is not None:
        h = args.h
    elif args.j is not None:
        h = stepsize_base(args.problem) * 2.0 ** -args.j
    else:
        raise ConfigError('Give a stepsize with --h or --j')

    reference = None
    if not problem.has_exact and not args.no_reference:
        h_ref = h / config.oracle_refine
        reference = lambda xs: reference_solution(problem, xs, h_ref=h_ref)

    try:
        res = integrate(args.method, problem, h, starter=args.starter, reference=reference)
    except ValueError as e:
        if reference is None:
            raise
        # Stepsize off the reference grid
        logger.warning(f'No error measurement: {e}')
        res = integrate(args.method, problem, h, starter=args.starter)

    print(f'method            {method_name(args.method)} ({method_label(args.method)})')
    print(f'problem           {problem.name}')
    print(f'h                 {h:.17g}')
    print(f'steps             {res.steps}')
    print(f'g_evals           {res.g_evals}')
    print(f'starter_evals     {res.starter_evals}')
    if res.max_global_error is not None:
        print(f'max_global_error  {res.max_global_error:.6e}')

    if args.out:
        cols = {'x': res.xs}
        for k in range(problem.dim):
            y = res.ys[:, k]
            if np.iscomplexobj(y):
                cols[f'y{k + 1}_re'], cols[f'y{k + 1}_im'] = y.real, y.imag
            else:
                cols[f'y{k + 1}'] = y
        if res.errors is not None:
            cols['error'] = res.errors
        try:
            pd.DataFrame(cols).to_csv(args.out, index=False, float_format='%.17g')
        except OSError as e:
            raise OSError(f'Unable to write trajectory to {args.out}: {e}') from e
    return EXIT_OK


def cmd_bench(args):
    cfg = SweepConfig.from_file(args.config,
                                methods=_split(args.methods),
                                problems=_split(args.problems),
                                starter=args.starter,
                                count_starter=True if args.count_starter else None,
                                workers=args.workers,
                                output=args.output,
                                plot_script=args.plot_script,
                                timing=True if args.timing else None,
                                reference_file=args.reference_file)
    records = run_sweep(cfg)

    if cfg.output:
        emit(records, cfg.output, 'csv', timing=cfg.timing)
    else:
        sys.stdout.write(records_frame(records, timing=cfg.timing).to_csv(index=False,
                                                                          float_format='%.17g'))
    if cfg.plot_script:
        if not cfg.output:
            raise ConfigError('--plot-script needs --output for the CSV it reads')
        emit(records, cfg.plot_script, 'plot-script', csv_path=cfg.output)

    return EXIT_OK if all(r.ok for r in records) else EXIT_FAILED


def cmd_stability(args):
    if args.intervals:
        if args.omega is None or args.epsilon is None:
            raise ConfigError('--intervals needs --omega and --epsilon')
        found = stability_intervals(args.method, args.omega, args.epsilon, args.h_max,
                                    n=args.grid)
        if not found:
            print('no interval of stability/periodicity found')
        for lo, hi in found:
            print(f'({lo:.6g}, {hi:.6g})')
        return EXIT_OK

    scan = scan_region(args.method, nu_range=(args.nu_min, args.nu_max),
                       z_range=(args.z_min, args.z_max), grid=args.grid)
    df = scan.to_frame()
    if args.out:
        try:
            df.to_csv(args.out, index=False, float_format='%.17g')
        except OSError as e:
            raise OSError(f'Unable to write stability grid to {args.out}: {e}') from e
        if args.plot_script:
            try:
                with open(args.plot_script, 'w') as f:
                    f.write(scan.plot_script(args.out))
            except OSError as e:
                raise OSError(f'Unable to write {args.plot_script}: {e}') from e
    else:
        for cls in ('periodic', 'absolutely-stable', 'unstable'):
            print(f'{cls:18s} {scan.fraction(cls):.4f}')
    return EXIT_OK


def cmd_phase(args):
    lead = estimate_leading(args.method, args.omega, args.epsilon)
    r = 'inf' if math.isinf(lead.r) else str(lead.r)
    print(f'method  {method_name(args.method)} ({method_label(args.method)})')
    print(f'q       {lead.q}')
    print(f'c_phi   {lead.c_phi:.10e}')
    print(f'r       {r}')
    print(f'c_d     {lead.c_d:.10e}')
    if args.table:
        _print_frame(phase_table(args.method, args.omega, args.epsilon))
    return EXIT_OK


def cmd_check_order(args):
    tableau = build(args.method, args.nu)
    p = verify_order(tableau)
    print(f'{tableau.name}: verified order {p} (declared {tableau.p}) at nu={tableau.nu:g}')
    if not args.summary:
        _print_frame(residual_table(tableau, args.up_to))
    return EXIT_OK if p >= tableau.p else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog='pyatsh',
                                     description='Adapted two-step hybrid methods for '
                                                 'perturbed oscillators.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug output.')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings only.')
    parser.add_argument('--hide-pbars', action='store_true', help='Hide progress bars.')
    sub = parser.add_subparsers(dest='command', required=True)

    methods = available_methods()
    problems = [b.value for b in BenchmarkId]

    p = sub.add_parser('integrate', help='Integrate one problem with one method.')
    p.add_argument('method', choices=methods)
    p.add_argument('problem', choices=problems)
    p.add_argument('--h', type=float, help='Stepsize.')
    p.add_argument('--j', type=int, help='Stepsize base * 2**-j.')
    p.add_argument('--starter', choices=['exact', 'series', 'oracle'])
    p.add_argument('--param', action='append', metavar='KEY=VALUE',
                   help='Problem parameter, e.g. eccentricity=0.5.')
    p.add_argument('--no-reference', action='store_true',
                   help='Skip the reference run for problems without exact solution.')
    p.add_argument('--out', help='Write the trajectory to this CSV.')
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser('bench', help='Run an efficiency sweep.')
    p.add_argument('--config', help='Sweep config file.')
    p.add_argument('--methods', help='Comma separated method names.')
    p.add_argument('--problems', help='Comma separated problem names.')
    p.add_argument('--starter', choices=['exact', 'series', 'oracle'])
    p.add_argument('--count-starter', action='store_true',
                   help='Include starter evaluations in g_evals.')
    p.add_argument('--workers', type=int)
    p.add_argument('--output', help='CSV path (default: stdout).')
    p.add_argument('--plot-script', help='Write a matplotlib script for the CSV.')
    p.add_argument('--timing', action='store_true', help='Record wall time.')
    p.add_argument('--reference-file',
                   help='Load reference trajectories from, and save new ones to, this pickle.')
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('stability', help='Scan the stability region in the nu-z plane.')
    p.add_argument('method', choices=methods)
    p.add_argument('--nu-min', type=float, default=0.0)
    p.add_argument('--nu-max', type=float, default=3 * math.pi)
    p.add_argument('--z-min', type=float, default=-5.0)
    p.add_argument('--z-max', type=float, default=5.0)
    p.add_argument('--grid', type=int, default=600)
    p.add_argument('--out', help='Write the grid (nu, z, S, P, class) to this CSV.')
    p.add_argument('--plot-script', help='Write a matplotlib script for --out.')
    p.add_argument('--intervals', action='store_true',
                   help='Print stability intervals along (omega h, epsilon h^2).')
    p.add_argument('--omega', type=float)
    p.add_argument('--epsilon', type=float)
    p.add_argument('--h-max', type=float, default=10.0)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser('phase', help='Estimate phase-lag and dissipation orders.')
    p.add_argument('method', choices=methods)
    p.add_argument('--omega', type=float, required=True)
    p.add_argument('--epsilon', type=float, required=True)
    p.add_argument('--table', action='store_true', help='Print the H sequence.')
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser('check-order', help='Verify the algebraic order of a method.')
    p.add_argument('method', choices=methods)
    p.add_argument('--nu', type=float, default=0.0)
    p.add_argument('--up-to', type=int, default=7)
    p.add_argument('--summary', action='store_true',
                   help='Print only the verified order, not the residual table.')
    p.set_defaults(func=cmd_check_order)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.verbose:
        utils.set_loggers('DEBUG')
    elif args.quiet:
        utils.set_loggers('WARNING')
    if args.hide_pbars:
        utils.set_pbars(hide=True)

    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, RuntimeError, OSError) as e:
        logger.error(f'{type(e).__name__}: {e}')
        return EXIT_FAILED
