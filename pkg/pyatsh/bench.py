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

"""Efficiency sweeps: method x problem x stepsize.

A sweep is described by a :class:`SweepConfig`, which can be read from a
plain-text file::

    # comments are ignored
    methods = atsh5-minerr, classical:atsh5-minerr
    problems = problem1, problem2
    count_starter = false
    j_range.atsh5-minerr.problem1 = 1..6
    base.problem1 = 0.5

"""

import dataclasses
import math
import os
import pickle
import typing as tp

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from . import config, utils
from .integrator import NonFiniteState, integrate
from .methods import MethodId, SingularCoefficient, method_name
from .problems import (OracleNotConverged, default_j_range, load_references, make_problem,
                       parse_problem, reference_cache, reference_solution,
                       save_references, stepsize_base)

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['EfficiencyRecord', 'SweepConfig', 'ConfigError',
                  'run_sweep', 'emit', 'read_csv', 'records_frame'])

FIELDS = ['method', 'problem', 'h', 'steps', 'g_evals', 'max_global_error',
          'wall_time_s', 'status']
DTYPES = [str, str, float, int, int, float, float, str]

FORMATS = ('csv', 'plot-script')

# Reason codes for failed cells
STATUS_OK = 'ok'
_STATUS = [(NonFiniteState, 'non-finite'),
           (SingularCoefficient, 'singular'),
           (OracleNotConverged, 'oracle')]


class ConfigError(ValueError):
    """Malformed sweep configuration."""


@dataclasses.dataclass(frozen=True)
class EfficiencyRecord:
    """One point of an efficiency curve."""
    method: str
    problem: str
    h: float
    steps: int
    g_evals: int
    max_global_error: float
    wall_time_s: float = 0.0
    status: str = STATUS_OK

    @property
    def ok(self):
        return self.status == STATUS_OK

    def sort_key(self):
        return (self.method, self.problem, self.h)


def _split_list(value):
    return [v.strip() for v in value.split(',') if v.strip()]


def _parse_j_range(value):
    try:
        lo, hi = value.split('..')
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f'j_range must look like "lo..hi", got "{value}"') from None
    if hi < lo:
        raise ConfigError(f'j_range {value} is empty')
    return range(lo, hi + 1)


# key: converter for plain config-file keys
_KEYS = {
    'methods': _split_list,
    'problems': _split_list,
    'starter': str,
    'count_starter': utils.parse_bool,
    'workers': int,
    'output': str,
    'plot_script': str,
    'timing': utils.parse_bool,
    'on_error': str,
    'reference_file': str,
}


def parse_config(text):
    """Parse the text of a sweep config file into keyword arguments."""
    out: tp.Dict[str, tp.Any] = {}
    j_ranges, bases = {}, {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {n}: expected "key = value", got "{raw.strip()}"')
        key, value = (s.strip() for s in line.split('=', 1))
        try:
            if key.startswith('j_range.'):
                parts = key.split('.')
                if len(parts) != 3:
                    raise ConfigError(f'line {n}: expected j_range.<method>.<problem>')
                j_ranges[(parts[1], parts[2])] = _parse_j_range(value)
            elif key.startswith('base.'):
                bases[key[len('base.'):]] = float(value)
            elif key in _KEYS:
                out[key] = _KEYS[key](value)
            else:
                raise ConfigError(f'line {n}: unknown key "{key}"')
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f'line {n}: bad value for {key}: {e}') from None
    if j_ranges:
        out['j_ranges'] = j_ranges
    if bases:
        out['bases'] = bases
    return out


@dataclasses.dataclass
class SweepConfig:
    """Which runs a sweep performs and where the results go.

    Attributes
    ----------
    methods :       list of str
                    Method names; defaults to the four adapted methods.
    problems :      list of str
                    Problem names; defaults to problem1 ... problem4.
    starter :       str, optional
                    Starter mode for all runs (see ``integrate``).
    count_starter : bool
                    If True, ``g_evals`` includes the starter's evaluations.
    workers :       int
                    Concurrent runs.
    output :        str, optional
                    CSV path.
    plot_script :   str, optional
                    Path of a generated matplotlib script.
    timing :        bool
                    Record wall time (otherwise 0 for reproducible output).
    on_error :      "raise" | "log" | "pass"
                    What to do when a run fails. Failed runs are kept as
                    rows with a reason code unless "raise".
    reference_file : str, optional
                    Pickle of reference trajectories. Loaded before the
                    sweep if present and rewritten after new references
                    were computed.
    j_ranges :      dict
                    ``(method, problem) -> range of j`` overrides.
    bases :         dict
                    ``problem -> base stepsize`` overrides.

    """
    methods: tp.List[str] = dataclasses.field(
        default_factory=lambda: [m.value for m in MethodId])
    problems: tp.List[str] = dataclasses.field(
        default_factory=lambda: ['problem1', 'problem2', 'problem3', 'problem4'])
    starter: tp.Optional[str] = None
    count_starter: bool = False
    workers: int = dataclasses.field(default_factory=lambda: config.max_workers)
    output: tp.Optional[str] = None
    plot_script: tp.Optional[str] = None
    timing: bool = False
    on_error: str = 'log'
    reference_file: tp.Optional[str] = None
    j_ranges: tp.Dict[tp.Tuple[str, str], range] = dataclasses.field(default_factory=dict)
    bases: tp.Dict[str, float] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        try:
            self.methods = [method_name(m) for m in self.methods]
            self.problems = [parse_problem(p).value for p in self.problems]
            self.j_ranges = {(method_name(m), parse_problem(p).value): range(*_bounds(js))
                             for (m, p), js in self.j_ranges.items()}
            self.bases = {parse_problem(p).value: float(b) for p, b in self.bases.items()}
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

        if self.on_error not in ('raise', 'log', 'pass'):
            raise ConfigError(f'on_error must be "raise", "log" or "pass", got "{self.on_error}"')
        if self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}')
        for key, js in self.j_ranges.items():
            if len(js) == 0:
                raise ConfigError(f'Empty j_range for {key}')
        for p, b in self.bases.items():
            if not b > 0:
                raise ConfigError(f'base for {p} must be > 0, got {b}')

    @classmethod
    def from_file(cls, path=None, **overrides):
        """Build a config from environment, an optional file and overrides.

        Precedence: defaults < ``PYATSH_*`` environment < file < keyword
        arguments. Keyword arguments that are None are ignored.

        Raises
        ------
        ConfigError

        """
        kwargs = {}
        env = utils.load_env(max_workers=int)
        if 'max_workers' in env:
            kwargs['workers'] = env['max_workers']

        if path is not None:
            try:
                with open(path) as f:
                    text = f.read()
            except OSError as e:
                raise ConfigError(f'Unable to read config file {path}: {e}') from e
            kwargs.update(parse_config(text))

        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def stepsizes(self, method, problem):
        """Stepsizes ``base * 2**-j`` for one (method, problem) pair."""
        method, problem = method_name(method), parse_problem(problem).value
        base = self.bases.get(problem, stepsize_base(problem))
        js = self.j_ranges.get((method, problem), default_j_range(problem, method))
        return [base * 2.0 ** -j for j in js]

    def cells(self):
        """All (method, problem, h) triples of the sweep."""
        return [(m, p, h) for m in self.methods for p in self.problems
                for h in self.stepsizes(m, p)]


def _bounds(js):
    js = list(js)
    if not js:
        return (0, 0)
    return (min(js), max(js) + 1)


def _status_of(e):
    for exc, code in _STATUS:
        if isinstance(e, exc):
            return code
    return 'error'


def _expected_steps(problem, h):
    return math.ceil((problem.x_end - problem.x0) / h * (1 - 64 * config.eps_machine))


class _Sweep:
    """Per-sweep state shared by the worker threads."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.problems = {p: make_problem(p) for p in cfg.problems}
        self.references = {}
        self.broken = {}
        if cfg.reference_file:
            try:
                load_references(cfg.reference_file)
            except (OSError, EOFError, TypeError, pickle.UnpicklingError) as e:
                raise ConfigError(f'Unable to load references from '
                                  f'{cfg.reference_file}: {e}') from e
        known = set(reference_cache.keys())
        for name, problem in self.problems.items():
            if problem.has_exact:
                continue
            h_min = min(h for m in cfg.methods for h in cfg.stepsizes(m, name))
            h_ref = h_min / config.oracle_refine
            try:
                # Warm the cache before threads start
                reference_solution(problem, [problem.x0], h_ref=h_ref)
            except Exception as e:
                if cfg.on_error == 'raise':
                    raise
                self.broken[name] = e
            self.references[name] = (lambda xs, problem=problem, h_ref=h_ref:
                                     reference_solution(problem, xs, h_ref=h_ref))

        if cfg.reference_file and set(reference_cache.keys()) - known:
            save_references(cfg.reference_file)

    def run(self, cell):
        method, name, h = cell
        problem = self.problems[name]
        try:
            if name in self.broken:
                raise self.broken[name]
            res = integrate(method, problem, h, starter=self.cfg.starter,
                            reference=self.references.get(name))
            err = res.max_global_error
            if err is not None and not math.isfinite(err):
                raise NonFiniteState(problem.x_end, 'global error')
        except Exception as e:
            if self.cfg.on_error == 'raise':
                raise
            status = _status_of(e)
            if self.cfg.on_error == 'log':
                logger.warning(f'{method} on {name} with h={h:g} failed ({status}): {e}')
            return EfficiencyRecord(method=method, problem=name, h=h,
                                    steps=_expected_steps(problem, h), g_evals=0,
                                    max_global_error=np.nan, status=status)

        return EfficiencyRecord(method=method, problem=name, h=h, steps=res.steps,
                                g_evals=res.total_evals(self.cfg.count_starter),
                                max_global_error=res.max_global_error,
                                wall_time_s=res.wall_time_s if self.cfg.timing else 0.0)


def run_sweep(cfg):
    """Run every (method, problem, h) cell of a sweep.

    Parameters
    ----------
    cfg :       SweepConfig

    Returns
    -------
    list of EfficiencyRecord
                Sorted by method, problem and h. Failed cells are
                included with a reason code in ``status`` unless
                ``cfg.on_error == "raise"``.

    """
    cells = cfg.cells()
    if not cells:
        return []

    sweep = _Sweep(cfg)
    with ThreadPoolExecutor(max_workers=cfg.workers) as e:
        futures = e.map(sweep.run, cells)
        records = [r for r in config.tqdm(futures, total=len(cells), desc='Sweep',
                                          disable=config.pbar_hide or len(cells) == 1,
                                          leave=config.pbar_leave)]

    failed = sum(not r.ok for r in records)
    if failed:
        logger.info(f'{failed} of {len(records)} runs failed')
    return sorted(records, key=EfficiencyRecord.sort_key)


def records_frame(records, timing=True):
    """Records as a DataFrame with the CSV columns."""
    builder = utils.DataFrameBuilder(FIELDS, DTYPES)
    for r in records:
        row = dataclasses.astuple(r)
        if not timing:
            row = row[:6] + (0.0, ) + row[7:]
        builder.append_row(row)
    return builder.build()


_PLOT_SCRIPT = '''"""Efficiency curves: log10(max global error) against g evaluations.

Needs matplotlib. Reads {csv}.
"""
import os
import pickle

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
df = pd.read_csv(os.path.join(here, {csv!r}))
df = df[df['status'] == 'ok']

problems = list(dict.fromkeys(df['problem']))
fig, axes = plt.subplots(1, len(problems), figsize=(5 * len(problems), 4), squeeze=False)
for ax, problem in zip(axes[0], problems):
    sub = df[df['problem'] == problem]
    for method, runs in sub.groupby('method', sort=False):
        runs = runs.sort_values('g_evals')
        ax.plot(runs['g_evals'], np.log10(runs['max_global_error']), 'o-', label=method)
    ax.set_title(problem)
    ax.set_xlabel('g evaluations')
    ax.set_ylabel('log10(max global error)')
    ax.legend()
fig.tight_layout()
plt.show()
'''


def emit(records, path, fmt='csv', timing=False, csv_path=None):
    """Write sweep results.

    Parameters
    ----------
    records :   list of EfficiencyRecord
    path :      str
                Output file.
    fmt :       "csv" | "plot-script"
                CSV with 17 significant digits, or a matplotlib script
                drawing one panel per problem from the CSV at
                ``csv_path``.
    timing :    bool
                If False, ``wall_time_s`` is written as 0.
    csv_path :  str, optional
                CSV the plot script reads; defaults to ``path`` with a
                ``.csv`` suffix. Stored relative to the script.

    Raises
    ------
    OSError
                If the file cannot be written.

    """
    if fmt not in FORMATS:
        raise ValueError(f'Unknown format "{fmt}". Choose from: {", ".join(FORMATS)}')

    if fmt == 'csv':
        content = records_frame(records, timing=timing).to_csv(index=False,
                                                               float_format='%.17g')
    else:
        if not records:
            raise ValueError('Need at least one record to write a plot script')
        if csv_path is None:
            csv_path = os.path.splitext(path)[0] + '.csv'
        rel = os.path.relpath(csv_path, os.path.dirname(os.path.abspath(path)))
        content = _PLOT_SCRIPT.format(csv=rel)

    try:
        with open(path, 'w', newline='') as f:
            f.write(content)
    except OSError as e:
        raise OSError(f'Unable to write {fmt} to {path}: {e}') from e
    logger.info(f'Wrote {len(records)} records as {fmt} to {path}')


def read_csv(path):
    """Parse a CSV written by :func:`emit` back into records."""
    try:
        df = pd.read_csv(path, keep_default_na=False, na_values=[''],
                         float_precision='round_trip')
    except OSError as e:
        raise OSError(f'Unable to read {path}: {e}') from e
    missing = set(FIELDS) - set(df.columns)
    if missing:
        raise ValueError(f'{path} lacks columns: {", ".join(sorted(missing))}')
    return [EfficiencyRecord(method=str(row.method), problem=str(row.problem),
                             h=float(row.h), steps=int(row.steps), g_evals=int(row.g_evals),
                             max_global_error=float(row.max_global_error),
                             wall_time_s=float(row.wall_time_s), status=str(row.status))
            for row in df.itertuples(index=False)]
