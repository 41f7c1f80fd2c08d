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

"""Benchmark problems for perturbed oscillators.

=========  ==============================================================
problem1   y'' = -100 y + 99 sin x on [0, 100], omega = 10
problem2   z'' = -z + 0.001 exp(ix) on [0, 1000] as a real pair, omega = 1
problem3   main satellite problem u'' + u = mu/c^2 + 12 (J2/c^2) u^2
           on [pi, 100], omega = 1, no closed form
problem4   coupled system with nonlinear epsilon terms on [0, 5], omega = 5
cubic      y'' = -y + eps y^3, omega = sqrt(1 - 0.75 eps)
harmonic   y'' = -omega^2 y (g == 0)
=========  ==============================================================

The satellite problem in focal variables has three further, trivially
harmonic, components; only the u-equation is integrated.

"""

import enum
import math
import os

from fractions import Fraction

import numpy as np

from . import config
from .cache import Cache
from .integrator import Problem, integrate
from .methods import Classical, MethodId, parse_method

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['BenchmarkId', 'InvalidParams', 'OracleNotConverged',
                  'make_problem', 'parse_problem', 'reference_solution',
                  'default_j_range', 'stepsize_base', 'default_stepsizes',
                  'SATELLITE_MU', 'SATELLITE_J2', 'reference_cache',
                  'load_references', 'save_references'])

# mu / c^2 and J2 / c^2 of the satellite problem
SATELLITE_MU = Fraction(100, 20895)
SATELLITE_J2 = Fraction(50, 20895000)

# Method used to compute reference trajectories
REFERENCE_METHOD = Classical(MethodId.ATSH5_MIN_ERR)

# Reference trajectories; size limit in mb
reference_cache = Cache(size_limit=256)


class InvalidParams(ValueError):
    """Problem parameters are unknown or out of range."""


class OracleNotConverged(RuntimeError):
    """Reference runs at h_ref and h_ref/2 disagree."""

    def __init__(self, problem, h_ref, diff):
        self.diff = diff
        super().__init__(f'Reference for {problem} not converged at h_ref={h_ref:.3e}: '
                         f'runs differ by {diff:.3e} > {config.richardson_tol:.1e}')


class BenchmarkId(enum.Enum):
    INHOMOGENEOUS = 'problem1'
    STIEFEL_BETTIS = 'problem2'
    SATELLITE = 'problem3'
    FRANCO_SYSTEM = 'problem4'
    CUBIC_OSCILLATOR = 'cubic'
    HARMONIC_PURE = 'harmonic'


def parse_problem(x):
    """Turn a command-line name into a BenchmarkId."""
    if isinstance(x, BenchmarkId):
        return x
    if isinstance(x, Problem):
        x = x.name
    try:
        return BenchmarkId(str(x).strip().lower())
    except ValueError:
        raise ValueError(f'Unknown problem "{x}". Choose from: '
                         f'{", ".join(b.value for b in BenchmarkId)}') from None


def _stack(*cols):
    return np.stack(cols, axis=-1)


def _take(params, defaults, name):
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParams(f'Unknown parameters for {name}: {", ".join(sorted(unknown))}. '
                            f'Valid: {", ".join(sorted(defaults))}')
    out = dict(defaults)
    out.update(params)
    return out


def _inhomogeneous(p):
    return Problem(name='problem1', omega=10.0,
                   g=lambda x, y: np.array([99 * math.sin(x)]),
                   x0=0.0, x_end=100.0, y0=[1.0], dy0=[11.0],
                   exact=lambda x: _stack(np.cos(10 * x) + np.sin(10 * x) + np.sin(x)),
                   params=p)


def _stiefel_bettis(p):
    if p['complex_form']:
        return Problem(name='problem2', omega=1.0,
                       g=lambda x, y: np.array([0.001 * np.exp(1j * x)]),
                       x0=0.0, x_end=1000.0, y0=[1 + 0j], dy0=[0.9995j],
                       exact=lambda x: _stack((1 - 0.0005j * x) * np.exp(1j * x)),
                       params=p)

    def exact(x):
        return _stack(np.cos(x) + 0.0005 * x * np.sin(x),
                      np.sin(x) - 0.0005 * x * np.cos(x))

    return Problem(name='problem2', omega=1.0,
                   g=lambda x, y: np.array([0.001 * math.cos(x), 0.001 * math.sin(x)]),
                   x0=0.0, x_end=1000.0, y0=[1.0, 0.0], dy0=[0.0, 0.9995],
                   exact=exact, params=p)


def _satellite(p):
    e, j2 = p['eccentricity'], p['j2']
    if not 0 <= e < 1:
        raise InvalidParams(f'eccentricity must be in [0, 1), got {e}')
    if j2 < 0:
        raise InvalidParams(f'j2 must be >= 0, got {j2}')
    mu = float(SATELLITE_MU)
    u0 = float(SATELLITE_MU * (1 - Fraction(e)))
    return Problem(name='problem3', omega=1.0,
                   g=lambda x, y: mu + 12 * j2 * y * y,
                   x0=math.pi, x_end=p['x_end'], y0=[u0], dy0=[0.0],
                   params=p)


def _franco(p):
    eps = p['epsilon']
    if not eps > 0:
        raise InvalidParams(f'epsilon must be > 0, got {eps}')

    def g(x, y):
        x2 = x * x
        common = 1 + eps ** 2 + 2 * eps * math.sin(5 * x + x2) - (y[0] ** 2 + y[1] ** 2)
        f1 = 2 * math.cos(x2) + (25 - 4 * x2) * math.sin(x2)
        f2 = -2 * math.sin(x2) + (25 - 4 * x2) * math.cos(x2)
        return eps * np.array([common + f1, common + f2])

    return Problem(name='problem4', omega=5.0, g=g,
                   x0=0.0, x_end=5.0, y0=[1.0, eps], dy0=[0.0, 5.0],
                   exact=lambda x: _stack(np.cos(5 * x) + eps * np.sin(x * x),
                                          np.sin(5 * x) + eps * np.cos(x * x)),
                   params=p)


def _cubic(p):
    eps = p['epsilon']
    if not abs(eps) < 4 / 3:
        raise InvalidParams(f'|epsilon| must be < 4/3, got {eps}')
    omega = math.sqrt(1 - 0.75 * eps)
    shift = omega ** 2 - 1
    return Problem(name='cubic', omega=omega,
                   g=lambda x, y: shift * y + eps * y ** 3,
                   x0=0.0, x_end=p['x_end'], y0=[1.0], dy0=[1.0],
                   params=p)


def _harmonic(p):
    omega, y0, dy0 = p['omega'], p['y0'], p['dy0']
    if not omega > 0:
        raise InvalidParams(f'omega must be > 0, got {omega}')
    return Problem(name='harmonic', omega=omega,
                   g=lambda x, y: np.zeros_like(y),
                   x0=0.0, x_end=p['x_end'], y0=[y0], dy0=[dy0],
                   exact=lambda x: _stack(y0 * np.cos(omega * x) + dy0 / omega * np.sin(omega * x)),
                   params=p)


# builder, default parameters
_PROBLEMS = {
    BenchmarkId.INHOMOGENEOUS: (_inhomogeneous, {}),
    BenchmarkId.STIEFEL_BETTIS: (_stiefel_bettis, {'complex_form': False}),
    BenchmarkId.SATELLITE: (_satellite, {'eccentricity': 0.99, 'j2': float(SATELLITE_J2),
                                         'x_end': 100.0}),
    BenchmarkId.FRANCO_SYSTEM: (_franco, {'epsilon': 1e-3}),
    BenchmarkId.CUBIC_OSCILLATOR: (_cubic, {'epsilon': 1e-2, 'x_end': 20.0}),
    BenchmarkId.HARMONIC_PURE: (_harmonic, {'omega': 10.0, 'y0': 1.0, 'dy0': 0.0,
                                            'x_end': 100.0}),
}


def make_problem(problem, **params):
    """Build a benchmark problem.

    Parameters
    ----------
    problem :   BenchmarkId | str
                E.g. ``'problem1'`` or ``BenchmarkId.SATELLITE``.
    **params
                Problem-specific overrides:

                  - problem2: ``complex_form`` (bool)
                  - problem3: ``eccentricity`` in [0, 1), ``j2`` (J2/c^2),
                    ``x_end``
                  - problem4: ``epsilon`` > 0
                  - cubic: ``epsilon`` with ``|epsilon| < 4/3``, ``x_end``
                  - harmonic: ``omega`` > 0, ``y0``, ``dy0``, ``x_end``

    Returns
    -------
    Problem

    Raises
    ------
    InvalidParams

    """
    pid = parse_problem(problem)
    builder, defaults = _PROBLEMS[pid]
    p = _take(params, defaults, pid.value)
    try:
        return builder(p)
    except (TypeError, ValueError) as e:
        if isinstance(e, InvalidParams):
            raise
        raise InvalidParams(f'Invalid parameters for {pid.value}: {e}') from e


def stepsize_base(problem):
    """Base stepsize; benchmark stepsizes are ``base * 2**-j``."""
    pid = parse_problem(problem)
    if pid is BenchmarkId.SATELLITE:
        return (100 - math.pi) / 100
    return 1.0


def default_j_range(problem, method):
    """Default stepsize exponents ``j`` for a (problem, method) pair.

    Classical companions use the list of their adapted method.
    """
    pid = parse_problem(problem)
    method = parse_method(method)
    family = method.inner if isinstance(method, Classical) else method
    if pid is BenchmarkId.STIEFEL_BETTIS:
        return range(-1, 4) if family is MethodId.ATSH5_PHASE8 else range(-2, 3)
    if pid is BenchmarkId.SATELLITE:
        return range(-2, 3)
    if pid is BenchmarkId.FRANCO_SYSTEM:
        return range(2, 7)
    return range(1, 6)


def default_stepsizes(problem, method):
    base = stepsize_base(problem)
    return np.array([base * 2.0 ** -j for j in default_j_range(problem, method)])


def _smallest_benchmark_h(pid):
    return min(h for m in MethodId for h in default_stepsizes(pid, m))


def _reference_grid(problem, h_ref):
    n = round((problem.x_end - problem.x0) / h_ref)
    if abs(problem.x0 + n * h_ref - problem.x_end) > 1e-9 * h_ref * n:
        raise ValueError(f'h_ref={h_ref} does not divide the interval of {problem.name}')
    return n


def _oracle(problem, h_ref):
    _reference_grid(problem, h_ref)
    coarse = integrate(REFERENCE_METHOD, problem, h_ref, starter='oracle')
    fine = integrate(REFERENCE_METHOD, problem, h_ref / 2, starter='oracle')
    diff = float(np.max(np.abs(coarse.ys - fine.ys[::2])))
    if diff > config.richardson_tol:
        raise OracleNotConverged(problem.name, h_ref, diff)
    logger.info(f'Reference for {problem.name}: h_ref={h_ref:.4e}, '
                f'{coarse.steps} steps, Richardson difference {diff:.2e}')
    return coarse.ys


def reference_solution(problem, x, h_ref=None):
    """Reference values of ``problem`` at grid points ``x``.

    Problems with an exact solution return it. Otherwise the classical
    fifth-order companion is run at ``h_ref`` and ``h_ref / 2`` with
    oracle starting values; the result is accepted if both agree to
    ``config.richardson_tol``. Trajectories are cached in
    ``reference_cache``.

    Parameters
    ----------
    problem :   Problem | BenchmarkId | str
    x :         array
                Points, each ``x0 + k * h_ref`` for integer k.
    h_ref :     float, optional
                Defaults to the smallest benchmark stepsize of the problem
                divided by ``config.oracle_refine``.

    Returns
    -------
    array
                Shape ``(len(x), dim)``.

    Raises
    ------
    OracleNotConverged

    """
    if not isinstance(problem, Problem):
        problem = make_problem(problem)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if problem.has_exact:
        return np.asarray(problem.exact(x)).reshape(len(x), problem.dim)

    if h_ref is None:
        h_ref = _smallest_benchmark_h(parse_problem(problem)) / config.oracle_refine

    key = (problem.name, tuple(sorted(problem.params.items())), h_ref)
    ys = reference_cache.get_or_compute(key, _oracle, problem, h_ref)

    k = (x - problem.x0) / h_ref
    idx = np.rint(k).astype(int)
    if np.any(np.abs(k - idx) > 1e-6) or np.any(idx < 0) or np.any(idx >= len(ys)):
        raise ValueError(f'Points are not on the reference grid of {problem.name} '
                         f'(h_ref={h_ref:.4e})')
    return ys[idx]


def save_references(path):
    """Write the cached reference trajectories to ``path``.

    Raises
    ------
    OSError
                If the file cannot be written.

    """
    reference_cache.save(path)
    logger.debug(f'Saved {len(reference_cache)} reference trajectories to {path}')


def load_references(path):
    """Add reference trajectories saved by :func:`save_references` to the cache.

    A missing file is not an error.

    Returns
    -------
    int
                Number of trajectories loaded.

    """
    if not os.path.isfile(path):
        logger.debug(f'No saved references at {path}')
        return 0
    loaded = Cache.load(path)
    reference_cache.update(loaded.items())
    logger.info(f'Loaded {len(loaded)} reference trajectories from {path}')
    return len(loaded)
