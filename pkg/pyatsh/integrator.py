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

"""Two-step stepping engine for perturbed oscillators ``y'' = -w^2 y + g(x, y)``.

One step of an ATSH method computes stages

    Y_i = (1 + c_i) y_n - c_i y_{n-1} + h^2 sum_j a_ij (-w^2 Y_j + g(x_n + c_j h, Y_j))

and the update

    y_{n+1} = 2 cos(nu) y_n - y_{n-1} + h^2 sum_i b_i g(x_n + c_i h, Y_i).

Classical companions use ``2 y_n`` and ``f = -w^2 y + g`` in the update.

"""

import dataclasses
import enum
import math
import time
import typing as tp

import numpy as np

from scipy.integrate import solve_ivp

from . import config, utils
from .methods import build, method_name, parse_method
from .phi import phi_values

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['Problem', 'TwoStepState', 'IntegrationResult', 'StarterMode',
                  'ExactUnavailable', 'NonFiniteState',
                  'start_value', 'step', 'integrate', 'convergence_order'])

# Relative tolerance of the high-order reference integrations used by starters
_STARTER_RTOL = 1e-13
_STARTER_SUBSTEPS = 100
# Degree of the polynomial fitted to g along the solution for the series starter
_SERIES_DEGREE = 8
# Grid values fitted for the back value of a shortened final step
_BACK_POINTS = 8


class ExactUnavailable(ValueError):
    """An exact solution was requested but the problem has none."""


class NonFiniteState(ArithmeticError):
    """A stage or update became inf/nan or grew past the blow-up bound."""

    def __init__(self, x, where):
        self.x = x
        self.where = where
        super().__init__(f'Non-finite or diverging {where} at x={x:.6g}')


class StarterMode(enum.Enum):
    EXACT = 'exact'
    SERIES = 'series'
    ORACLE = 'oracle'


def _parse_starter(mode):
    if isinstance(mode, StarterMode):
        return mode
    try:
        return StarterMode(str(mode).lower())
    except ValueError:
        raise ValueError(f'Unknown starter "{mode}". Choose from: '
                         f'{", ".join(m.value for m in StarterMode)}') from None


@dataclasses.dataclass(frozen=True, eq=False)
class Problem:
    """Initial value problem ``y'' = -omega^2 y + g(x, y)``.

    Attributes
    ----------
    name :      str
    omega :     float
                Fitted frequency, >= 0.
    g :         callable
                ``g(x, y) -> array`` of the same length as ``y``.
    x0, x_end : float
    y0, dy0 :   array
                Initial value and derivative. Complex values are allowed.
    exact :     callable, optional
                ``exact(x)`` for scalar ``x`` returns shape ``(dim, )``,
                for an array of n points shape ``(n, dim)``.
    params :    dict
                Parameters the problem was made with (for display and
                caching).

    """
    name: str
    omega: float
    g: tp.Callable[[float, np.ndarray], np.ndarray]
    x0: float
    x_end: float
    y0: np.ndarray
    dy0: np.ndarray
    exact: tp.Optional[tp.Callable] = None
    params: tp.Mapping = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        y0 = utils._as_state(self.y0, 'y0')
        dy0 = utils._as_state(self.dy0, 'dy0')
        if y0.shape != dy0.shape:
            raise ValueError(f'y0 and dy0 differ in shape: {y0.shape} vs {dy0.shape}')
        dtype = np.result_type(y0, dy0)
        object.__setattr__(self, 'y0', y0.astype(dtype))
        object.__setattr__(self, 'dy0', dy0.astype(dtype))
        object.__setattr__(self, 'params', dict(self.params))
        if not self.x_end > self.x0:
            raise ValueError(f'x_end must be > x0, got [{self.x0}, {self.x_end}]')
        if self.omega < 0 or not math.isfinite(self.omega):
            raise ValueError(f'omega must be finite and >= 0, got {self.omega}')
        g0 = np.asarray(self.g(self.x0, self.y0))
        if g0.shape != self.y0.shape:
            raise ValueError(f'g returns shape {g0.shape}, expected {self.y0.shape}')

    @property
    def dim(self):
        return len(self.y0)

    @property
    def has_exact(self):
        return self.exact is not None

    def f(self, x, y):
        """Full right-hand side ``-omega^2 y + g(x, y)``."""
        return -self.omega ** 2 * y + np.asarray(self.g(x, y))

    @property
    def growth_bound(self):
        """Magnitude beyond which a state counts as blown up."""
        scale = max(1.0, float(np.max(np.abs(self.y0))), float(np.max(np.abs(self.dy0))))
        return config.blowup_factor * scale

    def first_order_rhs(self, x, u):
        """Right-hand side of the equivalent system in ``u = (y, y')``."""
        y, v = u[:self.dim], u[self.dim:]
        return np.concatenate([v, self.f(x, y)])

    def __repr__(self):
        return (f'<Problem {self.name} dim={self.dim} omega={self.omega:g} '
                f'[{self.x0:g}, {self.x_end:g}]>')


@dataclasses.dataclass(frozen=True)
class TwoStepState:
    """Data carried from one step to the next.

    ``g_at_prev`` equals ``g(x_n - h, y_prev)`` and ``g_at_curr`` equals
    ``g(x_n, y_curr)`` when present; stages at ``c = -1`` and ``c = 0``
    with zero A-rows take them instead of calling ``g``.
    """
    x_n: float
    y_prev: np.ndarray
    y_curr: np.ndarray
    g_at_prev: tp.Optional[np.ndarray] = None
    g_at_curr: tp.Optional[np.ndarray] = None
    g_evals: int = 0


@dataclasses.dataclass
class IntegrationResult:
    """Trajectory and accounting of one fixed-step run.

    ``g_evals`` counts the evaluations of ``g`` made by the two-step
    method; evaluations spent computing ``y_1`` are in ``starter_evals``.
    """
    method: str
    problem: str
    h: float
    xs: np.ndarray
    ys: np.ndarray
    g_evals: int
    starter_evals: int = 0
    errors: tp.Optional[np.ndarray] = None
    wall_time_s: float = 0.0

    @property
    def steps(self):
        """Number of grid intervals (the starter interval included)."""
        return len(self.xs) - 1

    @property
    def max_global_error(self):
        if self.errors is None:
            return None
        return float(np.max(self.errors))

    def total_evals(self, count_starter=False):
        return self.g_evals + (self.starter_evals if count_starter else 0)

    def set_reference(self, ref):
        """Measure errors against reference values at ``self.xs``."""
        ref = np.asarray(ref).reshape(self.ys.shape)
        diff = np.abs(self.ys - ref)
        # Scale rows before squaring so huge differences do not overflow
        scale = diff.max(axis=1)
        safe = np.where(scale > 0, scale, 1.0)
        self.errors = scale * np.sqrt(np.sum((diff / safe[:, None]) ** 2, axis=1))
        return self


def _reference_run(problem, x_start, u_start, x_stop, max_step, dense=False):
    """Classical high-order integration of the first-order system."""
    scale = max(1.0, float(np.max(np.abs(u_start))))
    sol = solve_ivp(problem.first_order_rhs, (x_start, x_stop), u_start,
                    method='DOP853', rtol=_STARTER_RTOL, atol=_STARTER_RTOL * 1e-2 * scale,
                    max_step=max_step, dense_output=dense)
    if not sol.success:
        raise RuntimeError(f'Starter integration of {problem.name} failed: {sol.message}')
    return sol


def _series_start(problem, h):
    """Truncated Scheifele series using derivatives of g along the solution."""
    dim, x0 = problem.dim, problem.x0
    u0 = np.concatenate([problem.y0, problem.dy0])
    sol = _reference_run(problem, x0, u0, x0 + h, h / _STARTER_SUBSTEPS, dense=True)

    # Chebyshev points on [0, 1]; phi(x0 + t h) ~ sum_k a_k t^k
    n = 2 * _SERIES_DEGREE + 1
    t = 0.5 * (1 - np.cos(np.pi * (np.arange(n) + 0.5) / n))
    vals = np.array([problem.g(x0 + ti * h, sol.sol(x0 + ti * h)[:dim]) for ti in t])
    coef = np.polynomial.polynomial.polyfit(t, vals, _SERIES_DEGREE)

    ph = phi_values(problem.omega * h, _SERIES_DEGREE + 2)
    fact = np.array([math.factorial(k) for k in range(_SERIES_DEGREE + 1)])
    forcing = (fact * ph[2:])[:, None] * coef.reshape(_SERIES_DEGREE + 1, dim)
    y1 = problem.y0 * ph[0] + h * problem.dy0 * ph[1] + h ** 2 * forcing.sum(axis=0)
    return y1, sol.nfev + n


def start_value(problem, h, mode=None):
    """Approximate ``y(x0 + h)`` to start the two-step recurrence.

    Parameters
    ----------
    problem :   Problem
    h :         float
    mode :      StarterMode | str, optional
                ``'exact'`` uses the exact solution, ``'series'`` the
                Scheifele series with numerically obtained derivatives of
                ``g``, ``'oracle'`` a DOP853 integration with steps of at
                most ``h / 100``. Defaults to exact when available.

    Returns
    -------
    y1 :        array
    cost :      int
                Evaluations of the right-hand side spent.

    """
    if h <= 0:
        raise ValueError(f'h must be > 0, got {h}')
    if mode is None:
        mode = StarterMode.EXACT if problem.has_exact else StarterMode.ORACLE
    mode = _parse_starter(mode)

    if mode is StarterMode.EXACT:
        if not problem.has_exact:
            raise ExactUnavailable(f'Problem {problem.name} has no exact solution')
        return np.asarray(problem.exact(problem.x0 + h)).astype(problem.y0.dtype), 0
    if mode is StarterMode.SERIES:
        return _series_start(problem, h)

    u0 = np.concatenate([problem.y0, problem.dy0])
    sol = _reference_run(problem, problem.x0, u0, problem.x0 + h, h / _STARTER_SUBSTEPS)
    return sol.y[:problem.dim, -1], sol.nfev


def _reusable(tableau, i, node):
    return tableau.c[i] == node and not tableau.A[i].any()


def step(tableau, problem, state, h):
    """Advance ``(y_{n-1}, y_n)`` to ``(y_n, y_{n+1})``.

    Parameters
    ----------
    tableau :   Tableau
                Built at ``nu = problem.omega * h`` (adapted) or the
                classical companion.
    problem :   Problem
    state :     TwoStepState
    h :         float

    Returns
    -------
    TwoStepState
                For ``x_{n+1}``; its ``g_at_prev`` holds ``g(x_n, y_n)``.

    Raises
    ------
    NonFiniteState
                If a stage or the update is not finite or exceeds
                ``problem.growth_bound``.

    """
    x_n, y_prev, y_curr = state.x_n, state.y_prev, state.y_curr
    h2 = h * h
    w2 = problem.omega ** 2
    c, A, b = tableau.c, tableau.A, tableau.b
    s = tableau.s

    bound = problem.growth_bound
    dtype = np.result_type(y_curr, y_prev)
    G = np.empty((s, len(y_curr)), dtype=dtype)
    F = np.empty_like(G)
    fresh = 0
    g_curr = state.g_at_curr
    for i in range(s):
        Yi = (1 + c[i]) * y_curr - c[i] * y_prev
        if i:
            Yi = Yi + h2 * (A[i, :i] @ F[:i])
        if not np.all(np.abs(Yi) <= bound):
            raise NonFiniteState(x_n, f'stage {i + 1}')

        if state.g_at_prev is not None and _reusable(tableau, i, -1):
            G[i] = state.g_at_prev
        elif g_curr is not None and _reusable(tableau, i, 0):
            G[i] = g_curr
        else:
            G[i] = problem.g(x_n + c[i] * h, Yi)
            fresh += 1
            if _reusable(tableau, i, 0):
                g_curr = G[i].copy()
        F[i] = -w2 * Yi + G[i]

    if tableau.adapted:
        y_next = tableau.two_phi0 * y_curr - y_prev + h2 * (b @ G)
    else:
        y_next = 2 * y_curr - y_prev + h2 * (b @ F)
    if not np.all(np.abs(y_next) <= bound):
        raise NonFiniteState(x_n + h, 'update')

    return TwoStepState(x_n=x_n + h, y_prev=y_curr, y_curr=y_next,
                        g_at_prev=g_curr, g_at_curr=None,
                        g_evals=state.g_evals + fresh)


def _back_value(xs, ys, omega, h, x):
    """Evaluate at ``x`` the fit ``a cos(omega d) + b sin(omega d) + poly(d / h)``
    through the last grid values, ``d = x - xs[-1]``."""
    k = min(_BACK_POINTS, len(xs))

    def basis(d):
        d = np.atleast_1d(d)
        cols = [np.cos(omega * d), np.sin(omega * d)] + [(d / h) ** m for m in range(k - 2)]
        return np.stack(cols, axis=-1)

    coef = np.linalg.lstsq(basis(xs[-k:] - xs[-1]), ys[-k:], rcond=None)[0]
    return (basis(x - xs[-1]) @ coef)[0]


def _grid(problem, h):
    """Number of full steps and length of a shortened final step (0 if none)."""
    length = problem.x_end - problem.x0
    n_float = length / h
    n = round(n_float)
    if n >= 1 and abs(n_float - n) <= 64 * config.eps_machine * n:
        return n, 0.0
    n = math.floor(n_float)
    if n < 1:
        raise ValueError(f'h={h} is larger than the interval [{problem.x0}, {problem.x_end}]')
    return n, length - n * h


def integrate(method, problem, h, starter=None, reference=None):
    """Integrate ``problem`` with fixed stepsize ``h``.

    Parameters
    ----------
    method :    MethodId | Classical | str
    problem :   Problem
    h :         float
                Stepsize. If it does not divide the interval, the last
                step is shortened to land on ``x_end``.
    starter :   StarterMode | str, optional
                See :func:`start_value`.
    reference : callable, optional
                ``reference(xs) -> (n, dim)`` array used to measure errors
                when the problem has no exact solution.

    Returns
    -------
    IntegrationResult

    Examples
    --------
    >>> p = pyatsh.make_problem('problem1')
    >>> res = pyatsh.integrate('atsh5-minerr', p, 2**-3)
    >>> res.max_global_error < 1e-5
    True

    """
    if not h > 0:
        raise ValueError(f'h must be > 0, got {h}')
    method = parse_method(method)
    tableau = build(method, problem.omega * h)
    n_full, h_last = _grid(problem, h)

    start = time.perf_counter()
    y1, starter_evals = start_value(problem, h, starter)

    dtype = np.result_type(problem.y0, y1)
    ys = np.empty((n_full + 1 + (h_last > 0), problem.dim), dtype=dtype)
    ys[0], ys[1] = problem.y0, y1
    state = TwoStepState(x_n=problem.x0 + h, y_prev=ys[0], y_curr=ys[1])
    for n in range(1, n_full):
        state = step(tableau, problem, state, h)
        ys[n + 1] = state.y_curr
    xs = problem.x0 + h * np.arange(n_full + 1, dtype=float)
    g_evals = state.g_evals

    if h_last > 0:
        logger.debug(f'{method_name(method)}: shortened final step {h_last:.3e} '
                     f'on {problem.name} (h={h:g})')
        x_n = xs[-1]
        back = _back_value(xs, ys[:n_full + 1], problem.omega, h, x_n - h_last)
        last = step(build(method, problem.omega * h_last), problem,
                    TwoStepState(x_n=x_n, y_prev=np.asarray(back, dtype=dtype), y_curr=ys[n_full]),
                    h_last)
        ys[-1] = last.y_curr
        xs = np.append(xs, problem.x_end)
        g_evals += last.g_evals
    else:
        xs[-1] = problem.x_end

    res = IntegrationResult(method=method_name(method), problem=problem.name, h=h,
                            xs=xs, ys=ys, g_evals=g_evals, starter_evals=starter_evals,
                            wall_time_s=time.perf_counter() - start)
    if problem.has_exact:
        res.set_reference(problem.exact(xs))
    elif reference is not None:
        res.set_reference(reference(xs))
    return res


def convergence_order(method, problem, h_list, starter=None, reference=None):
    """Least-squares slope of ``log(max_global_error)`` against ``log(h)``.

    Parameters
    ----------
    method :    MethodId | Classical | str
    problem :   Problem
    h_list :    sequence of float
                Strictly decreasing, at least 3 entries.
    starter :   StarterMode | str, optional
    reference : callable, optional
                Required if the problem has no exact solution.

    Returns
    -------
    float

    """
    h_list = np.asarray(h_list, dtype=float)
    if len(h_list) < 3:
        raise ValueError(f'Need at least 3 stepsizes, got {len(h_list)}')
    if np.any(np.diff(h_list) >= 0):
        raise ValueError('h_list must be strictly decreasing')
    if not problem.has_exact and reference is None:
        raise ExactUnavailable(f'Problem {problem.name} has no exact solution; '
                               'pass a reference')

    errors = [integrate(method, problem, h, starter=starter,
                        reference=reference).max_global_error for h in h_list]
    slope = np.polyfit(np.log(h_list), np.log(errors), 1)[0]
    logger.debug(f'{method_name(method)} on {problem.name}: errors {errors}, slope {slope:.3f}')
    return float(slope)
