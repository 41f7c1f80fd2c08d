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

"""Explicit adapted two-step hybrid (ATSH) tableaus.

All methods share ``c_1 = -1``, ``c_2 = 0`` and zero first two rows of
``A``: stage 1 is ``y_{n-1}`` and stage 2 is ``y_n``. Weights (and for the
four-stage methods also ``A`` and ``c_4``) depend on ``nu = omega * h``
through phi_2, phi_4 and phi_6.

"""

import dataclasses
import enum
import functools
import math
import typing as tp

import numpy as np
import pandas as pd

from . import config
from .phi import phi_values

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['MethodId', 'Classical', 'Tableau', 'SingularCoefficient',
                  'build', 'parse_method', 'method_name', 'method_label',
                  'available_methods'])


class MethodId(enum.Enum):
    """Coefficient families. Values are the names used on the command line."""
    ADAPTED_NUMEROV4 = 'numerov4'
    ATSH5_MIN_ERR = 'atsh5-minerr'
    ATSH5_PHASE8 = 'atsh5-pl8'
    ATSH4_ZERO_DISS = 'atsh4-zd'


@dataclasses.dataclass(frozen=True)
class Classical:
    """The nu = 0 companion of ``inner`` used with the classical update."""
    inner: MethodId

    def __post_init__(self):
        if not isinstance(self.inner, MethodId):
            raise TypeError(f'Classical companion needs a MethodId, got {type(self.inner)}')

    @property
    def value(self):
        return CLASSICAL_PREFIX + self.inner.value


Method = tp.Union[MethodId, Classical]

CLASSICAL_PREFIX = 'classical:'

# (p, q, r, label): algebraic, phase-lag and dissipation order
_DECLARED = {
    MethodId.ADAPTED_NUMEROV4: (4, 4, math.inf, 'ATSH4(4,inf)'),
    MethodId.ATSH5_MIN_ERR: (5, 6, 5, 'ATSH5(6,5)'),
    MethodId.ATSH5_PHASE8: (5, 8, 5, 'ATSH5(8,5)'),
    MethodId.ATSH4_ZERO_DISS: (4, 6, math.inf, 'ATSH4(6,inf)'),
}


class SingularCoefficient(ValueError):
    """A tableau denominator vanishes at this ``nu``."""

    def __init__(self, method, nu, factor, value, scale):
        self.method = method
        self.nu = nu
        self.factor = factor
        super().__init__(f'{method_name(method)}: factor {factor} = {value:.3e} '
                         f'(scale {scale:.3e}) is singular at nu={nu}')


def _readonly(x):
    arr = np.array(x, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class Tableau:
    """A two-step hybrid method at fixed ``nu``.

    Attributes
    ----------
    method :    MethodId | Classical
    nu :        float
                ``omega * h`` the coefficients were evaluated at (0 for
                classical companions).
    c :         (s, ) array
    A :         (s, s) array, strictly lower triangular
    b :         (s, ) array
    p, q, r :   declared algebraic, phase-lag and dissipation order
                (``r = inf`` for zero-dissipative methods)
    adapted :   bool
                True: update uses ``2 cos(nu) y_n`` and stages carry
                ``-omega^2 Y``. False: classical update ``2 y_n`` with
                ``f = -omega^2 y + g``.

    """
    method: Method
    nu: float
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    p: int
    q: int
    r: float
    adapted: bool

    def __post_init__(self):
        for name in ('c', 'A', 'b'):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        s = len(self.b)
        if self.A.shape != (s, s) or self.c.shape != (s, ):
            raise ValueError("Sizes of matrix and vectors don't match")

    @property
    def s(self):
        """Number of stages."""
        return len(self.b)

    @property
    def e(self):
        return np.ones(self.s)

    @property
    def name(self):
        return method_name(self.method)

    @property
    def label(self):
        return method_label(self.method)

    @property
    def two_phi0(self):
        """Coefficient of ``y_n`` in the update."""
        return 2 * math.cos(self.nu) if self.adapted else 2.0

    @property
    def zero_dissipative(self):
        return math.isinf(self.r)

    def is_explicit(self) -> bool:
        """Checks whether ``A`` is strictly lower triangular."""
        return not np.any(np.triu(self.A))

    def perturbed(self, i, j, delta):
        """Return a copy with ``A[i, j]`` shifted by ``delta``."""
        A = np.array(self.A)
        A[i, j] += delta
        return dataclasses.replace(self, A=A)

    def max_abs_diff(self, other):
        """Largest coefficient difference to another tableau of equal size."""
        return max(np.max(np.abs(self.c - other.c)),
                   np.max(np.abs(self.A - other.A)),
                   np.max(np.abs(self.b - other.b)))

    def to_frame(self):
        """Butcher-style table: one row per stage with c, A row and b."""
        df = pd.DataFrame(self.A, columns=[f'a_{j + 1}' for j in range(self.s)],
                          index=pd.RangeIndex(1, self.s + 1, name='stage'))
        df.insert(0, 'c', self.c)
        df['b'] = self.b
        return df

    def __repr__(self):
        return f'<Tableau {self.name} nu={self.nu:g} s={self.s} (p={self.p}, q={self.q}, r={self.r})>'


def _check_factor(method, nu, factor, value, scale):
    if abs(value) < config.singular_rtol * scale:
        raise SingularCoefficient(method, nu, factor, value, scale)


def _numerov4(method, nu, ph):
    p2, p4 = ph[2], ph[4]
    c = [-1, 0, 1]
    A = np.zeros((3, 3))
    A[2, 1] = 1
    b = [2 * p4, 2 * p2 - 4 * p4, 2 * p4]
    return c, A, b


def _atsh5_minerr(method, nu, ph):
    p2, p4, p6 = ph[2], ph[4], ph[6]
    S1 = 600 * p6 - 13 * p4
    S2 = 400 * p6 - 21 * p4
    S3 = 40000 * p6 - 2877 * p4
    _check_factor(method, nu, 'phi_4', p4, 1 / 24)
    _check_factor(method, nu, 'S1', S1, 600 * abs(p6) + 13 * abs(p4))
    _check_factor(method, nu, 'S2', S2, 400 * abs(p6) + 21 * abs(p4))
    _check_factor(method, nu, 'S3', S3, 40000 * abs(p6) + 2877 * abs(p4))

    A = np.zeros((4, 4))
    A[2, 0] = 126651 / 2000000
    A[2, 1] = 900249 / 2000000
    A[3, 0] = 100 * S1 * S2 * (720000 * p6**2 - 124158 * p6 * p4 + 6031 * p4**2) / (305488243 * p4**4)
    A[3, 1] = S1 * S2 * (-8000000 * p6**2 + 886200 * p6 * p4 + 2849 * p4**2) / (13119127 * p4**4)
    A[3, 2] = 20000 * S1 * S2 * S3 * p6 / (2138417701 * p4**4)
    b = [6 * (40000 * p6 - 1323 * p4) * p4 / (163 * S1),
         2 * (15338 * p4**2 - 240000 * p6 * p4 - 3969 * p4 * p2 + 75600 * p2 * p6) / (189 * S2),
         400000000 * (12 * p6 - p4) * p4 / (30807 * S3),
         3748322 * p4**4 / (9 * S1 * S2 * S3)]
    c = [-1, 0, 63 / 100, 3 * S2 / (37 * p4)]
    return c, A, b


def _atsh5_phase8(method, nu, ph):
    p2, p4, p6 = ph[2], ph[4], ph[6]
    S1 = 336 * p6 - 25 * p4
    S2 = 168 * p6 - 11 * p4
    S3 = 9408 * p6 - 775 * p4
    _check_factor(method, nu, 'phi_4', p4, 1 / 24)
    _check_factor(method, nu, 'S1', S1, 336 * abs(p6) + 25 * abs(p4))
    _check_factor(method, nu, 'S2', S2, 168 * abs(p6) + 11 * abs(p4))
    _check_factor(method, nu, 'S3', S3, 9408 * abs(p6) + 775 * abs(p4))

    A = np.zeros((4, 4))
    A[2, 0] = 1325 / 43904
    A[2, 1] = 35775 / 43904
    A[3, 0] = 28 * S1 * S2 * (18816 * p6**2 - 2186 * p6 * p4 + 53 * p4**2) / (4293 * p4**4)
    A[3, 1] = -S1 * S2 * (526848 * p6**2 - 51800 * p6 * p4 + 475 * p4**2) / (2025 * p4**4)
    A[3, 2] = 1568 * S1 * S2 * S3 * p6 / (107325 * p4**4)
    b = [2 * (9408 * p6 - 625 * p4) * p4 / (53 * S2),
         2 * (1418 * p4**2 - 625 * p4 * p2 - 18816 * p6 * p4 + 8400 * p2 * p6) / (25 * S1),
         2458624 * (12 * p6 - p4) * p4 / (1325 * S3),
         162 * p4**4 / (S1 * S2 * S3)]
    c = [-1, 0, 25 / 28, S1 / (3 * p4)]
    return c, A, b


def _atsh4_zerodiss(method, nu, ph):
    p2, p4, p6 = ph[2], ph[4], ph[6]
    _check_factor(method, nu, 'phi_4', p4, 1 / 24)

    A = np.zeros((4, 4))
    A[2, 1] = 429 / 800
    A[3, 0] = 38200 * p6 / (79233 * p4)
    A[3, 1] = -5 * (7640 * p6 + 637 * p4) / (31213 * p4)
    A[3, 2] = 764000 * p6 / (1030029 * p4)
    b = [-6 * p4 / 11,
         -596 * p4 / 65 + 2 * p2,
         128000 * p4 / 27313,
         4802 * p4 / 955]
    c = [-1, 0, 13 / 20, -5 / 7]
    return c, A, b


_BUILDERS = {
    MethodId.ADAPTED_NUMEROV4: _numerov4,
    MethodId.ATSH5_MIN_ERR: _atsh5_minerr,
    MethodId.ATSH5_PHASE8: _atsh5_phase8,
    MethodId.ATSH4_ZERO_DISS: _atsh4_zerodiss,
}


@functools.lru_cache(maxsize=2048)
def _build(method, nu):
    family = method.inner if isinstance(method, Classical) else method
    p, q, r, _ = _DECLARED[family]
    c, A, b = _BUILDERS[family](method, nu, phi_values(nu, 6))
    return Tableau(method=method, nu=nu, c=c, A=A, b=b, p=p, q=q, r=r,
                   adapted=not isinstance(method, Classical))


def build(method, nu=0.0):
    """Build the tableau of ``method`` at ``nu``.

    Parameters
    ----------
    method :    MethodId | Classical | str
                Method or its command-line name, e.g. ``'atsh5-minerr'`` or
                ``'classical:numerov4'``.
    nu :        float
                ``omega * h``, must be >= 0. Ignored for classical
                companions, which are always evaluated at 0.

    Returns
    -------
    Tableau

    Raises
    ------
    SingularCoefficient
                If a denominator of the coefficient formulas vanishes.

    Examples
    --------
    >>> t = pyatsh.build('classical:numerov4')
    >>> t.b
    array([0.08333333, 0.83333333, 0.08333333])

    """
    method = parse_method(method)
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise ValueError(f'nu must be finite and >= 0, got {nu}')
    if isinstance(method, Classical):
        nu = 0.0
    return _build(method, nu)


def parse_method(x):
    """Turn a command-line name into a MethodId or Classical companion."""
    if isinstance(x, (MethodId, Classical)):
        return x
    if not isinstance(x, str):
        raise TypeError(f'Expected method name, MethodId or Classical, got {type(x)}')
    name = x.strip().lower()
    classical = name.startswith(CLASSICAL_PREFIX)
    if classical:
        name = name[len(CLASSICAL_PREFIX):]
    try:
        family = MethodId(name)
    except ValueError:
        raise ValueError(f'Unknown method "{x}". Choose from: '
                         f'{", ".join(available_methods())}') from None
    return Classical(family) if classical else family


def method_name(method):
    """Command-line name, e.g. ``'classical:atsh4-zd'``."""
    return parse_method(method).value


def method_label(method):
    """Label as used in efficiency plots, e.g. ``'ATSH5(6,5)'``."""
    method = parse_method(method)
    if isinstance(method, Classical):
        return 'classical ' + _DECLARED[method.inner][3]
    return _DECLARED[method][3]


def available_methods(classical=True):
    """All method names, adapted first."""
    names = [m.value for m in MethodId]
    if classical:
        names += [CLASSICAL_PREFIX + n for n in names]
    return names
