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

"""Evaluation of the phi-functions and Scheifele's G-functions.

The phi-functions are

    phi_0(nu) = cos(nu),  phi_1(nu) = sin(nu) / nu,
    phi_j(nu) = sum_k (-1)^k nu^(2k) / (2k + j)!

and satisfy ``phi_j + nu**2 * phi_{j+2} = 1/j!``. The closed forms obtained
from that recurrence subtract nearly equal numbers when ``nu`` is small
compared to ``j``, so the Taylor series is used there instead.

"""

import functools
import math

from dataclasses import dataclass

import numpy as np

from . import config

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['PhiTable', 'phi', 'phi_table', 'phi_values', 'g_function'])

# Series summation stops once the next term is this small relative to 1/j!
_SERIES_RTOL = 1e-18


def _check_index(j):
    if not isinstance(j, (int, np.integer)) or isinstance(j, bool):
        raise TypeError(f'phi index must be an integer, got {type(j)}')
    if j < 0:
        raise ValueError(f'phi index must be >= 0, got {j}')
    return int(j)


def _check_nu(nu):
    nu = float(nu)
    if not math.isfinite(nu):
        raise ValueError(f'nu must be finite, got {nu}')
    # phi_j is even in nu
    return abs(nu)


def _series_threshold(j):
    """|nu| below which phi_j is summed from its Taylor series.

    Past sqrt((j+1)(j+2))/2 the first series term no longer dominates
    while the closed form has stopped cancelling.
    """
    return max(config.phi_series_threshold, 0.5 * math.sqrt((j + 1) * (j + 2)))


def _series(j, nu):
    term = 1.0 / math.factorial(j)
    stop = _SERIES_RTOL * term
    nu2 = nu * nu
    terms = [term]
    k = 0
    while True:
        term *= -nu2 / ((2 * k + j + 1) * (2 * k + j + 2))
        k += 1
        if abs(term) < stop:
            break
        terms.append(term)
    return math.fsum(terms)


def _closed_form(j, nu):
    m, odd = divmod(j, 2)
    if odd:
        head = math.sin(nu) / nu
        partial = [(-1) ** k * nu ** (2 * k) / math.factorial(2 * k + 1) for k in range(m)]
    else:
        head = math.cos(nu)
        partial = [(-1) ** k * nu ** (2 * k) / math.factorial(2 * k) for k in range(m)]
    diff = math.fsum([head] + [-t for t in partial])
    return (-1) ** m * diff / nu ** (2 * m)


def phi(j, nu):
    """Evaluate the phi-function of index ``j`` at ``nu``.

    Parameters
    ----------
    j :     int
            Index, ``j >= 0``.
    nu :    float
            Dimensionless frequency ``omega * h``. Negative values are
            allowed (phi_j is even).

    Returns
    -------
    float

    Examples
    --------
    >>> pyatsh.phi(4, 0) == 1 / 24
    True
    >>> round(pyatsh.phi(2, 1), 12)  # 1 - cos(1)
    0.459697694132

    """
    j = _check_index(j)
    nu = _check_nu(nu)

    if j == 0:
        return math.cos(nu)
    if j == 1:
        # Resolved analytically at 0
        return 1.0 if nu == 0 else math.sin(nu) / nu
    if nu < _series_threshold(j):
        return _series(j, nu)
    return _closed_form(j, nu)


@functools.lru_cache(maxsize=4096)
def _phi_row(nu, j_max):
    return tuple(phi(j, nu) for j in range(j_max + 1))


def phi_values(nu, j_max=None):
    """Return phi_0(nu) ... phi_{j_max}(nu) as a read-only array."""
    j_max = config.phi_j_max if j_max is None else _check_index(j_max)
    values = np.array(_phi_row(_check_nu(nu), j_max))
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class PhiTable:
    """Values phi_0(nu) ... phi_{j_max}(nu) for a single ``nu``.

    Immutable; safe to share between threads.
    """
    nu: float
    values: np.ndarray

    @property
    def j_max(self):
        return len(self.values) - 1

    def __getitem__(self, j):
        return float(self.values[j])

    def __len__(self):
        return len(self.values)

    def recurrence_residuals(self):
        """``phi_j + nu^2 phi_{j+2} - 1/j!`` for j = 0 ... j_max - 2."""
        j = np.arange(self.j_max - 1)
        inv_fact = np.array([1.0 / math.factorial(int(i)) for i in j])
        return self.values[:-2] + self.nu ** 2 * self.values[2:] - inv_fact


def phi_table(nu, j_max=None):
    """Tabulate the phi-functions for one ``nu``.

    Parameters
    ----------
    nu :        float
    j_max :     int, optional
                Highest index, at least 2. Defaults to ``config.phi_j_max``.

    Returns
    -------
    PhiTable

    """
    j_max = config.phi_j_max if j_max is None else _check_index(j_max)
    if j_max < 2:
        raise ValueError(f'j_max must be >= 2, got {j_max}')
    return PhiTable(nu=float(nu), values=phi_values(nu, j_max))


def g_function(j, h, omega):
    """Scheifele's G-function ``G_j(h) = h**j * phi_j(omega * h)``."""
    if h <= 0:
        raise ValueError(f'h must be > 0, got {h}')
    return h ** _check_index(j) * phi(j, omega * h)
