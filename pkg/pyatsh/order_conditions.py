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

"""Order conditions of ATSH methods for trees up to order 7.

An ATSH method has algebraic order p iff every condition with
``rho <= p + 1`` holds. Right-hand sides are phi-expressions; at nu = 0
they reduce to the classical two-step hybrid conditions.

"""

import typing as tp

from dataclasses import dataclass

import numpy as np

from . import config, utils
from .phi import phi_values

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['ConditionResidual', 'residuals', 'residual_table',
                  'verify_order', 'simplifying_check'])


@dataclass(frozen=True)
class ConditionResidual:
    tree_id: str
    rho: int
    lhs: float
    rhs: float

    @property
    def residual(self):
        return self.lhs - self.rhs


def _c(k):
    return lambda b, c, A, Ae: b @ (c ** k)


# (tree, rho, lhs(b, c, A, Ae), rhs(phi_2, phi_4, phi_6))
_CONDITIONS: tp.List[tp.Tuple[str, int, tp.Callable, tp.Callable]] = [
    ('t21', 2, _c(0), lambda p2, p4, p6: 2 * p2),
    ('t31', 3, _c(1), lambda p2, p4, p6: 0.0),
    ('t41', 4, _c(2), lambda p2, p4, p6: 4 * p4),
    ('t42', 4, lambda b, c, A, Ae: b @ Ae, lambda p2, p4, p6: 2 * p4),
    ('t51', 5, _c(3), lambda p2, p4, p6: 0.0),
    ('t52', 5, lambda b, c, A, Ae: b @ (c * Ae), lambda p2, p4, p6: 2 * p4),
    ('t53', 5, lambda b, c, A, Ae: b @ A @ c, lambda p2, p4, p6: 0.0),
    ('t61', 6, _c(4), lambda p2, p4, p6: 48 * p6),
    ('t62', 6, lambda b, c, A, Ae: b @ (c**2 * Ae), lambda p2, p4, p6: 24 * p6),
    ('t63', 6, lambda b, c, A, Ae: b @ (c * (A @ c)), lambda p2, p4, p6: -2 / 3 * p4 + 8 * p6),
    ('t64', 6, lambda b, c, A, Ae: b @ Ae**2, lambda p2, p4, p6: p4 + 12 * p6),
    ('t65', 6, lambda b, c, A, Ae: b @ A @ c**2, lambda p2, p4, p6: 4 * p6),
    ('t66', 6, lambda b, c, A, Ae: b @ A @ Ae, lambda p2, p4, p6: 2 * p6),
    ('t71', 7, _c(5), lambda p2, p4, p6: 0.0),
    ('t72', 7, lambda b, c, A, Ae: b @ (c**3 * Ae), lambda p2, p4, p6: 24 * p6),
    ('t73', 7, lambda b, c, A, Ae: b @ (c**2 * (A @ c)), lambda p2, p4, p6: 0.0),
    ('t74', 7, lambda b, c, A, Ae: b @ (c * Ae**2), lambda p2, p4, p6: 24 * p6),
    ('t75', 7, lambda b, c, A, Ae: b @ (c * (A @ Ae)), lambda p2, p4, p6: -1 / 6 * p4 + 4 * p6),
    ('t76', 7, lambda b, c, A, Ae: b @ (c * (A @ c**2)), lambda p2, p4, p6: p4 / 3),
    ('t77', 7, lambda b, c, A, Ae: b @ (Ae * (A @ c)), lambda p2, p4, p6: -p4 / 3 + 4 * p6),
    ('t78', 7, lambda b, c, A, Ae: b @ A @ c**3, lambda p2, p4, p6: 0.0),
    ('t79', 7, lambda b, c, A, Ae: b @ A @ (c * Ae), lambda p2, p4, p6: 2 * p6),
    ('t7,10', 7, lambda b, c, A, Ae: b @ A @ A @ c, lambda p2, p4, p6: 0.0),
]

MAX_RHO = 7


def residuals(tableau, up_to_order=MAX_RHO):
    """Evaluate all order conditions with ``rho <= up_to_order``.

    Parameters
    ----------
    tableau :       Tableau
    up_to_order :   int
                    Highest tree order, 2 ... 7.

    Returns
    -------
    list of ConditionResidual
                    In table order (t21, t31, t41, t42, ...).

    """
    if not 2 <= up_to_order <= MAX_RHO:
        raise ValueError(f'up_to_order must be in 2..{MAX_RHO}, got {up_to_order}')

    ph = phi_values(tableau.nu, 6)
    p2, p4, p6 = ph[2], ph[4], ph[6]
    b, c, A = tableau.b, tableau.c, tableau.A
    Ae = A.sum(axis=1)

    return [ConditionResidual(tree_id=tree, rho=rho,
                              lhs=float(lhs(b, c, A, Ae)),
                              rhs=float(rhs(p2, p4, p6)))
            for tree, rho, lhs, rhs in _CONDITIONS if rho <= up_to_order]


def residual_table(tableau, up_to_order=MAX_RHO):
    """Order-condition residuals as a DataFrame.

    Columns are ``tree_id``, ``rho``, ``lhs``, ``rhs``, ``residual`` and
    ``passed`` (at ``config.order_tol``).
    """
    builder = utils.DataFrameBuilder(['tree_id', 'rho', 'lhs', 'rhs', 'residual', 'passed'])
    for r in residuals(tableau, up_to_order):
        builder.append_row([r.tree_id, r.rho, r.lhs, r.rhs, r.residual,
                            abs(r.residual) <= config.order_tol])
    return builder.build()


def verify_order(tableau, tol=None):
    """Largest p <= 6 such that all conditions with ``rho <= p + 1`` hold.

    Parameters
    ----------
    tableau :   Tableau
    tol :       float, optional
                Pass/fail tolerance on the residuals. Defaults to
                ``config.order_tol``.

    Returns
    -------
    int

    """
    tol = config.order_tol if tol is None else tol
    failed = [r.rho for r in residuals(tableau) if abs(r.residual) > tol]
    first_failure = min(failed, default=MAX_RHO + 1)
    return first_failure - 2


def simplifying_check(tableau):
    """Return ``max |A e - (c^2 + c) / 2|``."""
    c = tableau.c
    return float(np.max(np.abs(tableau.A.sum(axis=1) - (c**2 + c) / 2)))
