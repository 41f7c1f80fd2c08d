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

"""Linear stability, phase lag and dissipation.

Applied to the test equation ``y'' = -omega^2 y - epsilon y`` an ATSH
method gives the recurrence ``y_{n+1} - S y_n + P y_{n-1} = 0`` with

    S = 2 cos(nu) - z b^T N^-1 (e + c),    P = 1 - z b^T N^-1 c,

``nu = omega h``, ``z = epsilon h^2`` and ``N = I + (nu^2 + z) A``.
Classical companions see ``y'' = -(omega^2 + epsilon) y`` with the
``nu = 0`` tableau, i.e. ``nu`` is replaced by 0 and ``z`` by ``nu^2 + z``.

"""

import dataclasses
import enum
import math
import typing as tp

import numpy as np
import pandas as pd

from . import config, utils
from .methods import Classical, SingularCoefficient, build, method_name, parse_method
from .phi import phi_values

# Set up logging
logger = config.get_logger(__name__)

__all__ = sorted(['StabilityClass', 'StabilityPoint', 'PhasePoint', 'LeadingTerms',
                  'RegionScan', 'OutsideDomain', 'FitFailed',
                  's_and_p', 'classify', 'scan_region', 'phase_point',
                  'phase_table', 'estimate_leading', 'stability_intervals',
                  'simulate_recurrence', 'ck_uk', 'is_zero_dissipative',
                  'zero_dissipative_phase_order'])

# Stepsizes H = 2**-2 ... 2**-8 for leading-term fits
LEADING_EXPONENTS = range(2, 9)
# Points within this many ulps of roundoff are dropped from fits
_ROUNDOFF_ULPS = 100
# Integer-snap tolerance on fitted slopes
_SNAP_TOL = 0.1


class OutsideDomain(ValueError):
    """Phase lag is undefined: ``P <= 0`` or ``|S / (2 sqrt(P))| > 1``."""


class FitFailed(RuntimeError):
    """A log-log slope could not be snapped to an integer."""


class StabilityClass(enum.Enum):
    PERIODIC = 'periodic'
    ABSOLUTELY_STABLE = 'absolutely-stable'
    UNSTABLE = 'unstable'


# Integer codes used in region grids
_CODES = {StabilityClass.UNSTABLE: 0,
          StabilityClass.ABSOLUTELY_STABLE: 1,
          StabilityClass.PERIODIC: 2}
_FROM_CODE = {v: k for k, v in _CODES.items()}


@dataclasses.dataclass(frozen=True)
class StabilityPoint:
    nu: float
    z: float
    S: float
    P: float
    cls: StabilityClass

    @property
    def roots(self):
        """Roots of ``xi^2 - S xi + P``."""
        return np.roots([1.0, -self.S, self.P])


@dataclasses.dataclass(frozen=True)
class PhasePoint:
    H: float
    omega: float
    epsilon: float
    nu: float
    z: float
    phase_lag: float
    dissipation: float


class LeadingTerms(tp.NamedTuple):
    """Phase-lag order q, dissipation order r and their constants.

    ``phase_lag ~ c_phi H^(q+1)`` and ``dissipation ~ c_d H^(r+1)``;
    ``r = inf`` and ``c_d = 0`` for zero-dissipative methods.
    """
    q: int
    c_phi: float
    r: float
    c_d: float


def _forward_solve(A, k, rhs):
    """Solve ``(I + k A) v = rhs`` for unit lower triangular ``I + k A``.

    ``k`` may be an array; the result has shape ``(s, ) + k.shape``.
    """
    k = np.asarray(k, dtype=float)
    s = len(rhs)
    v = np.empty((s, ) + k.shape)
    for i in range(s):
        v[i] = rhs[i] - k * np.tensordot(A[i, :i], v[:i], axes=1)
    return v


def _weights(tableau, k):
    """``w0 = b^T N^-1 c`` and ``w1 = b^T N^-1 (e + c)`` with ``N = I + k A``."""
    b, c = tableau.b, tableau.c
    w0 = np.tensordot(b, _forward_solve(tableau.A, k, c), axes=1)
    w1 = np.tensordot(b, _forward_solve(tableau.A, k, tableau.e + c), axes=1)
    return w0, w1


def _fitted(tableau, nu, z):
    """``(nu_fit, z_eff)`` seen by the tableau's update."""
    if tableau.adapted:
        return nu, z
    return 0.0 * nu, nu ** 2 + z


def s_and_p(tableau, nu, z):
    """Stability functions ``S(nu^2, z)`` and ``P(nu^2, z)``.

    Parameters
    ----------
    tableau :   Tableau
                For adapted methods build it at the same ``nu``.
    nu :        float
    z :         float | array
                Arrays are evaluated in one pass.

    Returns
    -------
    S, P :      float | array

    """
    z = np.asarray(z, dtype=float)
    w0, w1 = _weights(tableau, nu ** 2 + z)
    nu_fit, z_eff = _fitted(tableau, nu, z)
    S = 2 * np.cos(nu_fit) - z_eff * w1
    P = 1 - z_eff * w0
    if S.ndim == 0:
        return float(S), float(P)
    return S, P


def _classify_codes(S, P, tol):
    S, P = np.asarray(S), np.asarray(P)
    codes = np.zeros(np.shape(S), dtype=np.int8)
    stable = (P < 1 - tol) & (np.abs(S) < 1 + P)
    periodic = (np.abs(P - 1) <= tol) & (np.abs(S) < 2)
    codes[stable] = _CODES[StabilityClass.ABSOLUTELY_STABLE]
    codes[periodic] = _CODES[StabilityClass.PERIODIC]
    return codes


def classify(tableau, nu, z, tol=None):
    """Classify the point ``(nu, z)``.

    Periodic if ``|P - 1| <= tol`` and ``|S| < 2``; absolutely stable if
    ``P < 1 - tol`` and ``|S| < 1 + P``; unstable otherwise.

    Parameters
    ----------
    tableau :   Tableau
    nu, z :     float
    tol :       float, optional
                Defaults to ``config.stability_tol_eq``.

    Returns
    -------
    StabilityPoint

    """
    tol = config.stability_tol_eq if tol is None else tol
    S, P = s_and_p(tableau, nu, z)
    cls = _FROM_CODE[int(_classify_codes(S, P, tol))]
    return StabilityPoint(nu=float(nu), z=float(z), S=S, P=P, cls=cls)


@dataclasses.dataclass(frozen=True, eq=False)
class RegionScan:
    """Classification of a ``nu x z`` grid.

    ``S``, ``P`` and ``codes`` have shape ``(len(nu), len(z))``. Columns
    at which the tableau is singular are NaN in ``S``/``P``, unstable in
    ``codes`` and flagged in ``singular``.
    """
    method: str
    nu: np.ndarray
    z: np.ndarray
    S: np.ndarray
    P: np.ndarray
    codes: np.ndarray
    singular: np.ndarray

    @property
    def classes(self):
        """Grid of StabilityClass values."""
        return np.vectorize(_FROM_CODE.get, otypes=[object])(self.codes)

    def fraction(self, cls):
        """Share of grid cells in the given class."""
        return float(np.mean(self.codes == _CODES[StabilityClass(cls)]))

    def boundary(self):
        """Boolean grid marking cells whose class differs from a neighbour."""
        c = self.codes
        edge = np.zeros(c.shape, dtype=bool)
        edge[1:] |= c[1:] != c[:-1]
        edge[:-1] |= c[1:] != c[:-1]
        edge[:, 1:] |= c[:, 1:] != c[:, :-1]
        edge[:, :-1] |= c[:, 1:] != c[:, :-1]
        return edge

    def to_frame(self):
        """Long-format table with columns nu, z, S, P, class, singular."""
        nu, z = np.meshgrid(self.nu, self.z, indexing='ij')
        return pd.DataFrame({'nu': nu.ravel(),
                             'z': z.ravel(),
                             'S': self.S.ravel(),
                             'P': self.P.ravel(),
                             'class': [_FROM_CODE[c].value for c in self.codes.ravel()],
                             'singular': np.repeat(self.singular, len(self.z))})

    def plot_script(self, csv_path):
        """Source of a matplotlib script drawing this scan from its CSV."""
        return _REGION_SCRIPT.format(csv=csv_path, title=self.method)


_REGION_SCRIPT = '''"""Stability region of {title}. Needs matplotlib."""
import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({csv!r})
codes = df['class'].map({{'unstable': 0, 'absolutely-stable': 1, 'periodic': 2}})
grid = codes.to_numpy().reshape(df['nu'].nunique(), df['z'].nunique())
nu, z = sorted(df['nu'].unique()), sorted(df['z'].unique())

fig, ax = plt.subplots(figsize=(6, 5))
ax.contourf(nu, z, grid.T, levels=[-0.5, 0.5, 1.5, 2.5],
            colors=['white', 'lightgray', 'gray'])
ax.contour(nu, z, grid.T, levels=[0.5, 1.5], colors='k', linewidths=0.5)
ax.set_xlabel('nu')
ax.set_ylabel('z')
ax.set_title({title!r})
plt.show()
'''


def _grid_shape(grid):
    if isinstance(grid, (int, np.integer)):
        return int(grid), int(grid)
    n_nu, n_z = grid
    return int(n_nu), int(n_z)


def scan_region(method, nu_range=(0.0, 3 * math.pi), z_range=(-5.0, 5.0),
                grid=600, tol=None):
    """Classify a rectangle of the ``nu``-``z`` plane.

    Parameters
    ----------
    method :    MethodId | Classical | str
    nu_range :  (float, float)
                Must lie in ``[0, inf)``; ``nu`` is sampled at cell
                centres so ``nu = 0`` itself is never used.
    z_range :   (float, float)
                Sampled including both end points.
    grid :      int | (int, int)
                Number of ``nu`` and ``z`` samples.
    tol :       float, optional
                See :func:`classify`.

    Returns
    -------
    RegionScan

    """
    method = parse_method(method)
    tol = config.stability_tol_eq if tol is None else tol
    nu_lo, nu_hi = map(float, nu_range)
    z_lo, z_hi = map(float, z_range)
    if not 0 <= nu_lo < nu_hi:
        raise ValueError(f'nu_range must satisfy 0 <= lo < hi, got {nu_range}')
    if not z_lo < z_hi:
        raise ValueError(f'z_range must satisfy lo < hi, got {z_range}')
    n_nu, n_z = _grid_shape(grid)
    if n_nu < 1 or n_z < 2:
        raise ValueError(f'grid too small: {grid}')

    nus = nu_lo + (np.arange(n_nu) + 0.5) * (nu_hi - nu_lo) / n_nu
    zs = np.linspace(z_lo, z_hi, n_z)
    S = np.full((n_nu, n_z), np.nan)
    P = np.full((n_nu, n_z), np.nan)
    codes = np.zeros((n_nu, n_z), dtype=np.int8)
    singular = np.zeros(n_nu, dtype=bool)

    for i, nu in enumerate(config.tqdm(nus, desc='Scanning', disable=config.pbar_hide,
                                       leave=config.pbar_leave)):
        try:
            tableau = build(method, nu)
        except SingularCoefficient as e:
            logger.debug(f'Singular column: {e}')
            singular[i] = True
            continue
        S[i], P[i] = s_and_p(tableau, nu, zs)
        codes[i] = _classify_codes(S[i], P[i], tol)

    if singular.any():
        logger.info(f'{method_name(method)}: {singular.sum()} singular nu column(s) marked unstable')

    return RegionScan(method=method_name(method), nu=nus, z=zs, S=S, P=P,
                      codes=codes, singular=singular)


def stability_intervals(method, omega, epsilon, h_max, n=2000, tol=None):
    """Intervals of ``h`` along the ray ``(nu, z) = (omega h, epsilon h^2)``.

    A cell counts if it is periodic or absolutely stable.

    Parameters
    ----------
    method :    MethodId | Classical | str
    omega :     float
    epsilon :   float
    h_max :     float
    n :         int
                Number of samples on ``(0, h_max]``.

    Returns
    -------
    list of (float, float)
                ``(h_lo, h_hi)`` in increasing ``h``; the first interval is
                the primary one if it starts at the first sample.

    """
    method = parse_method(method)
    if not h_max > 0:
        raise ValueError(f'h_max must be > 0, got {h_max}')
    if omega < 0:
        raise ValueError(f'omega must be >= 0, got {omega}')

    hs = h_max * np.arange(1, n + 1) / n
    ok = np.zeros(n, dtype=bool)
    for i, h in enumerate(hs):
        nu, z = omega * h, epsilon * h * h
        try:
            tableau = build(method, nu)
        except SingularCoefficient:
            continue
        ok[i] = classify(tableau, nu, z, tol).cls is not StabilityClass.UNSTABLE

    intervals = []
    start = None
    for h, flag in zip(hs, ok):
        if flag and start is None:
            start = h
        elif not flag and start is not None:
            intervals.append((start, prev))
            start = None
        prev = h
    if start is not None:
        intervals.append((start, hs[-1]))
    return intervals


def simulate_recurrence(S, P, steps=100_000, rng=None, threshold=1e6):
    """Iterate ``y_{n+1} = S y_n - P y_{n-1}`` from random unit data.

    Parameters
    ----------
    S, P :      float | array
                Broadcast against each other; each pair is simulated
                independently.
    steps :     int
    rng :       numpy.random.Generator | int, optional
    threshold : float
                A run counts as unbounded once ``|y|`` exceeds this.

    Returns
    -------
    bool | array of bool
                True where the iterates stayed bounded.

    """
    rng = np.random.default_rng(rng)
    S, P = np.broadcast_arrays(np.asarray(S, dtype=float), np.asarray(P, dtype=float))
    scalar = S.ndim == 0
    S, P = S.ravel(), P.ravel()

    angle = rng.uniform(0, 2 * np.pi, size=S.shape)
    y_prev, y_curr = np.cos(angle), np.sin(angle)
    bounded = np.ones(S.shape, dtype=bool)
    with np.errstate(over='ignore', invalid='ignore'):
        for _ in range(steps):
            y_prev, y_curr = y_curr, S * y_curr - P * y_prev
            bounded &= np.abs(y_curr) <= threshold
            if not bounded.any():
                break
            # Freeze runs that already escaped
            y_curr = np.where(bounded, y_curr, 0.0)
            y_prev = np.where(bounded, y_prev, 0.0)

    return bool(bounded[0]) if scalar else bounded


def phase_point(method, H, omega, epsilon):
    """Phase lag and dissipation at ``H = lambda h``, ``lambda^2 = omega^2 + epsilon``.

    Evaluated at ``nu = omega H / lambda`` and ``z = epsilon H^2 / lambda^2``
    as ``H - arccos(S / (2 sqrt(P)))`` and ``1 - sqrt(P)``, both formed
    without cancellation.

    Parameters
    ----------
    method :    MethodId | Classical | str
    H :         float
    omega :     float
    epsilon :   float

    Returns
    -------
    PhasePoint

    Raises
    ------
    OutsideDomain
                If ``P <= 0`` or ``|S / (2 sqrt(P))| > 1``.

    """
    lam2 = omega ** 2 + epsilon
    if not lam2 > 0:
        raise ValueError(f'omega^2 + epsilon must be > 0, got {lam2}')
    if not H > 0:
        raise ValueError(f'H must be > 0, got {H}')

    nu = omega * H / math.sqrt(lam2)
    z = epsilon * H * H / lam2
    tableau = build(method, nu)
    w0, w1 = (float(w) for w in _weights(tableau, H * H))
    nu_fit, z_eff = _fitted(tableau, nu, z)

    S = 2 * math.cos(nu_fit) - z_eff * w1
    P = 1 - z_eff * w0
    if not P > 0:
        raise OutsideDomain(f'{tableau.name}: P = {P:.3e} <= 0 at H={H}')

    root_p = math.sqrt(P)
    # 1 - sqrt(P) without cancellation
    diss = z_eff * w0 / (1 + root_p)

    arg = S / (2 * root_p)
    if abs(arg) > 1 + config.arccos_clip:
        raise OutsideDomain(f'{tableau.name}: |S/(2 sqrt(P))| = {abs(arg):.6g} > 1 at H={H}')
    theta = math.acos(min(1.0, max(-1.0, arg)))

    # S/2 - sqrt(P) cos(H), with cos(nu_fit) - cos(H) as a product of sines
    total = H + nu_fit
    D = (2 * math.sin(total / 2) * math.sin(z_eff / (2 * total))
         - z_eff * w1 / 2 + math.cos(H) * diss)
    half = (D / root_p) / (2 * math.sin((H + theta) / 2))
    lag = 2 * math.asin(min(1.0, max(-1.0, half)))

    return PhasePoint(H=H, omega=omega, epsilon=epsilon, nu=nu, z=z,
                      phase_lag=lag, dissipation=diss)


def phase_table(method, omega, epsilon, H=None):
    """Phase lag and dissipation over a sequence of ``H`` as a DataFrame.

    ``H`` defaults to ``2**-2 ... 2**-8``; points outside the domain are
    NaN.
    """
    if H is None:
        H = [2.0 ** -k for k in LEADING_EXPONENTS]
    builder = utils.DataFrameBuilder(['H', 'nu', 'z', 'phase_lag', 'dissipation'])
    for h in H:
        try:
            pt = phase_point(method, h, omega, epsilon)
            builder.append_row([h, pt.nu, pt.z, pt.phase_lag, pt.dissipation])
        except OutsideDomain:
            builder.append_row([h, np.nan, np.nan, np.nan, np.nan])
    return builder.build()


def _snap_fit(H, values, what):
    if len(H) < 2:
        raise FitFailed(f'{what}: fewer than 2 points above roundoff')
    slope = np.polyfit(np.log(H), np.log(np.abs(values)), 1)[0]
    snapped = int(round(slope))
    if abs(slope - snapped) > _SNAP_TOL:
        raise FitFailed(f'{what}: slope {slope:.3f} is not within {_SNAP_TOL} of an integer')
    # Constant at the smallest H
    i = int(np.argmin(H))
    return snapped, float(values[i] / H[i] ** snapped)


def estimate_leading(method, omega, epsilon, H=None):
    """Estimate phase-lag and dissipation orders and constants.

    Fits ``|phase_lag| ~ H^(q+1)`` and ``|dissipation| ~ H^(r+1)`` by
    log-log regression over ``H = 2**-2 ... 2**-8``. Values at roundoff
    level are discarded; if no dissipation is left the method counts as
    zero-dissipative (``r = inf``).

    Parameters
    ----------
    method :    MethodId | Classical | str
    omega :     float
    epsilon :   float
                Must be non-zero.
    H :         sequence of float, optional

    Returns
    -------
    LeadingTerms

    Raises
    ------
    OutsideDomain
    FitFailed

    Examples
    --------
    >>> q, c_phi, r, c_d = pyatsh.estimate_leading('atsh5-minerr', 1.0, 0.1)
    >>> q, r
    (6, 5)

    """
    if epsilon == 0:
        raise ValueError('epsilon must be non-zero')
    if H is None:
        H = [2.0 ** -k for k in LEADING_EXPONENTS]
    H = np.asarray(H, dtype=float)

    pts = [phase_point(method, h, omega, epsilon) for h in H]
    lag = np.array([p.phase_lag for p in pts])
    diss = np.array([p.dissipation for p in pts])
    zs = np.abs([p.z for p in pts])

    floor = _ROUNDOFF_ULPS * config.eps_machine * zs
    keep_lag = np.abs(lag) > floor / H
    keep_diss = np.abs(diss) > floor

    name = method_name(method)
    power, c_phi = _snap_fit(H[keep_lag], lag[keep_lag], f'{name} phase lag')
    q = power - 1

    if not keep_diss.any():
        r, c_d = math.inf, 0.0
    else:
        power, c_d = _snap_fit(H[keep_diss], diss[keep_diss], f'{name} dissipation')
        r = power - 1

    logger.debug(f'{name} omega={omega} epsilon={epsilon}: q={q} c_phi={c_phi:.6e} '
                 f'r={r} c_d={c_d:.6e}')
    return LeadingTerms(q=q, c_phi=c_phi, r=r, c_d=c_d)


def ck_uk(tableau, k_max):
    """Return ``C_k = b A^{k-1} c`` and ``U_k = b A^{k-1} e`` for k = 1 ... k_max."""
    if k_max < 1:
        raise ValueError(f'k_max must be >= 1, got {k_max}')
    C, U = np.zeros(k_max), np.zeros(k_max)
    wc, we = tableau.c.copy(), tableau.e
    for k in range(k_max):
        C[k] = tableau.b @ wc
        U[k] = tableau.b @ we
        wc, we = tableau.A @ wc, tableau.A @ we
    return C, U


def is_zero_dissipative(tableau, tol=None):
    """True if all ``C_k`` vanish, i.e. ``P == 1`` on the test equation.

    Beyond k = s the ``C_k`` are zero anyway since ``A`` is nilpotent.
    """
    tol = config.order_tol if tol is None else tol
    C, _ = ck_uk(tableau, tableau.s)
    return bool(np.all(np.abs(C) <= tol))


def zero_dissipative_phase_order(tableau, k_max=None, tol=None):
    """Phase-lag order of a zero-dissipative tableau from C_k and U_k.

    The order is the largest q such that ``U_k = 2 phi_{2k}(nu)`` for
    ``k <= (q + 1) // 2`` and ``C_k = 0`` for ``k <= q // 2``.

    Parameters
    ----------
    tableau :   Tableau
                Adapted and zero-dissipative.
    k_max :     int, optional
                Highest k inspected; defaults to ``s + 1`` (past that all
                ``U_k`` vanish while ``phi_{2k}`` does not).
    tol :       float, optional

    Returns
    -------
    int

    """
    tol = config.order_tol if tol is None else tol
    if isinstance(tableau.method, Classical):
        raise ValueError('Phase order from C_k/U_k needs an adapted tableau')
    if not is_zero_dissipative(tableau, tol):
        raise ValueError(f'{tableau.name} is not zero-dissipative at nu={tableau.nu}')
    k_max = tableau.s + 1 if k_max is None else k_max
    C, U = ck_uk(tableau, k_max)
    ph = phi_values(tableau.nu, 2 * k_max)
    u_ok = np.abs(U - 2 * ph[2:2 * k_max + 1:2]) <= tol
    c_ok = np.abs(C) <= tol

    q = 0
    while q + 1 <= 2 * k_max - 1:
        trial = q + 1
        n_u, n_c = (trial + 1) // 2, trial // 2
        if not (u_ok[:n_u].all() and c_ok[:n_c].all()):
            break
        q = trial
    return q
