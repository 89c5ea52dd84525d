"""Nodeless stationary states by shooting.

With psi(r, t) = exp(-i E t) psi(r), the radial equations for u = r psi and
v = r Phi are

    u'' = 2 m (m v/r - E) u,        v'' = 4 pi m u^2 / r.

We fix the amplitude u'(0) = 1 and the potential gauge Phi(0) = 0, shoot
outward, and bisect on E between "crosses zero" (E too high) and "turns back
up" (E too low). The resulting profile has some norm N; the exact symmetry
psi -> mu^2 psi(mu r) with mu = 1/N then gives the unit-norm state, whose
energy is mu^2 times the (gauge-corrected) eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.interpolate import CubicSpline

from .core import RadialGrid, WaveState, rescale_mu
from .errors import BracketError, ResolutionError
from .poisson import PotentialField

__all__ = [
    "StationaryState",
    "ShootingResult",
    "stationary_rhs",
    "shoot",
    "solve_groundstate",
    "groundstate_energy",
    "fractional_groundstate",
    "GROUNDSTATE_ENERGY_COEFFICIENT",
]

#: unit-norm groundstate energy in units of G^2 m^5 / hbar^2, as usually quoted
GROUNDSTATE_ENERGY_COEFFICIENT = -0.163

# outcome codes of a single shot
NODE = -1
TURNS_UP = 1
REACHED_END = 0


@nb.njit(cache=True)
def _rhs_into(r, y, E, m, out):
    out[0] = y[1]
    out[1] = 2.0 * m * (m * y[2] / r - E) * y[0]
    out[2] = y[3]
    out[3] = 4.0 * math.pi * m * y[0] * y[0] / r


@nb.njit(cache=True)
def _shoot(E, m, h, nmax, store):
    """RK4 outward from r = h with the regular series start; fills store[:i]."""
    r = h
    y = np.empty(4)
    # u = r + c3 r^3, v = d3 r^3 (u'(0) = 1, Phi(0) = 0)
    c3 = 2.0 * m * (-E) / 6.0
    d3 = 4.0 * math.pi * m / 6.0
    y[0] = r + c3 * r**3
    y[1] = 1.0 + 3.0 * c3 * r * r
    y[2] = d3 * r**3
    y[3] = 3.0 * d3 * r * r
    store[0, 0] = 0.0
    store[0, 1] = 1.0
    store[0, 2] = 0.0
    store[0, 3] = 0.0
    for q in range(4):
        store[1, q] = y[q]
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    for i in range(2, nmax):
        _rhs_into(r, y, E, m, k1)
        for q in range(4):
            tmp[q] = y[q] + 0.5 * h * k1[q]
        _rhs_into(r + 0.5 * h, tmp, E, m, k2)
        for q in range(4):
            tmp[q] = y[q] + 0.5 * h * k2[q]
        _rhs_into(r + 0.5 * h, tmp, E, m, k3)
        for q in range(4):
            tmp[q] = y[q] + h * k3[q]
        _rhs_into(r + h, tmp, E, m, k4)
        for q in range(4):
            y[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        r += h
        for q in range(4):
            store[i, q] = y[q]
        if y[0] < 0.0:
            return NODE, i + 1
        # psi' > 0  <=>  r u' > u
        if r * y[1] > y[0]:
            return TURNS_UP, i + 1
    return REACHED_END, nmax


def stationary_rhs(r, y, E: float, m: float) -> np.ndarray:
    """Derivatives of (u, u', v, v'); at r = 0 the regular limits are used."""
    u, up, v, vp = (float(x) for x in y)
    if r == 0.0:
        # u ~ a r, v ~ b r: u'' and v'' both vanish at the origin
        return np.array([up, 0.0, vp, 0.0])
    out = np.empty(4)
    _rhs_into(float(r), np.array([u, up, v, vp]), float(E), float(m), out)
    return out


@dataclass(frozen=True)
class ShootingResult:
    outcome: int
    r: np.ndarray
    y: np.ndarray

    @property
    def nodes(self) -> int:
        u = self.y[1:, 0]
        return int(np.count_nonzero(np.diff(np.sign(u[u != 0])) != 0))


def _length_scale(m: float) -> float:
    # natural length of the u'(0) = 1 problem
    return m ** -0.75


def _step_and_reach(m: float, step_fraction: float, reach: float):
    L = _length_scale(m)
    h = step_fraction * L
    return h, int(reach * L / h) + 2


def shoot(E: float, m: float, step_fraction: float = 2e-3, reach: float = 14.0) -> ShootingResult:
    """Single outward shot at trial eigenvalue E (gauge Phi(0) = 0).

    Stops at the first zero crossing (``NODE``) or when psi starts to grow
    (``TURNS_UP``).
    """
    h, nmax = _step_and_reach(m, step_fraction, reach)
    store = np.zeros((nmax, 4))
    outcome, i = _shoot(E, m, h, nmax, store)
    return ShootingResult(outcome, np.arange(i) * h, store[:i].copy())


def _bisect_eigenvalue(m: float, step_fraction: float, reach: float, max_iter: int = 200):
    h, nmax = _step_and_reach(m, step_fraction, reach)
    store = np.zeros((nmax, 4))
    E_scale = math.sqrt(m)
    lo = 0.0
    if _shoot(lo, m, h, nmax, store)[0] != TURNS_UP:
        raise BracketError(f"E = 0 did not give a turning-up solution at m = {m}")
    hi = E_scale
    for _ in range(60):
        if _shoot(hi, m, h, nmax, store)[0] == NODE:
            break
        lo_candidate = hi
        hi *= 2.0
        lo = lo_candidate
    else:
        raise BracketError(f"no trial eigenvalue up to {hi:g} produced a node at m = {m}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        outcome, _ = _shoot(mid, m, h, nmax, store)
        if outcome == NODE:
            hi = mid
        else:
            lo = mid
    return lo, hi, h, nmax


def _profile(m: float, step_fraction: float, reach: float, cut: float):
    lo, hi, h, nmax = _bisect_eigenvalue(m, step_fraction, reach)
    E = 0.5 * (lo + hi)
    store = np.zeros((nmax, 4))
    _, i = _shoot(E, m, h, nmax, store)
    y = store[:i]
    r = np.arange(i) * h
    psi = np.empty(i)
    psi[0] = 1.0
    psi[1:] = y[1:, 0] / r[1:]
    below = np.flatnonzero(np.abs(psi) < cut)
    j = int(below[0]) if below.size else int(np.argmin(np.abs(psi)))
    # everything beyond j is patched by the asymptotic tail
    j = max(j, 8)
    r, y = r[: j + 1], y[: j + 1]
    u2 = y[:, 0] ** 2
    from .poisson import newton_cotes_cumulative

    N = 4.0 * math.pi * float(newton_cotes_cumulative(u2, h)[-1])
    phi_inf = y[-1, 3]  # v' -> Phi(infinity) in this gauge
    E_true = E - m * phi_inf
    return r, y, N, phi_inf, E_true


@dataclass(frozen=True, eq=False)
class StationaryState:
    """Unit-norm nodeless stationary state sampled on ``grid``."""

    grid: RadialGrid
    u0: np.ndarray
    v: np.ndarray
    E: float
    mass: float
    node_count: int = 0
    energy_error: float = float("nan")

    @property
    def phi(self) -> np.ndarray:
        r = self.grid.r
        phi = np.empty_like(self.v)
        phi[1:] = self.v[1:] / r[1:]
        phi[0] = (4.0 * phi[1] - phi[2]) / 3.0
        return phi

    def as_wave_state(self, t: float = 0.0) -> WaveState:
        return WaveState(grid=self.grid, u=self.u0.astype(complex), mass=self.mass, t=t)

    def potential(self) -> PotentialField:
        return PotentialField(self.grid, self.phi)


class _Profile:
    """Unit-norm u(r), v(r) as callables built from one converged shot."""

    def __init__(self, m: float, step_fraction: float, reach: float, cut: float):
        r, y, N, phi_inf, E_true = _profile(m, step_fraction, reach, cut)
        self.m = m
        self.N = N
        self.mu = 1.0 / N
        self.E_raw = E_true
        self.E = E_true / N**2
        self.r_cut = r[-1]
        self.u_spline = CubicSpline(r, y[:, 0])
        self.v_spline = CubicSpline(r, y[:, 2] - phi_inf * r)
        self.u_cut = y[-1, 0]
        self.kappa = math.sqrt(-2.0 * m * E_true)
        self.beta = m**3 * N / self.kappa
        self.v_far = -m * N
        self.nodes = int(np.count_nonzero(np.diff(np.sign(y[1:, 0])) != 0))

    def u_raw(self, x):
        x = np.asarray(x, dtype=float)
        inside = x <= self.r_cut
        out = np.empty_like(x)
        out[inside] = self.u_spline(x[inside])
        xo = x[~inside]
        out[~inside] = self.u_cut * np.exp(-self.kappa * (xo - self.r_cut)) * (xo / self.r_cut) ** self.beta
        return out

    def v_raw(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.r_cut, self.v_spline(np.minimum(x, self.r_cut)), self.v_far)

    def u(self, r):
        return self.mu * self.u_raw(self.mu * np.asarray(r, dtype=float))

    def v(self, r):
        return self.mu * self.v_raw(self.mu * np.asarray(r, dtype=float))


def groundstate_energy(m: float, step_fraction: float = 2e-3, reach: float = 14.0, cut: float = 1e-7) -> float:
    """Unit-norm groundstate energy (equal to <H> of the state), Richardson-checked."""
    return _richardson(m, step_fraction, reach, cut)[0]


def _richardson(m, step_fraction, reach, cut):
    coarse = _Profile(m, step_fraction, reach, cut)
    fine = _Profile(m, 0.5 * step_fraction, reach, cut)
    E = fine.E + (fine.E - coarse.E) / 15.0
    return E, abs(fine.E - coarse.E), fine


def solve_groundstate(
    m: float,
    grid: RadialGrid,
    min_points: int = 200,
    step_fraction: float = 2e-3,
    reach: float = 14.0,
    cut: float = 1e-7,
) -> StationaryState:
    """Unit-norm nodeless groundstate at mass ``m`` sampled on ``grid``.

    ``min_points`` is the number of grid points required inside the radius
    holding 99% of the probability (about 9.95 / m^3); coarser grids raise
    :class:`ResolutionError`.
    """
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    E, err, prof = _richardson(m, step_fraction, reach, cut)
    # 99% radius of the unit-norm profile, measured on the shooting grid
    xs = np.linspace(0.0, prof.r_cut, 4001)
    cum = np.cumsum(prof.u_raw(xs) ** 2)
    r99 = xs[np.searchsorted(cum / cum[-1], 0.99)] / prof.mu
    if r99 / grid.dr < min_points:
        raise ResolutionError(
            f"groundstate at m = {m} holds 99% of its probability within r = {r99:.4g}, "
            f"only {r99 / grid.dr:.0f} grid points at dr = {grid.dr:g} (need {min_points})"
        )
    r = grid.r
    return StationaryState(
        grid=grid,
        u0=prof.u(r),
        v=prof.v(r),
        E=E,
        mass=m,
        node_count=prof.nodes,
        energy_error=err,
    )


def fractional_groundstate(gs: StationaryState, p: float) -> WaveState:
    """p^2 psi_0(p r): norm p, <H> = p^3 E."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    return rescale_mu(gs.as_wave_state(), p)
