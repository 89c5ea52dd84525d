"""Radial grids, wave states, code units and the exact scale maps of the
Schrödinger-Newton equation.

Internally everything is in code units G = hbar = sigma = 1; ``CodeUnits``
converts to SI at the I/O boundary only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import constants

from . import _kernels
from .errors import DomainTooSmallError, ExtrapolationError, GridMismatchError, InsufficientPointsError

__all__ = [
    "CodeUnits",
    "RadialGrid",
    "WaveState",
    "ScaleTransform",
    "gaussian_initial",
    "apply_scale",
    "rescale_mu",
    "discrete_norm",
]

MIN_GRID_POINTS = 16


@dataclass(frozen=True)
class CodeUnits:
    """SI values of the code units for a given physical packet width."""

    sigma_si: float

    def __post_init__(self):
        if not self.sigma_si > 0:
            raise ValueError(f"sigma_si must be positive, got {self.sigma_si}")

    @property
    def length_unit_si(self) -> float:
        return self.sigma_si

    @property
    def time_unit_si(self) -> float:
        return (self.sigma_si**5 / (constants.G * constants.hbar)) ** (1.0 / 3.0)

    @property
    def mass_unit_si(self) -> float:
        return (constants.hbar**2 / (constants.G * self.sigma_si)) ** (1.0 / 3.0)

    @property
    def energy_unit_si(self) -> float:
        return self.mass_unit_si * self.length_unit_si**2 / self.time_unit_si**2

    def _unit(self, kind: str) -> float:
        try:
            return {
                "length": self.length_unit_si,
                "time": self.time_unit_si,
                "mass": self.mass_unit_si,
                "energy": self.energy_unit_si,
                "velocity": self.length_unit_si / self.time_unit_si,
            }[kind]
        except KeyError:
            raise ValueError(f"unknown quantity kind {kind!r}") from None

    def to_si(self, value, kind: str):
        return value * self._unit(kind)

    def from_si(self, value, kind: str):
        return value / self._unit(kind)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes r_j = j*dr, j = 0..n_points-1, on [0, R]."""

    dr: float
    n_points: int

    def __post_init__(self):
        if not self.dr > 0:
            raise ValueError(f"dr must be positive, got {self.dr}")
        if self.n_points < MIN_GRID_POINTS:
            raise InsufficientPointsError(f"need at least {MIN_GRID_POINTS} grid points, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def from_extent(cls, outer_radius: float, dr: float) -> "RadialGrid":
        return cls(dr=dr, n_points=int(round(outer_radius / dr)) + 1)

    @property
    def outer_radius(self) -> float:
        return (self.n_points - 1) * self.dr

    @cached_property
    def r(self) -> np.ndarray:
        r = np.arange(self.n_points) * self.dr
        r.flags.writeable = False
        return r


def discrete_norm(u: np.ndarray, dr: float) -> float:
    """4*pi * integral |u|^2 dr over the whole grid."""
    dens = np.abs(u) ** 2
    out = np.empty_like(dens)
    _kernels.cumulative_into(dens, dr, out)
    return float(4.0 * np.pi * out[-1])


@dataclass(frozen=True, eq=False)
class WaveState:
    """Snapshot of u = r*psi on a radial grid.

    ``u`` is stored read-only; every operation returns a new state.
    """

    grid: RadialGrid
    u: np.ndarray
    mass: float
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=np.complex128)
        if u.shape != (self.grid.n_points,):
            raise GridMismatchError(f"u has shape {u.shape}, grid has {self.grid.n_points} points")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        u[0] = 0.0
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def psi(self) -> np.ndarray:
        """psi = u/r, with psi(0) from the odd-extension limit u_1/dr (to O(dr^2))."""
        psi = np.empty_like(self.u)
        psi[1:] = self.u[1:] / self.grid.r[1:]
        # u is odd, so u_1/dr, u_2/(2dr) differ at O(dr^2); Richardson them.
        psi[0] = (4.0 * psi[1] - psi[2]) / 3.0
        return psi

    @property
    def density(self) -> np.ndarray:
        """r^2 |psi|^2 = |u|^2 on the grid."""
        return np.abs(self.u) ** 2

    def norm(self) -> float:
        return discrete_norm(self.u, self.grid.dr)

    def replace(self, **changes) -> "WaveState":
        fields = {"grid": self.grid, "u": self.u, "mass": self.mass, "t": self.t}
        fields.update(changes)
        return WaveState(**fields)


def gaussian_initial(grid: RadialGrid, m: float, sigma: float = 1.0) -> WaveState:
    """Sample u = r (pi sigma^2)^(-3/4) exp(-r^2 / 2 sigma^2) at t = 0.

    The analytic samples are used as-is; no renormalization on the grid.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if grid.outer_radius < 8.0 * sigma:
        raise DomainTooSmallError(
            f"outer radius {grid.outer_radius:g} is smaller than 8*sigma = {8 * sigma:g}"
        )
    r = grid.r
    u = r * (np.pi * sigma**2) ** -0.75 * np.exp(-(r**2) / (2.0 * sigma**2))
    return WaveState(grid=grid, u=u, mass=m, t=0.0)


@dataclass(frozen=True)
class ScaleTransform:
    """(r, t, m) -> (lam r, lam^(5/3) t, lam^(-1/3) m), psi -> lam^(-3/2) psi(r/lam)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"scale factor must be positive, got {self.lam}")

    def length(self, r):
        return self.lam * r

    def time(self, t):
        return self.lam ** (5.0 / 3.0) * t

    def mass(self, m):
        return self.lam ** (-1.0 / 3.0) * m

    def energy(self, e):
        # m^5 scaling of the energy at fixed G, hbar
        return self.lam ** (-5.0 / 3.0) * e

    def __call__(self, state: WaveState) -> WaveState:
        grid = RadialGrid(dr=self.lam * state.grid.dr, n_points=state.grid.n_points)
        return WaveState(
            grid=grid,
            u=self.lam**-0.5 * state.u,
            mass=self.mass(state.mass),
            t=self.time(state.t),
        )


def apply_scale(state: WaveState, lam: float) -> WaveState:
    """Map a state onto its image under the length/time/mass scale symmetry."""
    return ScaleTransform(lam)(state)


def _cubic_interpolate(values: np.ndarray, dr: float, x: np.ndarray) -> np.ndarray:
    """4-point Lagrange interpolation of uniformly sampled, odd-at-origin data."""
    n = values.shape[0]
    s = x / dr
    i0 = np.clip(np.floor(s).astype(np.int64) - 1, -1, n - 4)
    frac = s - i0
    out = np.zeros(x.shape, dtype=values.dtype)
    for k in range(4):
        idx = i0 + k
        # odd extension for the one node that can fall left of the origin
        vals = np.where(idx >= 0, values[np.abs(idx)], -values[np.abs(idx)])
        w = np.ones_like(frac)
        for q in range(4):
            if q != k:
                w = w * (frac - q) / (k - q)
        out = out + w * vals
    return out


def rescale_mu(state: WaveState, mu: float, tail_tolerance: float = 1e-12) -> WaveState:
    """Return psi'(r) = mu^2 psi(mu r) on the same grid (u' = mu u(mu r)).

    The result has norm mu times the input's. Samples that would need u beyond
    the outer radius are set to zero provided the input's tail there is below
    ``tail_tolerance``; otherwise ``ExtrapolationError``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if mu == 1.0:
        return state
    grid = state.grid
    x = mu * grid.r
    inside = x <= grid.outer_radius
    if not inside.all():
        tail = np.abs(state.u[-4:]).max()
        if tail > tail_tolerance:
            raise ExtrapolationError(
                f"mu = {mu} samples beyond R = {grid.outer_radius:g} and |u| there is {tail:.2e}"
            )
    u_new = np.zeros(grid.n_points, dtype=np.complex128)
    u_new[inside] = mu * _cubic_interpolate(state.u, grid.dr, x[inside])
    return state.replace(u=u_new)
