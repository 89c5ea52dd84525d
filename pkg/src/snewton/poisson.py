"""Gravitational potential of a spherically symmetric density.

With the Green's function 1/(4 pi max(r, r')) the potential splits into an
enclosed-mass term and an outer-shell term,

    Phi(r) = -4 pi G m [ (1/r) int_0^r r'^2 |psi|^2 dr' + int_r^R r' |psi|^2 dr' ],

and both pieces are cumulative integrals of |u|^2 and |u|^2 / r, so one solve
costs O(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import erf

from . import _kernels
from .core import RadialGrid, WaveState
from .errors import GridMismatchError, InsufficientPointsError

__all__ = [
    "PotentialField",
    "newton_cotes_cumulative",
    "compute_potential",
    "analytic_gaussian_potential",
]


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Real potential ``phi`` plus the (non-positive) absorber profile ``absorber``.

    The complex potential seen by the wave function is ``phi + 1j * absorber``.
    """

    grid: RadialGrid
    phi: np.ndarray
    absorber: np.ndarray = field(default=None)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.shape != (self.grid.n_points,):
            raise GridMismatchError(f"phi has shape {phi.shape}, grid has {self.grid.n_points} points")
        absorber = np.zeros_like(phi) if self.absorber is None else np.array(self.absorber, dtype=float)
        if absorber.shape != phi.shape:
            raise GridMismatchError("absorber and phi shapes differ")
        phi.flags.writeable = False
        absorber.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "absorber", absorber)

    @property
    def complex_potential(self) -> np.ndarray:
        return self.phi + 1j * self.absorber

    def with_absorber(self, absorber: np.ndarray) -> "PotentialField":
        return PotentialField(self.grid, self.phi, absorber)


def newton_cotes_cumulative(
    f, dr: float, direction: Literal["from-origin", "from-outer"] = "from-origin"
) -> np.ndarray:
    """Running integral of uniformly sampled ``f`` with O(dr^4) global error.

    ``from-origin`` gives F_j = int_{r_0}^{r_j} f; ``from-outer`` gives
    F_j = int_{r_j}^{r_{n-1}} f.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.shape[0] < 5:
        raise InsufficientPointsError(f"need at least 5 samples, got {f.shape}")
    if direction == "from-origin":
        out = np.empty_like(f)
        _kernels.cumulative_into(np.ascontiguousarray(f), dr, out)
        return out
    if direction == "from-outer":
        out = np.empty_like(f)
        _kernels.cumulative_into(np.ascontiguousarray(f[::-1]), dr, out)
        return out[::-1].copy()
    raise ValueError(f"direction must be 'from-origin' or 'from-outer', got {direction!r}")


def compute_potential(state: WaveState, absorber: np.ndarray | None = None) -> PotentialField:
    """Self-consistent potential of ``state`` (two cumulative passes)."""
    grid = state.grid
    n = grid.n_points
    phi = np.empty(n)
    _kernels.potential_into(
        state.u, grid.r, grid.dr, float(state.mass), phi, np.empty(n), np.empty(n), np.empty(n), np.empty(n)
    )
    return PotentialField(grid, phi, absorber)


def analytic_gaussian_potential(r, m: float, sigma: float = 1.0):
    """Potential of the normalized Gaussian packet: -m erf(r/sigma) / r.

    At r = 0 the limit -2 m / (sqrt(pi) sigma) is returned.
    """
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    out = np.where(r > 0, -m * erf(safe / sigma) / safe, -2.0 * m / (np.sqrt(np.pi) * sigma))
    return out if out.ndim else float(out)
