"""Time integration of the radial Schrödinger-Newton equation in u = r*psi form:

    du/dt = i/(2m) u'' - i m (Phi + i W) u,

with a 6th-order stencil in space, classical RK4 in time, Phi refreshed at
every RK4 stage, and a tanh absorbing layer W <= 0 near r = R.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .core import RadialGrid, WaveState
from .errors import EvolutionCancelled, GridMismatchError, InstabilityError, InsufficientPointsError
from .poisson import PotentialField

__all__ = [
    "STENCIL_SYMBOL_MAX",
    "RK4_IMAG_AXIS_LIMIT",
    "EvolutionParams",
    "second_derivative",
    "absorber_profile",
    "rhs",
    "rk4_step",
    "evolve",
    "nominal_dt",
]

log = logging.getLogger(__name__)

#: max |symbol| of the 6th-order second-difference stencil, times dr^2
STENCIL_SYMBOL_MAX = 272.0 / 45.0
#: the step stays stable while dt * max eigenvalue stays below this
RK4_IMAG_AXIS_LIMIT = 2.8


@dataclass(frozen=True)
class EvolutionParams:
    """Time-stepping and absorber settings.

    The step is dt = dt_factor * 2 m dr^2, so dt times the largest kinetic
    eigenvalue is dt_factor * 272/45 independent of m and dr.
    """

    dt_factor: float = 0.1
    absorber_amplitude: float = 1.0
    absorber_width: float = 1.0
    absorber_steepness: Optional[float] = None
    t_end: float = 1.0
    snapshot_interval: float = 0.1
    gravity: bool = True
    absorber: bool = True

    def __post_init__(self):
        if not self.dt_factor > 0:
            raise ValueError(f"dt_factor must be positive, got {self.dt_factor}")
        if self.dt_factor * STENCIL_SYMBOL_MAX > RK4_IMAG_AXIS_LIMIT:
            raise ValueError(
                f"dt_factor = {self.dt_factor} violates the RK4 stability bound "
                f"dt_factor <= {RK4_IMAG_AXIS_LIMIT / STENCIL_SYMBOL_MAX:.4f}"
            )
        for name in ("absorber_amplitude", "absorber_width", "snapshot_interval"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.absorber_steepness is not None and not self.absorber_steepness > 0:
            raise ValueError(f"absorber_steepness must be positive, got {self.absorber_steepness}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")

    @property
    def steepness(self) -> float:
        return self.absorber_width / 4.0 if self.absorber_steepness is None else self.absorber_steepness

    def replace(self, **changes) -> "EvolutionParams":
        from dataclasses import replace

        return replace(self, **changes)


def nominal_dt(mass: float, dr: float, dt_factor: float) -> float:
    return dt_factor * 2.0 * mass * dr * dr


def second_derivative(u, grid: RadialGrid) -> np.ndarray:
    """6th-order d^2u/dr^2 with odd reflection at r = 0 and even reflection at r = R."""
    u = np.ascontiguousarray(u)
    if u.shape != (grid.n_points,):
        raise GridMismatchError(f"u has shape {u.shape}, grid has {grid.n_points} points")
    if grid.n_points < 8:
        raise InsufficientPointsError("the stencil needs at least 8 points")
    out = np.empty_like(u, dtype=np.result_type(u.dtype, np.float64))
    _kernels.second_derivative_into(u.astype(out.dtype, copy=False), grid.dr, out)
    return out


def absorber_profile(grid: RadialGrid, params: EvolutionParams) -> np.ndarray:
    """W(r) = -(A/2) [1 + tanh((r - (R - w)) / s)], or zeros when disabled."""
    if not params.absorber:
        return np.zeros(grid.n_points)
    R = grid.outer_radius
    w = params.absorber_width
    if not w < R / 4.0:
        raise ValueError(f"absorber width {w:g} must be below R/4 = {R / 4.0:g}")
    return -0.5 * params.absorber_amplitude * (1.0 + np.tanh((grid.r - (R - w)) / params.steepness))


def rhs(state: WaveState, phi: PotentialField, W=None) -> np.ndarray:
    """du/dt for a given (frozen) potential; the rate at r = 0 is pinned to zero."""
    grid = state.grid
    if phi.grid.n_points != grid.n_points or phi.grid.dr != grid.dr:
        raise GridMismatchError("potential and state live on different grids")
    W = phi.absorber if W is None else np.asarray(W, dtype=float)
    if W.shape != (grid.n_points,):
        raise GridMismatchError(f"absorber has shape {W.shape}, grid has {grid.n_points} points")
    lap = second_derivative(state.u, grid)
    m = state.mass
    out = 1j * (0.5 / m) * lap - 1j * m * (phi.phi + 1j * W) * state.u
    out[0] = 0.0
    return out


def _advance(u, state: WaveState, W, gravity: bool, dt: float, nsteps: int, step_offset: int = 0):
    grid = state.grid
    before = float(np.abs(u).max())
    done = _kernels.rk4_steps(u, grid.r, grid.dr, float(state.mass), W, gravity, dt, nsteps)
    if done < nsteps or not np.isfinite(u).all():
        raise InstabilityError(step_offset + done, before)


def rk4_step(
    state: WaveState, params: EvolutionParams, absorber=None, dt: Optional[float] = None
) -> WaveState:
    """One classical RK4 step (dt defaults to dt_factor * 2 m dr^2; may be negative)."""
    grid = state.grid
    W = absorber_profile(grid, params) if absorber is None else np.asarray(absorber, dtype=float)
    step = nominal_dt(state.mass, grid.dr, params.dt_factor) if dt is None else float(dt)
    u = np.array(state.u, dtype=np.complex128)
    _advance(u, state, W, params.gravity, step, 1)
    return state.replace(u=u, t=state.t + step)


def evolve(
    state: WaveState,
    params: EvolutionParams,
    observer: Optional[Callable] = None,
    cancel=None,
    absorber=None,
):
    """Step ``state`` until t >= params.t_end, recording diagnostics every snapshot.

    Returns ``(final_state, trajectory)`` where ``trajectory`` is a list of
    :class:`~snewton.diagnostics.DiagnosticsRecord` including the starting
    snapshot. ``observer`` (if given) is called with each record as it is
    produced; ``cancel`` may be any object with an ``is_set()`` method.
    """
    from .diagnostics import DiagnosticsRecord, fill_peak_velocities, snapshot_record

    grid = state.grid
    W = absorber_profile(grid, params) if absorber is None else np.asarray(absorber, dtype=float)
    dt_nom = nominal_dt(state.mass, grid.dr, params.dt_factor)
    t0 = state.t
    records: list[DiagnosticsRecord] = []

    def emit(s):
        rec = snapshot_record(s, params.gravity, records)
        records.append(rec)
        if observer is not None:
            observer(rec)

    emit(state)
    if params.t_end <= t0:
        return state, records

    total = params.t_end - t0
    n_chunks = max(1, math.ceil(total / params.snapshot_interval - 1e-9))
    u = np.array(state.u, dtype=np.complex128)
    steps_done = 0
    current = state
    for k in range(1, n_chunks + 1):
        if cancel is not None and cancel.is_set():
            raise EvolutionCancelled(f"cancelled at t = {current.t:g}")
        t_next = min(t0 + k * params.snapshot_interval, params.t_end)
        span = t_next - current.t
        nsteps = max(1, math.ceil(span / dt_nom - 1e-9))
        _advance(u, current, W, params.gravity, span / nsteps, nsteps, steps_done)
        steps_done += nsteps
        current = current.replace(u=u, t=t_next)
        emit(current)
    log.debug("evolved %d steps to t = %g", steps_done, current.t)
    return current, fill_peak_velocities(records)
