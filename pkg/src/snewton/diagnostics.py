"""Observables of a radial wave state.

All integrals use the same 4th-order cumulative Newton-Cotes rule as the
Poisson solver and all derivatives the same 6th-order stencil as the time
stepper, so the diagnostics are consistent with the dynamics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import _kernels
from .core import WaveState, _cubic_interpolate
from .errors import InsufficientPointsError, NoInteriorPeakError
from .poisson import PotentialField, compute_potential, newton_cotes_cumulative

__all__ = [
    "DiagnosticsRecord",
    "TIMESERIES_FIELDS",
    "total_probability",
    "kinetic_energy",
    "hamiltonian_expectation",
    "sn_energy",
    "find_peak",
    "mass_within",
    "escape_velocity",
    "peak_velocity",
    "snapshot_record",
    "fill_peak_velocities",
]

#: warn when Im<H> exceeds this fraction of |Re<H>|
IMAG_RESIDUAL_WARN = 1e-3


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    norm: float
    energy_expectation: float
    sn_energy: float
    r_peak: float
    peak_value: float
    v_peak: float
    v_escape: float
    m_enclosed: float

    def as_dict(self) -> dict:
        return asdict(self)


TIMESERIES_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))


def _integrate(f, dr) -> float:
    return float(newton_cotes_cumulative(f, dr)[-1])


def total_probability(state: WaveState, r_max: float | None = None) -> float:
    """4*pi * int_0^r_max |u|^2 dr (the whole domain when r_max is None)."""
    grid = state.grid
    if r_max is None:
        r_max = grid.outer_radius
    if not 0 < r_max <= grid.outer_radius * (1 + 1e-12):
        raise ValueError(f"r_max must lie in (0, {grid.outer_radius:g}], got {r_max}")
    cum = newton_cotes_cumulative(state.density, grid.dr)
    j = r_max / grid.dr
    if abs(j - round(j)) < 1e-9:
        value = cum[int(round(j))]
    else:
        value = _cubic_interpolate(cum, grid.dr, np.array([r_max]))[0]
    return float(4.0 * np.pi * value)


def kinetic_energy(state: WaveState) -> complex:
    """4*pi * int -(1/2m) u* u'' dr (complex; the imaginary part is a residual)."""
    grid = state.grid
    lap = np.empty_like(state.u)
    _kernels.second_derivative_into(state.u, grid.dr, lap)
    integrand = -(0.5 / state.mass) * np.conj(state.u) * lap
    re = _integrate(integrand.real, grid.dr)
    im = _integrate(integrand.imag, grid.dr)
    return 4.0 * np.pi * complex(re, im)


def _potential_energy(state: WaveState, phi: PotentialField) -> float:
    return 4.0 * np.pi * state.mass * _integrate(phi.phi * state.density, state.grid.dr)


def hamiltonian_expectation(state: WaveState, phi: PotentialField | None = None, return_residual: bool = False):
    """<H> = int [ -(1/2m) psi* lap psi + m Phi |psi|^2 ] dV.

    Note the full m*Phi weight: this is the expectation value of the
    single-particle Hamiltonian, not the conserved energy functional (see
    :func:`sn_energy`). With ``return_residual`` the relative imaginary part
    is returned as well.
    """
    if phi is None:
        phi = compute_potential(state)
    kin = kinetic_energy(state)
    value = kin.real + _potential_energy(state, phi)
    residual = abs(kin.imag) / max(abs(value), 1e-300)
    if residual > IMAG_RESIDUAL_WARN:
        warnings.warn(f"<H> has imaginary residual {residual:.2e} relative to its real part", RuntimeWarning)
    return (value, residual) if return_residual else value


def sn_energy(state: WaveState, phi: PotentialField | None = None) -> float:
    """Conserved energy functional int [ (1/2m)|grad psi|^2 + (m/2) Phi |psi|^2 ] dV."""
    if phi is None:
        phi = compute_potential(state)
    return kinetic_energy(state).real + 0.5 * _potential_energy(state, phi)


def find_peak(state: WaveState, degree: int = 2):
    """Radius and height of the maximum of r^2|psi|^2 = |u|^2.

    The discrete argmax is refined by fitting a polynomial of ``degree``
    through it and its neighbours (``degree + 1`` points, centred). Raises
    :class:`NoInteriorPeakError` when the argmax sits on either boundary.
    """
    if degree < 2 or degree % 2:
        raise ValueError(f"degree must be even and >= 2, got {degree}")
    y = state.density
    j = int(np.argmax(y))
    half = degree // 2
    n = y.shape[0]
    if j == 0 or j == n - 1:
        raise NoInteriorPeakError(f"maximum of r^2|psi|^2 is on the boundary (index {j})")
    dr = state.grid.dr
    r_j = state.grid.r[j]
    if degree == 2 or j - half < 0 or j + half > n - 1:
        y0, y1, y2 = y[j - 1], y[j], y[j + 1]
        curv = y0 - 2.0 * y1 + y2
        if curv >= 0:
            return float(r_j), float(y1)
        x = 0.5 * (y0 - y2) / curv
        return float(r_j + x * dr), float(y1 - 0.25 * (y0 - y2) * x)
    xs = np.arange(-half, half + 1, dtype=float)
    poly = np.polynomial.Polynomial.fit(xs, y[j - half : j + half + 1], degree, domain=[-1, 1], window=[-1, 1])
    crit = poly.deriv().roots()
    crit = crit[np.isreal(crit)].real
    crit = crit[np.abs(crit) <= 1.0]
    if crit.size == 0:
        return float(r_j), float(y[j])
    x = crit[np.argmax(poly(crit))]
    return float(r_j + x * dr), float(poly(x))


def mass_within(state: WaveState, r: float) -> float:
    """Effective gravitating mass inside radius r: m * P(r' < r)."""
    return state.mass * total_probability(state, r)


def escape_velocity(state: WaveState, r_peak: float | None = None) -> float:
    """sqrt(2 G m_enc / r_peak) for the peak of r^2|psi|^2."""
    if r_peak is None:
        r_peak, _ = find_peak(state)
    return math.sqrt(2.0 * mass_within(state, r_peak) / r_peak)


def peak_velocity(times, r_peaks) -> np.ndarray:
    """d r_peak / dt: centred second-order differences inside, one-sided at the ends."""
    t = np.asarray(times, dtype=float)
    r = np.asarray(r_peaks, dtype=float)
    if t.shape[0] < 3 or r.shape != t.shape:
        raise InsufficientPointsError("need at least 3 (t, r_peak) samples of equal length")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return np.gradient(r, t, edge_order=2)


def snapshot_record(state: WaveState, gravity: bool = True, history=()) -> DiagnosticsRecord:
    """Evaluate every observable for one snapshot.

    ``v_peak`` is a backward difference against the last record in
    ``history`` (NaN for the first one); :func:`fill_peak_velocities`
    replaces it with centred differences once the series is complete.
    """
    if gravity:
        phi = compute_potential(state)
    else:
        phi = PotentialField(state.grid, np.zeros(state.grid.n_points))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        energy = hamiltonian_expectation(state, phi)
    try:
        r_peak, peak_value = find_peak(state)
        m_enc = mass_within(state, r_peak)
        v_esc = math.sqrt(2.0 * m_enc / r_peak)
    except NoInteriorPeakError:
        r_peak = peak_value = m_enc = v_esc = float("nan")
    v_peak = float("nan")
    if history:
        prev = history[-1]
        if state.t > prev.t:
            v_peak = (r_peak - prev.r_peak) / (state.t - prev.t)
    return DiagnosticsRecord(
        t=float(state.t),
        norm=state.norm(),
        energy_expectation=float(energy),
        sn_energy=float(sn_energy(state, phi)),
        r_peak=float(r_peak),
        peak_value=float(peak_value),
        v_peak=float(v_peak),
        v_escape=float(v_esc),
        m_enclosed=float(m_enc),
    )


def fill_peak_velocities(records):
    if len(records) < 3:
        return list(records)
    v = peak_velocity([rec.t for rec in records], [rec.r_peak for rec in records])
    return [replace(rec, v_peak=float(vk)) for rec, vk in zip(records, v)]
