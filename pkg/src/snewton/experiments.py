"""Scripted numerical experiments: convergence suites, fate classification,
critical-mass bisection, groundstate approach runs and the force-balance
estimate.

All experiment drivers are deterministic; results carry the parameters
needed to reproduce them (see :func:`manifest_entries`).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special
from scipy.ndimage import median_filter

from .core import RadialGrid, WaveState, gaussian_initial
from .diagnostics import DiagnosticsRecord, fill_peak_velocities
from .errors import BracketError, DomainExceededError, InconclusiveError
from .evolve import EvolutionParams, absorber_profile, evolve
from .poisson import analytic_gaussian_potential, compute_potential
from .stationary import groundstate_energy

__all__ = [
    "ConvergenceResult",
    "convergence_poisson",
    "free_gaussian_analytic",
    "convergence_free_particle",
    "Fate",
    "FateConfig",
    "FateReport",
    "FateRun",
    "classify_trajectory",
    "classify_fate",
    "BisectionResult",
    "bisect_critical_mass",
    "sweep_fates",
    "gaussian_shell_fraction",
    "force_balance_mass",
    "ApproachConfig",
    "ApproachResult",
    "groundstate_approach_run",
    "oscillation_envelope",
    "is_damped",
    "spreading_comparison",
    "manifest_entries",
]

log = logging.getLogger(__name__)


# -- convergence -------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceResult:
    """Error curves at several resolutions, finest last.

    ``errors[k]`` is sampled at ``x[k]`` (radii for the Poisson test, times
    for the free-particle test); ``scaled[k]`` is ``errors[k]`` multiplied by
    ``(dr_finest / dr_k) ** order`` so that curves of the expected order
    coincide.
    """

    resolutions: tuple
    order: int
    x: tuple
    errors: tuple
    scaled: tuple

    @property
    def max_errors(self) -> np.ndarray:
        return np.array([np.max(e) for e in self.errors])

    @property
    def ratios(self) -> np.ndarray:
        m = self.max_errors
        return m[:-1] / m[1:]


def _check_halving(resolutions: Sequence[float]) -> tuple:
    res = tuple(float(h) for h in resolutions)
    if len(res) < 2:
        raise ValueError("need at least two resolutions")
    for a, b in zip(res, res[1:]):
        if not math.isclose(a, 2.0 * b, rel_tol=1e-12):
            raise ValueError(f"each resolution must halve the previous one, got {a:g} then {b:g}")
    return res


def convergence_poisson(
    resolutions: Sequence[float],
    m: float = 1.0,
    sigma: float = 1.0,
    outer_radius: float = 8.0,
    solver: Callable[[WaveState], np.ndarray] | None = None,
) -> ConvergenceResult:
    """Relative error of the potential of the Gaussian packet against erf(r)/r.

    ``solver`` maps a state to potential samples and defaults to
    :func:`~snewton.poisson.compute_potential`.
    """
    res = _check_halving(resolutions)
    if solver is None:
        solver = lambda s: compute_potential(s).phi  # noqa: E731
    xs, errs = [], []
    for dr in res:
        grid = RadialGrid.from_extent(outer_radius * sigma, dr)
        state = gaussian_initial(grid, m, sigma)
        exact = analytic_gaussian_potential(grid.r, m, sigma)
        errs.append(np.abs(np.asarray(solver(state)) - exact) / np.abs(exact))
        xs.append(grid.r)
    finest = res[-1]
    scaled = tuple(e * (finest / dr) ** 4 for e, dr in zip(errs, res))
    return ConvergenceResult(res, 4, tuple(xs), tuple(errs), scaled)


def free_gaussian_analytic(r, t: float, m: float, sigma: float = 1.0):
    """Freely spreading Gaussian psi(r, t) that starts as the normalized packet."""
    r = np.asarray(r, dtype=float)
    a = 1.0 + 1j * t / (m * sigma**2)
    return (np.pi * sigma**2) ** -0.75 * a**-1.5 * np.exp(-(r**2) / (2.0 * sigma**2 * a))


def _l1_relative(u_num, r, t, m, sigma, dr) -> float:
    # dV = 4 pi r^2 dr and |psi| r^2 = r |u|; the 4 pi cancels in the ratio
    u_exact = r * free_gaussian_analytic(r, t, m, sigma)
    num = integrate.simpson(r * np.abs(u_num - u_exact), dx=dr)
    den = integrate.simpson(r * np.abs(u_exact), dx=dr)
    return float(num / den)


def convergence_free_particle(
    resolutions: Sequence[float],
    t_end: float = 1.0,
    m: float = 1.0,
    sigma: float = 1.0,
    outer_radius: float = 16.0,
    dt_factor: float = 0.1,
    snapshot_interval: float = 0.1,
) -> ConvergenceResult:
    """L1 relative error of gravity-free evolution against the spreading Gaussian.

    The absorber is off; ``outer_radius`` has to keep the packet clear of the
    boundary until ``t_end``.
    """
    res = _check_halving(resolutions)
    params = EvolutionParams(
        dt_factor=dt_factor,
        t_end=t_end,
        snapshot_interval=snapshot_interval,
        gravity=False,
        absorber=False,
    )
    xs, errs = [], []
    for dr in res:
        grid = RadialGrid.from_extent(outer_radius * sigma, dr)
        state = gaussian_initial(grid, m, sigma)
        # evolve chunk by chunk so the error is taken on the snapshot states
        current = state
        times = [0.0]
        curve = [_l1_relative(current.u, grid.r, 0.0, m, sigma, dr)]
        n_chunks = max(1, math.ceil(t_end / snapshot_interval - 1e-9))
        for k in range(1, n_chunks + 1):
            t_next = min(k * snapshot_interval, t_end)
            current, _ = evolve(current, params.replace(t_end=t_next, snapshot_interval=t_next - current.t))
            times.append(current.t)
            curve.append(_l1_relative(current.u, grid.r, current.t, m, sigma, dr))
        xs.append(np.array(times))
        errs.append(np.array(curve))
    finest = res[-1]
    scaled = tuple(e * (finest / dr) ** 6 for e, dr in zip(errs, res))
    return ConvergenceResult(res, 6, tuple(xs), tuple(errs), scaled)


# -- fate of the Gaussian packet ----------------------------------------------


class Fate(str, Enum):
    BOUND = "Bound"
    ESCAPING = "Escaping"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class FateConfig:
    """Grid, absorber and predicate settings for fate runs.

    The default absorber is a wide, gentle layer: a narrow strong one
    reflects enough of the outgoing radiation to put a spurious turnaround
    into r_peak(t) near the threshold mass.
    """

    dr: float = 1.0 / 16.0
    outer_radius: float = 128.0
    dt_factor: float = 0.4
    absorber_amplitude: float = 0.5
    absorber_width: float = 24.0
    absorber_steepness: Optional[float] = None
    snapshot_interval: float = 1.0
    horizon: float = 20.0
    min_horizon: float = 10.0
    max_doublings: int = 7
    turnaround_drop: float = 0.05
    final_fraction: float = 0.25
    smoothing_fraction: float = 0.05
    min_smoothing: int = 5

    def __post_init__(self):
        for name in ("dr", "outer_radius", "dt_factor", "snapshot_interval", "horizon", "min_horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.turnaround_drop < 1 or not 0 < self.final_fraction < 1:
            raise ValueError("turnaround_drop and final_fraction must lie in (0, 1)")
        if self.max_doublings < 0:
            raise ValueError("max_doublings must be non-negative")
        if not self.absorber_width < self.outer_radius / 4:
            raise ValueError(f"absorber_width must be below outer_radius / 4, got {self.absorber_width:g}")

    def evolution_params(self, t_end: float) -> EvolutionParams:
        return EvolutionParams(
            dt_factor=self.dt_factor,
            absorber_amplitude=self.absorber_amplitude,
            absorber_width=self.absorber_width,
            absorber_steepness=self.absorber_steepness,
            t_end=t_end,
            snapshot_interval=self.snapshot_interval,
        )

    def replace(self, **changes) -> "FateConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class FateReport:
    mass: float
    fate: Fate
    r_peak_max: float
    turnaround_time: Optional[float]
    v_peak_final: float
    v_escape_final: float
    horizon: float
    first_expansion_time: Optional[float] = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["fate"] = self.fate.value
        return d


def classify_trajectory(mass: float, records: Sequence[DiagnosticsRecord], config: FateConfig = FateConfig()) -> FateReport:
    """Apply the fate predicate to a finished r_peak(t) series.

    r_peak is median-filtered over ``smoothing_fraction`` of the horizon
    (at least ``min_smoothing`` samples) to suppress the jitter of the peak
    fit when the packet is broad. Then:

    * Bound: the smoothed maximum over all but the last sample is followed
      by a drop of at least ``turnaround_drop`` of its value;
    * Escaping: the smoothed r_peak is non-decreasing over the final
      ``final_fraction`` of the horizon and there the median peak velocity
      exceeds the median escape velocity;
    * Undecided otherwise.
    """
    t = np.array([rec.t for rec in records])
    rp = np.array([rec.r_peak for rec in records])
    ve = np.array([rec.v_escape for rec in records])
    if t.size < 5 or not np.all(np.isfinite(rp)):
        raise InconclusiveError(f"m = {mass}: r_peak series too short or without an interior peak")
    horizon = t[-1]
    step = (t[-1] - t[0]) / (t.size - 1)
    win = max(config.min_smoothing, int(round(config.smoothing_fraction * (horizon - t[0]) / step))) | 1
    smooth = median_filter(rp, size=win, mode="nearest")
    v = np.gradient(smooth, t)

    final = t >= t[0] + (1.0 - config.final_fraction) * (horizon - t[0])
    v_final = float(np.median(v[final]))
    ve_final = float(np.median(ve[final]))
    above = np.nonzero(rp > rp[0])[0]
    first_expansion = float(t[above[0]]) if above.size else None

    i = int(np.argmax(smooth[:-1]))
    if smooth[i:].min() <= (1.0 - config.turnaround_drop) * smooth[i]:
        fate, turnaround = Fate.BOUND, float(t[i])
    elif np.all(np.diff(smooth[final]) >= 0) and v_final > ve_final:
        fate, turnaround = Fate.ESCAPING, None
    else:
        fate, turnaround = Fate.UNDECIDED, None
    return FateReport(
        mass=float(mass),
        fate=fate,
        r_peak_max=float(smooth[i]) if fate is Fate.BOUND else float(smooth.max()),
        turnaround_time=turnaround,
        v_peak_final=v_final,
        v_escape_final=ve_final,
        horizon=float(horizon),
        first_expansion_time=first_expansion,
    )


class FateRun:
    """A resumable evolution of the Gaussian packet at one mass.

    :meth:`extend` continues the same run to a later horizon, so doubling
    the horizon costs only the additional time.
    """

    def __init__(self, mass: float, config: FateConfig = FateConfig(), cancel=None):
        if not mass > 0:
            raise ValueError(f"mass must be positive, got {mass}")
        self.mass = float(mass)
        self.config = config
        self.cancel = cancel
        grid = RadialGrid.from_extent(config.outer_radius, config.dr)
        self.state = gaussian_initial(grid, self.mass)
        self._absorber = absorber_profile(grid, config.evolution_params(0.0))
        self.records: list[DiagnosticsRecord] = []

    @property
    def t(self) -> float:
        return self.state.t

    def extend(self, horizon: float) -> list[DiagnosticsRecord]:
        if horizon > self.state.t or not self.records:
            params = self.config.evolution_params(horizon)
            self.state, new = evolve(self.state, params, cancel=self.cancel, absorber=self._absorber)
            new = new if not self.records else new[1:]
            self.records = fill_peak_velocities(self.records + new)
        r_max = max(rec.r_peak for rec in self.records)
        limit = 0.5 * self.state.grid.outer_radius
        if not r_max < limit:
            raise DomainExceededError(
                f"m = {self.mass}: r_peak reached {r_max:.4g} >= R/2 = {limit:g}; use a larger outer radius"
            )
        return self.records

    def classify(self, horizon: float) -> FateReport:
        records = [rec for rec in self.extend(horizon) if rec.t <= horizon + 1e-9]
        return classify_trajectory(self.mass, records, self.config)


def classify_fate(
    mass: float,
    horizon: float | None = None,
    config: FateConfig = FateConfig(),
    max_doublings: int = 0,
    cancel=None,
) -> FateReport:
    """Evolve the Gaussian packet of mass ``mass`` and classify its fate.

    While the result is Undecided the horizon is doubled, up to
    ``max_doublings`` times, by resuming the same run.
    """
    horizon = config.horizon if horizon is None else float(horizon)
    if horizon < config.min_horizon:
        raise ValueError(f"horizon must be at least {config.min_horizon:g}, got {horizon:g}")
    run = FateRun(mass, config, cancel)
    report = run.classify(horizon)
    for _ in range(max_doublings):
        if report.fate is not Fate.UNDECIDED:
            break
        horizon *= 2.0
        log.info("m = %g undecided, extending horizon to %g", mass, horizon)
        report = run.classify(horizon)
    return report


@dataclass(frozen=True)
class BisectionResult:
    lo: float
    hi: float
    reports: tuple

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _decided(mass, config, cancel) -> FateReport:
    report = classify_fate(mass, config.horizon, config, config.max_doublings, cancel)
    if report.fate is Fate.UNDECIDED:
        raise InconclusiveError(
            f"m = {mass}: still undecided at horizon {report.horizon:g} after {config.max_doublings} doublings"
        )
    return report


def bisect_critical_mass(
    lo: float, hi: float, tol: float, config: FateConfig = FateConfig(), cancel=None
) -> BisectionResult:
    """Bisect the fate predicate between an escaping ``lo`` and a bound ``hi``.

    Returns the final bracket, of width at most ``tol``, with every report
    produced on the way.
    """
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got lo = {lo}, hi = {hi}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    rep_lo = _decided(lo, config, cancel)
    rep_hi = _decided(hi, config, cancel)
    reports = [rep_lo, rep_hi]
    if rep_lo.fate is not Fate.ESCAPING or rep_hi.fate is not Fate.BOUND:
        raise BracketError(
            f"not a bracket: m = {lo} is {rep_lo.fate.value}, m = {hi} is {rep_hi.fate.value} "
            "(need Escaping below, Bound above)"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        rep = _decided(mid, config, cancel)
        reports.append(rep)
        log.info("m = %g: %s", mid, rep.fate.value)
        if rep.fate is Fate.BOUND:
            hi = mid
        else:
            lo = mid
    return BisectionResult(lo, hi, tuple(reports))


def _classify_job(args):
    mass, horizon, config, max_doublings = args
    return classify_fate(mass, horizon, config, max_doublings)


def sweep_fates(
    masses: Sequence[float],
    config: FateConfig = FateConfig(),
    horizon: float | None = None,
    max_doublings: int = 0,
    jobs: int = 1,
) -> dict[float, FateReport]:
    """Classify independent masses, optionally in ``jobs`` worker processes."""
    tasks = [(float(m), horizon, config, max_doublings) for m in masses]
    if jobs <= 1 or len(tasks) <= 1:
        results = [_classify_job(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_classify_job, tasks))
    return {task[0]: rep for task, rep in zip(tasks, results)}


# -- force balance -------------------------------------------------------------


def gaussian_shell_fraction(sigma: float = 1.0) -> float:
    """Probability of the normalized Gaussian packet inside r = sigma, by quadrature."""
    density = lambda r: 4.0 * np.pi * r**2 * (np.pi * sigma**2) ** -1.5 * np.exp(-(r**2) / sigma**2)  # noqa: E731
    value, _ = integrate.quad(density, 0.0, sigma, epsabs=1e-14, epsrel=1e-13)
    return value


def force_balance_mass(shell_fraction: float | None = None) -> float:
    """Mass at which hbar^2/(m^2 sigma^3) equals G f m / sigma^2: m = f^(-1/3)."""
    f = gaussian_shell_fraction() if shell_fraction is None else float(shell_fraction)
    if not f > 0:
        raise ValueError(f"shell fraction must be positive, got {f}")
    return f ** (-1.0 / 3.0)


# -- approach to the groundstate ---------------------------------------------


@dataclass(frozen=True)
class ApproachConfig:
    """Settings for long runs in the bound regime.

    ``average_window`` is the trailing time span over which the final <H>,
    norm and r_peak are averaged; the remnant keeps oscillating about the
    fractional groundstate, so single snapshots scatter by several percent.
    """

    dr: float = 1.0 / 64.0
    outer_radius: float = 16.0
    dt_factor: float = 0.4
    absorber_amplitude: float = 0.5
    absorber_width: float = 3.9
    absorber_steepness: Optional[float] = None
    snapshot_interval: float = 0.25
    average_window: float = 50.0
    gravity: bool = True
    min_mass: float = 1.5

    def evolution_params(self, t_end: float) -> EvolutionParams:
        return EvolutionParams(
            dt_factor=self.dt_factor,
            absorber_amplitude=self.absorber_amplitude,
            absorber_width=self.absorber_width,
            absorber_steepness=self.absorber_steepness,
            t_end=t_end,
            snapshot_interval=self.snapshot_interval,
            gravity=self.gravity,
        )

    def replace(self, **changes) -> "ApproachConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ApproachResult:
    mass: float
    groundstate_energy: float
    records: tuple
    average_window: float

    @property
    def t(self) -> np.ndarray:
        return np.array([rec.t for rec in self.records])

    @property
    def energy(self) -> np.ndarray:
        return np.array([rec.energy_expectation for rec in self.records])

    @property
    def norm(self) -> np.ndarray:
        return np.array([rec.norm for rec in self.records])

    @property
    def r_peak(self) -> np.ndarray:
        return np.array([rec.r_peak for rec in self.records])

    @property
    def p3_e0(self) -> np.ndarray:
        return self.norm**3 * self.groundstate_energy

    def series(self) -> np.ndarray:
        """Columns t, <H>, p, p^3 E0."""
        return np.column_stack([self.t, self.energy, self.norm, self.p3_e0])

    def _tail(self, values: np.ndarray) -> float:
        t = self.t
        return float(np.mean(values[t >= t[-1] - self.average_window]))

    @property
    def final_energy(self) -> float:
        return self._tail(self.energy)

    @property
    def final_norm(self) -> float:
        return self._tail(self.norm)

    @property
    def final_r_peak(self) -> float:
        return self._tail(self.r_peak)

    @property
    def relative_gap(self) -> float:
        """|<H>_final - p^3 E0| / |p^3 E0| with p the final in-domain norm."""
        target = self.final_norm**3 * self.groundstate_energy
        return abs(self.final_energy - target) / abs(target)


def groundstate_approach_run(
    m: float, horizon: float, config: ApproachConfig = ApproachConfig(), cancel=None
) -> ApproachResult:
    """Evolve the Gaussian packet in the bound regime and track <H> against p^3 E0."""
    if m < config.min_mass:
        raise ValueError(f"approach runs need m >= {config.min_mass:g}, got {m}")
    grid = RadialGrid.from_extent(config.outer_radius, config.dr)
    state = gaussian_initial(grid, m)
    _, records = evolve(state, config.evolution_params(horizon), cancel=cancel)
    return ApproachResult(float(m), groundstate_energy(m), tuple(records), config.average_window)


def oscillation_envelope(t, r_peak, n_windows: int = 4):
    """Largest deviation of r_peak from its late-time limit per octave of time.

    The limit is the median over the second half of the run. The windows
    are [0, T/2^(n-1)], then successive doublings up to [T/2, T]. Returns
    ``(limit, amplitudes)`` with amplitudes in time order.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r_peak, dtype=float)
    if n_windows < 2:
        raise ValueError("need at least two windows")
    T = t[-1]
    limit = float(np.median(r[t >= T / 2]))
    edges = [t[0]] + [T / 2.0**k for k in range(n_windows - 1, -1, -1)]
    amps = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (t > a) & (t <= b) if a > t[0] else (t >= a) & (t <= b)
        if not sel.any():
            raise ValueError("a window holds no samples; use a longer run or fewer windows")
        amps.append(float(np.max(np.abs(r[sel] - limit))))
    return limit, np.array(amps)


def is_damped(t, r_peak, n_windows: int = 4, margin: float = 0.01) -> bool:
    """Each octave amplitude is below ``1 - margin`` times the previous one.

    The margin keeps an undamped oscillation, whose sampled maxima wander by
    a fraction of a percent, from passing as damped.
    """
    _, amps = oscillation_envelope(t, r_peak, n_windows)
    return bool(np.all(amps[1:] < (1.0 - margin) * amps[:-1]))


# -- spreading against the free packet ---------------------------------------


def spreading_comparison(
    m: float = 1.0,
    t_end: float = 10.0,
    dr: float = 1.0 / 32.0,
    outer_radius: float = 32.0,
    snapshot_interval: float = 0.5,
    dt_factor: float = 0.4,
):
    """r_peak(t) with and without self-gravity, from the same Gaussian start.

    Returns ``(t, r_peak_gravity, r_peak_free)``.
    """
    grid = RadialGrid.from_extent(outer_radius, dr)
    state = gaussian_initial(grid, m)
    base = EvolutionParams(dt_factor=dt_factor, t_end=t_end, snapshot_interval=snapshot_interval)
    _, with_g = evolve(state, base)
    _, free = evolve(state, base.replace(gravity=False))
    t = np.array([rec.t for rec in with_g])
    return t, np.array([rec.r_peak for rec in with_g]), np.array([rec.r_peak for rec in free])


def manifest_entries(experiment: str, **params) -> dict:
    """Parameters and software versions identifying a run."""
    from . import __version__

    entries = {"experiment": experiment}
    for key, value in params.items():
        if hasattr(value, "__dataclass_fields__"):
            for k, v in asdict(value).items():
                entries[f"{key}.{k}"] = v
        else:
            entries[key] = value
    entries["software"] = f"snewton {__version__}"
    entries["numpy"] = np.__version__
    entries["deterministic"] = True
    return entries
