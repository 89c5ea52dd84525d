import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from snewton import (
    BracketError,
    DomainExceededError,
    InconclusiveError,
    RadialGrid,
    analytic_gaussian_potential,
    discrete_norm,
    gaussian_initial,
)
from snewton import experiments as ex
from snewton.diagnostics import DiagnosticsRecord
from snewton.experiments import (
    ApproachConfig,
    Fate,
    FateConfig,
    FateRun,
    bisect_critical_mass,
    classify_fate,
    classify_trajectory,
    convergence_free_particle,
    convergence_poisson,
    force_balance_mass,
    free_gaussian_analytic,
    gaussian_shell_fraction,
    groundstate_approach_run,
    is_damped,
    manifest_entries,
    oscillation_envelope,
    spreading_comparison,
    sweep_fates,
)

# -- convergence -------------------------------------------------------------------


def test_poisson_convergence_curves():
    res = convergence_poisson([1 / 32, 1 / 64])
    assert res.ratios[0] == pytest.approx(16, abs=3)
    coarse, fine = res.scaled
    shared = fine[::2]
    r = res.x[0]
    # even coarse nodes use the same composite rule on both grids; beyond
    # r = 4 both errors are at round-off
    even = np.arange(r.size) % 2 == 0
    bulk = even & (r > 0.25) & (r < 4.0)
    assert np.max(np.abs(coarse[bulk] / shared[bulk] - 1)) < 0.2


def test_poisson_oracle_against_itself():
    res = convergence_poisson([1 / 16, 1 / 32], solver=lambda s: analytic_gaussian_potential(s.grid.r, s.mass))
    assert all(np.all(e == 0) for e in res.errors)


def test_resolutions_must_halve():
    with pytest.raises(ValueError):
        convergence_poisson([1 / 16, 1 / 40])
    with pytest.raises(ValueError):
        convergence_poisson([1 / 16])


def test_free_gaussian_at_zero():
    grid = RadialGrid.from_extent(8.0, 1 / 16)
    s = gaussian_initial(grid, 1.3)
    assert np.allclose(grid.r * free_gaussian_analytic(grid.r, 0.0, 1.3), s.u, rtol=0, atol=1e-15)


@given(st.floats(0.0, 2.0), st.floats(0.5, 3.0))
def test_free_gaussian_centre_and_norm(t, m):
    centre = abs(free_gaussian_analytic(0.0, t, m)) ** 2
    assert centre == pytest.approx(math.pi**-1.5 * (1 + (t / m) ** 2) ** -1.5, rel=1e-12)
    grid = RadialGrid.from_extent(40.0, 1 / 16)
    assert discrete_norm(grid.r * free_gaussian_analytic(grid.r, t, m), grid.dr) == pytest.approx(1.0, abs=1e-9)


def test_free_convergence_curves():
    res = convergence_free_particle([1 / 32, 1 / 64], t_end=1.0)
    assert res.errors[0][-1] / res.errors[1][-1] == pytest.approx(64, abs=15)
    late = res.x[0] >= 0.2
    assert np.max(np.abs(res.scaled[0][late] / res.scaled[1][late] - 1)) < 0.25
    assert res.errors[0][0] < 1e-10 and res.errors[1][0] < 1e-10


# -- force balance -----------------------------------------------------------------


def test_force_balance():
    assert gaussian_shell_fraction() == pytest.approx(oracles.SHELL_FRACTION, abs=1e-12)
    assert gaussian_shell_fraction() == pytest.approx(0.4276, abs=0.0005)
    assert force_balance_mass() == pytest.approx(1.32, abs=0.01)
    assert force_balance_mass() == pytest.approx(oracles.FORCE_BALANCE_MASS, rel=1e-12)
    assert force_balance_mass(1.0) == 1.0
    # the fraction is scale free
    assert gaussian_shell_fraction(2.5) == pytest.approx(oracles.SHELL_FRACTION, rel=1e-10)
    with pytest.raises(ValueError):
        force_balance_mass(0.0)


# -- fate predicate on synthetic series -------------------------------------------------


def _series(t, rp, ve=None):
    ve = np.full_like(t, 0.1) if ve is None else ve
    return [DiagnosticsRecord(tk, 1.0, -0.1, -0.05, rk, 0.1, 0.0, vk, 0.5) for tk, rk, vk in zip(t, rp, ve)]


def test_classify_bound_series():
    t = np.arange(0.0, 40.0 + 1e-9, 1.0)
    rp = 1.0 + 4.0 * np.sin(np.pi * t / 40.0)  # up, then back down
    rep = classify_trajectory(1.3, _series(t, rp))
    assert rep.fate is Fate.BOUND
    assert rep.turnaround_time == pytest.approx(20.0, abs=2.0)
    assert rep.r_peak_max == pytest.approx(5.0, abs=0.1)


def test_classify_escaping_series():
    t = np.arange(0.0, 40.0 + 1e-9, 1.0)
    rep = classify_trajectory(1.0, _series(t, 1.0 + 0.5 * t))
    assert rep.fate is Fate.ESCAPING
    assert rep.v_peak_final == pytest.approx(0.5)
    assert rep.turnaround_time is None
    assert rep.first_expansion_time == 1.0


def test_classify_undecided_series():
    t = np.arange(0.0, 40.0 + 1e-9, 1.0)
    # still expanding, but slower than the local escape velocity
    rep = classify_trajectory(1.0, _series(t, 1.0 + 0.05 * t, np.full_like(t, 0.2)))
    assert rep.fate is Fate.UNDECIDED


def test_classify_ignores_single_sample_jitter():
    t = np.arange(0.0, 40.0 + 1e-9, 1.0)
    rp = 1.0 + 0.5 * t
    rp[30] -= 5.0  # one bad peak fit
    assert classify_trajectory(1.0, _series(t, rp)).fate is Fate.ESCAPING


@given(st.lists(st.floats(0.5, 50.0), min_size=20, max_size=80), st.floats(0.01, 2.0))
def test_report_invariants(values, v_esc):
    t = np.arange(len(values), dtype=float)
    rp = np.array(values)
    rep = classify_trajectory(1.0, _series(t, rp, np.full_like(t, v_esc)))
    if rep.fate is Fate.BOUND:
        assert rep.turnaround_time is not None and rep.turnaround_time < rep.horizon
    elif rep.fate is Fate.ESCAPING:
        assert rep.v_peak_final > rep.v_escape_final
        assert rep.turnaround_time is None


def test_classify_rejects_short_series():
    with pytest.raises(InconclusiveError):
        classify_trajectory(1.0, _series(np.arange(3.0), np.ones(3)))


def test_fate_config_validation():
    with pytest.raises(ValueError):
        FateConfig(absorber_width=40.0)
    with pytest.raises(ValueError):
        classify_fate(1.0, horizon=1.0)


# -- fate runs ------------------------------------------------------------------------


def test_domain_exceeded():
    cfg = FateConfig(outer_radius=8.0, absorber_width=1.0, snapshot_interval=0.5)
    with pytest.raises(DomainExceededError):
        FateRun(0.3, cfg).extend(40.0)


def test_fate_run_resumes():
    cfg = FateConfig(outer_radius=32.0, absorber_width=6.0)
    run = FateRun(1.5, cfg)
    first = run.extend(10.0)
    again = run.extend(20.0)
    # the last record of the first leg gets a centred v_peak once later samples exist
    assert again[: len(first) - 1] == first[:-1]
    assert again[len(first) - 1].r_peak == first[-1].r_peak
    assert again[-1].t == pytest.approx(20.0)


def test_bracket_error_same_fate():
    with pytest.raises(BracketError):
        bisect_critical_mass(0.5, 0.6, 0.05, FateConfig(max_doublings=0))


def test_bisection_inconclusive(monkeypatch):
    stuck = ex.FateReport(1.0, Fate.UNDECIDED, 1.0, None, 0.0, 0.0, 20.0, None)
    monkeypatch.setattr(ex, "classify_fate", lambda *a, **k: stuck)
    with pytest.raises(InconclusiveError, match="m = 1.0"):
        bisect_critical_mass(1.0, 1.5, 0.05)


def test_bisection_logic(monkeypatch):
    # a step predicate at 1.16 stands in for the evolution
    def fake(mass, horizon, config, max_doublings, cancel=None):
        fate = Fate.BOUND if mass > 1.16 else Fate.ESCAPING
        return ex.FateReport(mass, fate, 1.0, 1.0 if fate is Fate.BOUND else None, 0.0, 0.0, 20.0, None)

    monkeypatch.setattr(ex, "classify_fate", fake)
    res = bisect_critical_mass(1.0, 1.5, 0.05)
    assert res.width <= 0.05 and res.lo <= 1.16 < res.hi
    assert len(res.reports) == 2 + 4


def test_sweep_monotone_in_mass():
    masses = [0.8, 1.0, 1.14, 1.17, 1.5, 2.09, 3.0]
    reports = sweep_fates(masses, FateConfig(), horizon=20.0, jobs=4)
    fates = [reports[m].fate for m in masses]
    # no Bound below an Escaping mass
    escaping = [m for m, f in zip(masses, fates) if f is Fate.ESCAPING]
    bound = [m for m, f in zip(masses, fates) if f is Fate.BOUND]
    assert escaping and bound
    assert max(escaping) < min(bound)
    assert reports[0.8].fate is Fate.ESCAPING and reports[3.0].fate is Fate.BOUND


def test_spreading_slower_than_free():
    t, rp_grav, rp_free = spreading_comparison(1.0, t_end=10.0)
    late = t >= 2.0
    assert np.all(rp_grav[late] < rp_free[late])


# -- approach to the groundstate ----------------------------------------------------------


def test_approach_requires_bound_mass():
    with pytest.raises(ValueError):
        groundstate_approach_run(1.0, 10.0)


def test_approach_control_without_gravity():
    cfg = ApproachConfig(gravity=False, dr=1 / 32, average_window=1.0)
    res = groundstate_approach_run(2.09, 4.0, cfg)
    assert np.all(res.energy > 0)
    assert np.max(np.abs(res.energy / res.energy[0] - 1)) < 1e-6
    assert res.series().shape == (len(res.records), 4)


def test_envelope_of_damped_oscillation():
    t = np.linspace(0.0, 400.0, 1601)
    r = 3.0 + 2.0 * np.exp(-t / 60.0) * np.cos(t)
    limit, amps = oscillation_envelope(t, r)
    assert limit == pytest.approx(3.0, abs=0.05)
    assert np.all(np.diff(amps) < 0)
    assert is_damped(t, r)


def test_envelope_rejects_undamped():
    t = np.linspace(0.0, 400.0, 1601)
    assert not is_damped(t, 3.0 + np.cos(t))
    assert not is_damped(t, 3.0 + 0.001 * t * np.cos(t))
    with pytest.raises(ValueError):
        oscillation_envelope(t, t, n_windows=1)


def test_manifest_entries_flatten():
    entries = manifest_entries("fate", config=FateConfig(), mass=1.14)
    assert entries["experiment"] == "fate"
    assert entries["config.dr"] == 1 / 16
    assert entries["mass"] == 1.14
    assert entries["deterministic"] is True
