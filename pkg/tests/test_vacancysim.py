"""Property tests for the 1-D vacancy kinetics simulator."""

import numpy as np
import pytest

from epifilm.errors import ConfigError, StabilityViolationError
from epifilm.vacancysim import (
    GrowthSchedule,
    Segment,
    VacancyParams,
    VacancyState,
    initial_state,
    reference_schedule,
    saturation_scan,
    simulate,
    step,
    well_mixed_final_mean,
)


def test_segment_and_param_validation():
    with pytest.raises(ConfigError):
        Segment(duration_s=0.0, rate_nm_s=0.1, pressure_torr=0.0)
    with pytest.raises(ConfigError):
        Segment(duration_s=1.0, rate_nm_s=-0.1, pressure_torr=0.0)
    with pytest.raises(ConfigError):
        VacancyParams(g0=1.5)
    with pytest.raises(ConfigError):
        VacancyParams(dz_nm=0.0)
    with pytest.raises(ConfigError):
        VacancyParams(d_v_nm2_s=-1.0)


def test_incorporation_and_annihilation_shapes():
    p = VacancyParams()
    assert p.incorporation(0.0) == p.g0
    assert p.incorporation(p.p0_torr) == pytest.approx(p.g0 / 2.0)
    assert p.annihilation(0.0) == 0.0
    assert p.annihilation(p.p0_torr) == pytest.approx(p.k0_per_s / 2.0)
    # monotone: incorporation falls, annihilation rises with pressure
    ps = np.linspace(0.0, 0.2, 50)
    inc = [p.incorporation(x) for x in ps]
    ann = [p.annihilation(x) for x in ps]
    assert all(a >= b for a, b in zip(inc, inc[1:]))
    assert all(a <= b for a, b in zip(ann, ann[1:]))


def test_stability_bound_enforced():
    p = VacancyParams(d_v_nm2_s=1.0, dz_nm=0.5)
    seg = Segment(10.0, 0.0, 0.0)
    state = VacancyState(c=np.full(20, 0.01), thickness_nm=10.0, t=0.0)
    with pytest.raises(StabilityViolationError):
        step(state, p, seg, dt=2.0 * p.stable_dt())
    step(state, p, seg, dt=p.stable_dt())  # exactly at the bound is fine


def test_mass_conserved_with_sources_off():
    """Diffusion only (no growth, vacuum => k = 0): total content constant
    to 1e-10 relative per step."""
    p = VacancyParams(d_v_nm2_s=1.0, dz_nm=0.5)
    seg = Segment(duration_s=1.0, rate_nm_s=0.0, pressure_torr=0.0)
    rng = np.random.default_rng(0)
    state = VacancyState(c=rng.uniform(0.0, 0.05, 64), thickness_nm=32.0, t=0.0)
    dt = p.stable_dt()
    for _ in range(500):
        before = state.total
        state = step(state, p, seg, dt)
        assert abs(state.total - before) <= 1e-10 * max(before, 1e-30)


def test_boundedness():
    """0 <= c <= g0 throughout a full schedule."""
    p = VacancyParams()
    sched = reference_schedule(buffer_nm=10.0, film_nm=30.0)
    final, _, means, snaps = simulate(sched, p, snapshot_every_s=100.0)
    assert np.all(final.c >= 0.0)
    assert np.all(final.c <= p.g0 + 1e-12)
    for _, c in snaps:
        assert np.all(c >= 0.0) and np.all(c <= p.g0 + 1e-12)


def test_diffusion_relaxes_towards_uniform():
    p = VacancyParams(d_v_nm2_s=1.0, dz_nm=0.5)
    seg = Segment(duration_s=1.0, rate_nm_s=0.0, pressure_torr=0.0)
    c0 = np.zeros(40)
    c0[:20] = 0.04
    state = VacancyState(c=c0, thickness_nm=20.0, t=0.0)
    dt = p.stable_dt()
    for _ in range(4000):
        state = step(state, p, seg, dt)
    assert np.ptp(state.c) < 1e-3
    assert state.mean_c == pytest.approx(0.02, rel=1e-9)


def test_grid_convergence_under_refinement():
    """Halving dz and dt changes the final mean by < 1%."""
    sched = reference_schedule(buffer_nm=5.0, film_nm=20.0, anneal_s=300.0)
    p1 = VacancyParams(dz_nm=0.5)
    p2 = VacancyParams(dz_nm=0.25)
    f1, *_ = simulate(sched, p1, dt=0.5)
    f2, *_ = simulate(sched, p2, dt=0.25)
    assert abs(f1.mean_c - f2.mean_c) / f1.mean_c < 0.01


def test_well_mixed_limit_matches_ode():
    """Large D_v: the PDE final mean matches the single-compartment ODE
    within 2%."""
    sched = reference_schedule(buffer_nm=5.0, film_nm=20.0, anneal_s=600.0)
    p = VacancyParams(d_v_nm2_s=10.0, dz_nm=1.0)
    final, *_ = simulate(sched, p)
    ode = well_mixed_final_mean(sched, p)
    assert abs(final.mean_c - ode) / ode < 0.02


def test_saturation_scan_nondecreasing_and_saturating():
    p = VacancyParams()
    buffers = [5.0, 10.0, 20.0, 40.0]
    scan = saturation_scan(buffers, p, film_nm=65.0)
    means = [m for _, m in scan]
    for a, b in zip(means, means[1:]):
        assert b >= a - 1e-12
    # < 5% relative change between the two largest thicknesses
    assert abs(means[-1] - means[-2]) / means[-2] < 0.05


def test_saturation_scan_rejects_empty():
    with pytest.raises(ConfigError):
        saturation_scan([], VacancyParams())


def test_vacuum_growth_keeps_g0():
    """Growth in vacuum (k = 0) deposits at g0 and nothing decays."""
    p = VacancyParams()
    sched = GrowthSchedule((Segment(100.0, 0.1, 0.0),))
    final, *_ = simulate(sched, p)
    assert final.c == pytest.approx(p.g0)


def test_simulate_deterministic():
    p = VacancyParams()
    sched = reference_schedule(buffer_nm=5.0, film_nm=10.0, anneal_s=100.0)
    a, ta, ma, _ = simulate(sched, p)
    b, tb, mb, _ = simulate(sched, p)
    assert np.array_equal(a.c, b.c)
    assert np.array_equal(ma, mb, equal_nan=True)


def test_thickness_tracks_deposition():
    p = VacancyParams()
    sched = GrowthSchedule((Segment(100.0, 0.058, 20e-3),))
    final, *_ = simulate(sched, p)
    assert final.thickness_nm == pytest.approx(5.8, rel=1e-9)
    assert final.c.size * p.dz_nm + final.deposited_nm == \
        pytest.approx(5.8, abs=p.dz_nm)


def test_initial_state_empty():
    s = initial_state()
    assert s.c.size == 0 and np.isnan(s.mean_c)


def test_empty_schedule_rejected():
    with pytest.raises(ConfigError):
        simulate(GrowthSchedule(()), VacancyParams())
