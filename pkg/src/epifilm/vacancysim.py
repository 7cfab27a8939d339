"""1-D oxygen-vacancy kinetics in a growing film.

Rate equation on the film domain 0 <= z <= thickness(t):

    dc/dt = D_v d2c/dz2 - k(P) c

with zero-flux boundaries, a moving top boundary that adds freshly
deposited cells carrying the incorporation fraction g(P), and explicit
FTCS stepping under the stability bound dt <= dz^2 / (2 D_v).

The reference schedule (vacuum buffer, 20 mTorr main growth, 30 min
anneal) is qualitative: the default rate constants are illustrative
choices that exhibit the buffer-thickness saturation behavior, not
measured quantities.  All of them are configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, StabilityViolationError

# deposition rate: 0.17 Å/shot at ~3.4 shots/s (60-80 nm in ~20 min)
DEFAULT_RATE_NM_S = 0.058


@dataclass(frozen=True)
class Segment:
    duration_s: float
    rate_nm_s: float
    pressure_torr: float
    temperature_c: float = 390.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ConfigError("segment duration must be positive")
        if self.rate_nm_s < 0 or self.pressure_torr < 0:
            raise ConfigError("rate and pressure must be nonnegative")


@dataclass(frozen=True)
class GrowthSchedule:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_time(self) -> float:
        return sum(s.duration_s for s in self.segments)


@dataclass(frozen=True)
class VacancyParams:
    """Transport and reaction parameters.

    g0, p0_torr parameterize the incorporation fraction
    g(P) = g0 / (1 + P/P0); k0 the annihilation rate
    k(P) = k0 * P / (P + P0).  Illustrative defaults.
    """

    d_v_nm2_s: float = 1e-2
    g0: float = 0.05
    k0_per_s: float = 1e-3
    p0_torr: float = 60e-3
    dz_nm: float = 0.5

    def __post_init__(self):
        if self.d_v_nm2_s < 0 or self.k0_per_s < 0:
            raise ConfigError("D_v and k0 must be nonnegative")
        if not 0 <= self.g0 <= 1:
            raise ConfigError("g0 must be in [0, 1]")
        if self.dz_nm <= 0 or self.p0_torr <= 0:
            raise ConfigError("dz and P0 must be positive")

    def incorporation(self, pressure_torr: float) -> float:
        return self.g0 / (1.0 + pressure_torr / self.p0_torr)

    def annihilation(self, pressure_torr: float) -> float:
        return self.k0_per_s * pressure_torr / (pressure_torr + self.p0_torr)

    def stable_dt(self) -> float:
        if self.d_v_nm2_s == 0:
            return np.inf
        return self.dz_nm**2 / (2.0 * self.d_v_nm2_s)


@dataclass(frozen=True)
class VacancyState:
    c: np.ndarray  # site fraction per cell, index 0 at the substrate
    thickness_nm: float
    t: float
    deposited_nm: float = 0.0  # material deposited but below one cell height

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))

    @property
    def mean_c(self) -> float:
        return float(self.c.mean()) if self.c.size else float("nan")

    @property
    def total(self) -> float:
        """Integral of c over z (nm units), for conservation checks."""
        return float(self.c.sum())


def initial_state() -> VacancyState:
    return VacancyState(c=np.empty(0), thickness_nm=0.0, t=0.0)


def step(state: VacancyState, params: VacancyParams, segment: Segment,
         dt: float) -> VacancyState:
    """Advance one explicit time step within a schedule segment."""
    bound = params.stable_dt()
    if dt > bound * (1.0 + 1e-12):
        raise StabilityViolationError(
            f"dt={dt} exceeds stability bound dz^2/(2 D_v)={bound}")
    c = state.c.copy()
    k = params.annihilation(segment.pressure_torr)
    g = params.incorporation(segment.pressure_torr)

    if c.size >= 2 and params.d_v_nm2_s > 0:
        lap = np.empty_like(c)
        lap[1:-1] = c[2:] - 2.0 * c[1:-1] + c[:-2]
        lap[0] = c[1] - c[0]      # zero-flux bottom
        lap[-1] = c[-2] - c[-1]   # zero-flux top
        c = c + dt * params.d_v_nm2_s / params.dz_nm**2 * lap
    c = c * (1.0 - dt * k) if k > 0 else c

    deposited = state.deposited_nm + segment.rate_nm_s * dt
    n_new = int(deposited // params.dz_nm)
    if n_new:
        c = np.concatenate([c, np.full(n_new, g)])
        deposited -= n_new * params.dz_nm
    return VacancyState(
        c=c,
        thickness_nm=state.thickness_nm + segment.rate_nm_s * dt,
        t=state.t + dt,
        deposited_nm=deposited,
    )


def simulate(schedule: GrowthSchedule, params: VacancyParams,
             dt: float | None = None, snapshot_every_s: float | None = None):
    """Run a full schedule.  Returns (final state, times, mean_c, snapshots).

    Deterministic for identical inputs.  ``snapshot_every_s`` appends
    (t, c-field copy) pairs at roughly that cadence.
    """
    if not schedule.segments:
        raise ConfigError("schedule has no segments")
    if dt is None:
        dt = min(params.stable_dt(), 1.0)
    state = initial_state()
    times = [0.0]
    means = [float("nan")]
    snapshots = []
    next_snap = 0.0
    for seg in schedule.segments:
        # ceil so the per-segment step never exceeds the stability bound
        n_steps = max(1, int(np.ceil(seg.duration_s / dt - 1e-12)))
        seg_dt = seg.duration_s / n_steps
        for _ in range(n_steps):
            state = step(state, params, seg, seg_dt)
            times.append(state.t)
            means.append(state.mean_c)
            if snapshot_every_s is not None and state.t >= next_snap:
                snapshots.append((state.t, state.c.copy()))
                next_snap = state.t + snapshot_every_s
    return state, np.array(times), np.array(means), snapshots


def reference_schedule(buffer_nm: float = 5.0, film_nm: float = 65.0,
                        rate_nm_s: float = DEFAULT_RATE_NM_S,
                        growth_pressure_torr: float = 20e-3,
                        anneal_s: float = 1800.0,
                        temperature_c: float = 390.0) -> GrowthSchedule:
    """Vacuum buffer, then oxygen growth, then a post-growth anneal."""
    segs = []
    if buffer_nm > 0:
        segs.append(Segment(buffer_nm / rate_nm_s, rate_nm_s, 0.0, temperature_c))
    if film_nm > 0:
        segs.append(Segment(film_nm / rate_nm_s, rate_nm_s,
                            growth_pressure_torr, temperature_c))
    if anneal_s > 0:
        segs.append(Segment(anneal_s, 0.0, growth_pressure_torr, temperature_c))
    if not segs:
        raise ConfigError("degenerate schedule: nothing deposited, no anneal")
    return GrowthSchedule(tuple(segs))


def saturation_scan(buffer_thicknesses_nm, params: VacancyParams,
                    film_nm: float = 65.0, dt: float | None = None,
                    **schedule_kwargs):
    """Final mean vacancy concentration vs buffer thickness.

    One simulate run per thickness with the rest of the schedule fixed.
    """
    if not list(buffer_thicknesses_nm):
        raise ConfigError("need at least one buffer thickness")
    out = []
    for b in buffer_thicknesses_nm:
        sched = reference_schedule(buffer_nm=b, film_nm=film_nm, **schedule_kwargs)
        final, _, _, _ = simulate(sched, params, dt=dt)
        out.append((float(b), final.mean_c))
    return out


def well_mixed_final_mean(schedule: GrowthSchedule, params: VacancyParams,
                          dt: float = 0.05) -> float:
    """Single-compartment ODE limit (D_v -> infinity) of the same model.

    d(M)/dt = rate*g(P) - k(P)*M with M = mean_c * thickness; integrated
    with small explicit steps.  Serves as the well-mixed oracle.
    """
    thickness = 0.0
    m = 0.0  # integral of c over z
    for seg in schedule.segments:
        n = max(1, int(round(seg.duration_s / dt)))
        h = seg.duration_s / n
        g = params.incorporation(seg.pressure_torr)
        k = params.annihilation(seg.pressure_torr)
        for _ in range(n):
            m += h * (seg.rate_nm_s * g - k * m)
            thickness += h * seg.rate_nm_s
    if thickness == 0:
        return float("nan")
    return m / thickness
