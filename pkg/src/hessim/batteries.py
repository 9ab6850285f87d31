"""Energy-domain VRFB and Li-ion battery models.

Both technologies share one model: SOC bookkeeping in the DC domain with
one-way charge/discharge efficiencies, AC power limits that taper linearly
to zero near either SOC bound, and headroom clamping so a single step can
never push SOC out of its window.  The Li-ion pack additionally loses
capacity with calendar time (NREL/SAM square-root-of-time fade).

The numeric cores are plain functions compiled with numba so the minute loop
in :mod:`hessim.dispatch` can call them without leaving machine code; the
dataclass wrappers below are the public Python surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

from numba import njit

Tech = Literal["vrfb", "lib"]
TECHS: tuple[Tech, ...] = ("vrfb", "lib")

# SAM cell resistance for the LIB pack.  Kept for reference; the energy-domain
# model has no voltage/current state, so it is never used in a computation.
LIB_CELL_RESISTANCE_OHM = 0.001155


@dataclass(frozen=True)
class BatterySpec:
    tech: Tech
    energy_capacity_nominal: float  # Wh
    p_charge_max: float  # W, AC side
    p_discharge_max: float  # W, AC side
    soc_min: float
    soc_max: float
    soc_initial: float = 0.5
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    standby_power: float = 0.0  # W, inverter idle draw
    capacity_fade_rate: float = 0.0  # linear fraction/year, applied daily
    calendar_fade: bool = False  # NREL sqrt(t) calendar fade (LIB)
    taper_band: float = 0.10  # SOC width of the linear power taper at each bound

    def __post_init__(self):
        if self.tech not in TECHS:
            raise ValueError(f"unknown battery technology {self.tech!r}")
        if not 0.0 <= self.soc_min < self.soc_initial < self.soc_max <= 1.0:
            raise ValueError(
                f"{self.tech}: need 0 <= soc_min < soc_initial < soc_max <= 1, got "
                f"{self.soc_min}, {self.soc_initial}, {self.soc_max}"
            )
        if not (0.0 < self.eta_charge <= 1.0 and 0.0 < self.eta_discharge <= 1.0):
            raise ValueError(f"{self.tech}: efficiencies must lie in (0, 1]")
        if self.p_charge_max <= 0 or self.p_discharge_max <= 0:
            raise ValueError(f"{self.tech}: power limits must be positive")
        if self.energy_capacity_nominal <= 0:
            raise ValueError(f"{self.tech}: capacity must be positive")
        if self.standby_power < 0 or self.capacity_fade_rate < 0 or self.taper_band < 0:
            raise ValueError(f"{self.tech}: standby, fade rate and taper must be >= 0")


def vrfb_spec(**overrides) -> BatterySpec:
    """5 kW / 60 kWh flow battery, SOC window 5-95 %."""
    base = BatterySpec(
        tech="vrfb",
        energy_capacity_nominal=60_000.0,
        p_charge_max=5_000.0,
        p_discharge_max=5_000.0,
        soc_min=0.05,
        soc_max=0.95,
        soc_initial=0.50,
        eta_charge=math.sqrt(0.75),
        eta_discharge=math.sqrt(0.75),
        standby_power=30.0,
        capacity_fade_rate=0.0,
        calendar_fade=False,
    )
    return replace(base, **overrides)


def lib_spec(**overrides) -> BatterySpec:
    """9.8 kWh Li-ion pack behind a 3.3 kW inverter, SOC window 10-90 %."""
    base = BatterySpec(
        tech="lib",
        energy_capacity_nominal=9_800.0,
        p_charge_max=3_300.0,
        p_discharge_max=3_300.0,
        soc_min=0.10,
        soc_max=0.90,
        soc_initial=0.50,
        eta_charge=math.sqrt(0.95),
        eta_discharge=math.sqrt(0.95),
        standby_power=5.0,
        capacity_fade_rate=0.0,
        calendar_fade=True,
    )
    return replace(base, **overrides)


def default_spec(tech: Tech, **overrides) -> BatterySpec:
    return vrfb_spec(**overrides) if tech == "vrfb" else lib_spec(**overrides)


@dataclass(frozen=True)
class AgingParams:
    """Coefficients of the NREL calendar-fade fit (NMC chemistry)."""

    a: float = 0.00266  # 1/sqrt(day)
    b: float = -7280.0  # K
    c: float = 930.0  # K
    t_ref: float = 296.0  # K
    ambient_t: float = 296.15  # K, 23 degC air-conditioned room
    q0: float = 1.02

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("aging coefficient a must be positive")


@dataclass(frozen=True)
class BatteryState:
    soc: float
    effective_capacity: float  # Wh
    q: float = 1.0
    elapsed_days: int = 0
    soc_day_accumulator: float = 0.0  # SOC x minutes since the last day boundary
    throughput_charge: float = 0.0  # Wh AC
    throughput_discharge: float = 0.0  # Wh AC


def initial_state(spec: BatterySpec, aging: AgingParams | None = None) -> BatteryState:
    q = (aging or AgingParams()).q0 if spec.calendar_fade else 1.0
    return BatteryState(
        soc=spec.soc_initial,
        effective_capacity=min(q, 1.0) * spec.energy_capacity_nominal,
        q=q,
    )


# -- numeric cores -----------------------------------------------------------


@njit(cache=True)
def limits_core(soc, capacity, soc_min, soc_max, p_ch_max, p_dis_max, eta_ch, eta_dis, taper, dt):
    """AC charge/discharge power available this step (both >= 0)."""
    if soc >= soc_max:
        p_ch = 0.0
    else:
        head = soc_max - soc
        p_ch = p_ch_max
        if taper > 0.0 and head < taper:
            p_ch = p_ch_max * head / taper
        room = head * capacity * 60.0 / (eta_ch * dt)
        if room < p_ch:
            p_ch = room
    if soc <= soc_min:
        p_dis = 0.0
    else:
        head = soc - soc_min
        p_dis = p_dis_max
        if taper > 0.0 and head < taper:
            p_dis = p_dis_max * head / taper
        room = head * capacity * eta_dis * 60.0 / dt
        if room < p_dis:
            p_dis = room
    return p_ch, p_dis


@njit(cache=True)
def step_core(soc, capacity, p_cmd, p_ch, p_dis, eta_ch, eta_dis, soc_min, soc_max, dt):
    """Execute a signed AC command (+ charge).  Returns (soc', p_actual, e_ac, e_dc) in Wh."""
    p = p_cmd
    if p > p_ch:
        p = p_ch
    elif p < -p_dis:
        p = -p_dis
    e_ac = p * dt / 60.0
    if p > 0.0:
        e_dc = e_ac * eta_ch
        soc_new = soc + e_dc / capacity
        if soc_new > soc_max:
            soc_new = soc_max  # rounding guard; headroom clamp already bounds it
    elif p < 0.0:
        e_dc = e_ac / eta_dis
        soc_new = soc + e_dc / capacity
        if soc_new < soc_min:
            soc_new = soc_min
    else:
        e_dc = 0.0
        soc_new = soc
    return soc_new, p, e_ac, e_dc


@njit(cache=True)
def stress_factor_core(a, b, c, t_ref, temperature, soc):
    # exponents as printed in the NREL fit: b(1/T - 1/Tref), c(SOC/T - 1/Tref)
    return a * math.exp(b * (1.0 / temperature - 1.0 / t_ref)) * math.exp(
        c * (soc / temperature - 1.0 / t_ref)
    )


@njit(cache=True)
def sqrt_increment(day):
    """sqrt(day) - sqrt(day - 1), in the cancellation-free form."""
    return 1.0 / (math.sqrt(day) + math.sqrt(day - 1.0))


# -- public wrappers ---------------------------------------------------------


def power_limits(
    spec: BatterySpec,
    state: BatteryState,
    dt: float = 1.0,
    soc_bounds: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """(charge, discharge) AC power available at the current state, in W."""
    lo, hi = soc_bounds if soc_bounds is not None else (spec.soc_min, spec.soc_max)
    return limits_core(
        state.soc, state.effective_capacity, lo, hi,
        spec.p_charge_max, spec.p_discharge_max,
        spec.eta_charge, spec.eta_discharge, spec.taper_band, dt,
    )


def step(
    spec: BatterySpec,
    state: BatteryState,
    p_command: float,
    dt: float = 1.0,
    soc_bounds: tuple[float, float] | None = None,
) -> tuple[BatteryState, float, float]:
    """Apply ``p_command`` (W, positive = charge) for ``dt`` minutes.

    Returns the new state, the AC power actually exchanged and the conversion
    loss in Wh.  Inverter standby is not booked here.
    """
    if dt != 1.0:
        raise ValueError("the model runs on a fixed 1-minute step")
    if not math.isfinite(p_command):
        raise FloatingPointError(f"non-finite power command {p_command!r}")
    lo, hi = soc_bounds if soc_bounds is not None else (spec.soc_min, spec.soc_max)
    p_ch, p_dis = power_limits(spec, state, dt, (lo, hi))
    soc, p, e_ac, e_dc = step_core(
        state.soc, state.effective_capacity, p_command, p_ch, p_dis,
        spec.eta_charge, spec.eta_discharge, lo, hi, dt,
    )
    new = replace(
        state,
        soc=soc,
        soc_day_accumulator=state.soc_day_accumulator + soc * dt,
        throughput_charge=state.throughput_charge + max(e_ac, 0.0),
        throughput_discharge=state.throughput_discharge + max(-e_ac, 0.0),
    )
    return new, p, abs(e_ac - e_dc)


def stress_factor(params: AgingParams, soc_mean: float, temperature: float | None = None) -> float:
    """Calendar-fade stress factor kcal in 1/sqrt(day)."""
    t = params.ambient_t if temperature is None else temperature
    if t <= 0:
        raise ValueError(f"temperature must be positive kelvin, got {t}")
    return stress_factor_core(params.a, params.b, params.c, params.t_ref, t, soc_mean)


def lib_calendar_fade(
    params: AgingParams, t_days: float, soc_mean: float, temperature: float | None = None
) -> float:
    """Relative capacity q after ``t_days`` at constant SOC and temperature."""
    if t_days < 0:
        raise ValueError("t_days must be >= 0")
    if not 0.0 <= soc_mean <= 1.0:
        raise ValueError("soc_mean must lie in [0, 1]")
    return params.q0 - stress_factor(params, soc_mean, temperature) * math.sqrt(t_days)


def apply_daily_fade(spec: BatterySpec, state: BatteryState, params: AgingParams) -> BatteryState:
    """Close one simulated day: age the pack by one day at today's mean SOC."""
    day = state.elapsed_days + 1
    q = state.q
    if spec.calendar_fade:
        soc_mean = state.soc_day_accumulator / 1440.0
        q = q - stress_factor(params, soc_mean) * sqrt_increment(day)
    if spec.capacity_fade_rate > 0.0:
        q = q - spec.capacity_fade_rate / 365.0
    capacity = state.effective_capacity
    if q != state.q:
        capacity = min(q, 1.0) * spec.energy_capacity_nominal
    return replace(state, q=q, effective_capacity=capacity, elapsed_days=day, soc_day_accumulator=0.0)
