"""EMS priority ladder, HESS power allocation and the minute-loop engine.

Energy routing is the same in every scenario: PV feeds the building first
(including the battery inverters' standby draw), surplus charges the
batteries, and the grid only absorbs or supplies what remains.  Scenarios
differ in how the residual battery command is split between the flow
battery and the Li-ion pack:

``s1_fixed_split``     constant split, 75 % VRFB / 25 % LIB
``s2_psoc_split``      LIB share from a SOC-dependent curve, VRFB takes the rest
``s3_band_split``      LIB serves the +-1000 W band, VRFB the excess
``s4_soc_sweep_case``  s1 allocation with seasonal SOC windows
``s5_single_vrfb``     VRFB alone
``s5_single_lib``      LIB alone

Whatever one battery cannot absorb (power or SOC saturation) is offered to
the other before it reaches the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Callable, Literal, Mapping

import numpy as np
from numba import njit

from .batteries import (
    TECHS,
    AgingParams,
    BatterySpec,
    BatteryState,
    apply_daily_fade,
    initial_state,
    limits_core,
    lib_spec,
    step as battery_step,
    sqrt_increment,
    step_core,
    stress_factor_core,
    vrfb_spec,
)
from .profiles import (
    DAYS_PER_YEAR,
    HORIZON_YEARS,
    MINUTES_PER_DAY,
    MINUTES_PER_YEAR,
    MinuteSeries,
    ScalingPolicy,
    scale_to_year,
)

ScenarioId = Literal[
    "s1_fixed_split",
    "s2_psoc_split",
    "s3_band_split",
    "s4_soc_sweep_case",
    "s5_single_vrfb",
    "s5_single_lib",
]
SCENARIOS: tuple[str, ...] = (
    "s1_fixed_split",
    "s2_psoc_split",
    "s3_band_split",
    "s4_soc_sweep_case",
    "s5_single_vrfb",
    "s5_single_lib",
)

_FIXED, _PSOC, _BAND, _SINGLE_VRFB, _SINGLE_LIB = range(5)
_CODES = {
    "s1_fixed_split": _FIXED,
    "s2_psoc_split": _PSOC,
    "s3_band_split": _BAND,
    "s4_soc_sweep_case": _FIXED,
    "s5_single_vrfb": _SINGLE_VRFB,
    "s5_single_lib": _SINGLE_LIB,
}

# Apr 1 .. Sep 30 on the 365-day calendar
SUMMER_FIRST_DAY = 90
SUMMER_LAST_DAY = 272
WINTER, SUMMER = 0, 1


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class BetaCurve:
    """LIB share of the HESS command as a function of LIB SOC.

    Piecewise-linear breakpoint tables, held flat outside their range.  The
    defaults give the LIB the whole command in mid-SOC and fade its share
    out towards 90 % SOC when charging and towards 10 % when discharging.
    """

    charge_soc: tuple[float, ...] = (0.5, 0.9)
    charge_beta: tuple[float, ...] = (1.0, 0.0)
    discharge_soc: tuple[float, ...] = (0.1, 0.5)
    discharge_beta: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        for xs, ys in ((self.charge_soc, self.charge_beta), (self.discharge_soc, self.discharge_beta)):
            if len(xs) != len(ys) or len(xs) < 1:
                raise ConfigurationError("beta curve tables must be non-empty and equally long")
            if any(b > a for a, b in zip(xs[1:], xs[:-1])):
                raise ConfigurationError("beta curve SOC breakpoints must be increasing")
            if any(not 0.0 <= y <= 1.0 for y in ys):
                raise ConfigurationError("beta values must lie in [0, 1]")

    def __call__(self, lib_soc: float, sign: float) -> float:
        if sign > 0:
            return float(np.interp(lib_soc, self.charge_soc, self.charge_beta))
        if sign < 0:
            return float(np.interp(lib_soc, self.discharge_soc, self.discharge_beta))
        return 0.0


SeasonalRanges = Mapping[str, Mapping[str, tuple[float, float]]]


@dataclass(frozen=True)
class ScenarioPolicy:
    id: str = "s1_fixed_split"
    alpha: float = 0.75  # VRFB share, fixed-split scenarios
    beta: float = 0.25  # LIB share
    band_w: float = 1000.0
    beta_curve: BetaCurve = field(default_factory=BetaCurve)
    # s4 only: {"vrfb": {"winter": (lo, hi), "summer": (lo, hi)}, "lib": {...}}
    soc_ranges: SeasonalRanges | None = None

    def __post_init__(self):
        if self.id not in _CODES:
            raise ConfigurationError(f"unknown scenario id {self.id!r}; expected one of {SCENARIOS}")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0) or self.alpha + self.beta != 1.0:
            raise ConfigurationError(f"alpha + beta must equal 1, got {self.alpha} + {self.beta}")
        if self.band_w <= 0:
            raise ConfigurationError("band_w must be positive")
        if self.soc_ranges is not None:
            for tech, seasons in self.soc_ranges.items():
                if tech not in TECHS:
                    raise ConfigurationError(f"soc_ranges: unknown technology {tech!r}")
                for season, (lo, hi) in seasons.items():
                    if season not in ("winter", "summer"):
                        raise ConfigurationError(f"soc_ranges: unknown season {season!r}")
                    if not 0.0 <= lo < hi <= 1.0:
                        raise ConfigurationError(f"soc_ranges[{tech}][{season}] = {(lo, hi)} is not a window")

    @property
    def code(self) -> int:
        return _CODES[self.id]

    @property
    def active(self) -> tuple[str, ...]:
        if self.id == "s5_single_vrfb":
            return ("vrfb",)
        if self.id == "s5_single_lib":
            return ("lib",)
        return TECHS


def default_specs() -> dict[str, BatterySpec]:
    return {"vrfb": vrfb_spec(), "lib": lib_spec()}


# -- numeric cores -----------------------------------------------------------


@njit(cache=True)
def _clamp(x, lo, hi):
    if x > hi:
        return hi
    if x < lo:
        return lo
    return x


@njit(cache=True)
def battery_request(pv, load, load_total):
    """Net request after PV has served the building and inverter standby.

    Batteries discharge only for building load: standby that PV cannot cover
    is imported, so an idle HESS is not drained by its own inverters.
    """
    p = pv - load_total
    if p < -load:
        p = -load
    return p


@njit(cache=True)
def allocate_core(code, p_target, lib_soc, beta, band, ch_x, ch_y, dis_x, dis_y):
    """(vrfb, lib) commands.  The LIB share is computed first and the VRFB
    gets the remainder, so the two sum to ``p_target`` up to the rounding of
    that one subtraction."""
    if code == _SINGLE_VRFB:
        return p_target, 0.0
    if code == _SINGLE_LIB:
        return 0.0, p_target
    if code == _BAND:
        p_lib = _clamp(p_target, -band, band)
    elif code == _PSOC:
        if p_target > 0.0:
            p_lib = np.interp(lib_soc, ch_x, ch_y) * p_target
        elif p_target < 0.0:
            p_lib = np.interp(lib_soc, dis_x, dis_y) * p_target
        else:
            p_lib = 0.0
    else:
        p_lib = beta * p_target
    return p_target - p_lib, p_lib


@njit(cache=True)
def resolve_core(p_target, cmd_v, cmd_l, pc_v, pd_v, pc_l, pd_l):
    """Clamp both commands and spill each battery's unserved part onto the other."""
    a_v = _clamp(cmd_v, -pd_v, pc_v)
    a_l = _clamp(cmd_l, -pd_l, pc_l)
    fin_v = _clamp(a_v + (cmd_l - a_l), -pd_v, pc_v)
    fin_l = _clamp(a_l + (cmd_v - a_v), -pd_l, pc_l)
    return fin_v, fin_l


# accumulator slots (Wh unless noted)
(A_PV, A_LOAD, A_STANDBY, A_PV_TO_LOAD, A_IMPORT, A_EXPORT,
 A_CH_V, A_DIS_V, A_CH_L, A_DIS_L, A_LOSS_V, A_LOSS_L, A_USABLE_V, A_USABLE_L) = range(14)
N_ACC = 14
# per-minute-of-day profiles
M_IMPORT, M_EXPORT, M_LOAD = range(3)
# state columns
S_SOC, S_Q, S_CAP, S_DAYS, S_SOCACC, S_THR_C, S_THR_D = range(7)
N_STATE = 7
# parameter columns
P_CAP_NOM, P_PCH, P_PDIS, P_ETA_C, P_ETA_D, P_STANDBY, P_TAPER, P_FADE_RATE, P_CAL_FADE = range(9)
N_PARAM = 9

TRACE_FIELDS = (
    "pv", "load", "standby", "pv_to_load",
    "vrfb_charge", "vrfb_discharge", "lib_charge", "lib_discharge",
    "grid_import", "grid_export", "vrfb_loss", "lib_loss",
    "vrfb_soc", "lib_soc", "vrfb_cmd", "lib_cmd",
)
(T_PV, T_LOAD, T_STANDBY, T_PV_TO_LOAD, T_CH_V, T_DIS_V, T_CH_L, T_DIS_L,
 T_IMPORT, T_EXPORT, T_LOSS_V, T_LOSS_L, T_SOC_V, T_SOC_L, T_CMD_V, T_CMD_L) = range(16)


@njit(cache=True)
def _battery_minute(state, t, cmd, p_ch, p_dis, par, bounds, season, acc, dt):
    soc, p, e_ac, e_dc = step_core(state[t, S_SOC], state[t, S_CAP], cmd, p_ch, p_dis,
                                   par[t, P_ETA_C], par[t, P_ETA_D],
                                   bounds[t, season, 0], bounds[t, season, 1], dt)
    state[t, S_SOC] = soc
    state[t, S_SOCACC] += soc * dt
    if e_ac > 0.0:
        state[t, S_THR_C] += e_ac
    else:
        state[t, S_THR_D] -= e_ac
    acc[A_USABLE_V + t] += (bounds[t, season, 1] - bounds[t, season, 0]) * state[t, S_CAP]
    return p, abs(e_ac - e_dc) * 60.0 / dt


@njit(cache=True)
def _run_year(pv, load, code, beta, band, ch_x, ch_y, dis_x, dis_y, present, par,
              bounds, season_of_day, aging, state, acc, mod, trace, do_trace):
    dt = 1.0
    standby = 0.0
    for t in range(2):
        if present[t]:
            standby += par[t, P_STANDBY]
    n = pv.shape[0]
    for i in range(n):
        day = i // MINUTES_PER_DAY
        mday = i - day * MINUTES_PER_DAY
        season = season_of_day[day]
        p_pv = pv[i]
        load_total = load[i] + standby
        p_target = battery_request(p_pv, load[i], load_total)
        pv_to_load = p_pv if p_pv < load_total else load_total

        lc0 = ld0 = lc1 = ld1 = 0.0
        if present[0]:
            lc0, ld0 = limits_core(state[0, S_SOC], state[0, S_CAP], bounds[0, season, 0], bounds[0, season, 1],
                                   par[0, P_PCH], par[0, P_PDIS], par[0, P_ETA_C], par[0, P_ETA_D],
                                   par[0, P_TAPER], dt)
        if present[1]:
            lc1, ld1 = limits_core(state[1, S_SOC], state[1, S_CAP], bounds[1, season, 0], bounds[1, season, 1],
                                   par[1, P_PCH], par[1, P_PDIS], par[1, P_ETA_C], par[1, P_ETA_D],
                                   par[1, P_TAPER], dt)
        cmd_v, cmd_l = allocate_core(code, p_target, state[1, S_SOC], beta, band, ch_x, ch_y, dis_x, dis_y)
        fin_v, fin_l = resolve_core(p_target, cmd_v, cmd_l, lc0, ld0, lc1, ld1)

        p0 = p1 = loss0 = loss1 = 0.0
        if present[0]:
            p0, loss0 = _battery_minute(state, 0, fin_v, lc0, ld0, par, bounds, season, acc, dt)
        if present[1]:
            p1, loss1 = _battery_minute(state, 1, fin_l, lc1, ld1, par, bounds, season, acc, dt)

        net = p_pv - load_total - p0 - p1
        imp = -net if net < 0.0 else 0.0
        exp = net if net > 0.0 else 0.0

        h = dt / 60.0
        acc[A_PV] += p_pv * h
        acc[A_LOAD] += load[i] * h
        acc[A_STANDBY] += standby * h
        acc[A_PV_TO_LOAD] += pv_to_load * h
        acc[A_IMPORT] += imp * h
        acc[A_EXPORT] += exp * h
        acc[A_CH_V] += max(p0, 0.0) * h
        acc[A_DIS_V] += max(-p0, 0.0) * h
        acc[A_CH_L] += max(p1, 0.0) * h
        acc[A_DIS_L] += max(-p1, 0.0) * h
        acc[A_LOSS_V] += loss0 * h
        acc[A_LOSS_L] += loss1 * h
        mod[M_IMPORT, mday] += imp * h
        mod[M_EXPORT, mday] += exp * h
        mod[M_LOAD, mday] += load[i] * h

        if do_trace:
            trace[T_PV, i] = p_pv
            trace[T_LOAD, i] = load[i]
            trace[T_STANDBY, i] = standby
            trace[T_PV_TO_LOAD, i] = pv_to_load
            trace[T_CH_V, i] = max(p0, 0.0)
            trace[T_DIS_V, i] = max(-p0, 0.0)
            trace[T_CH_L, i] = max(p1, 0.0)
            trace[T_DIS_L, i] = max(-p1, 0.0)
            trace[T_IMPORT, i] = imp
            trace[T_EXPORT, i] = exp
            trace[T_LOSS_V, i] = loss0
            trace[T_LOSS_L, i] = loss1
            trace[T_SOC_V, i] = state[0, S_SOC]
            trace[T_SOC_L, i] = state[1, S_SOC]
            trace[T_CMD_V, i] = cmd_v
            trace[T_CMD_L, i] = cmd_l

        if mday == MINUTES_PER_DAY - 1:
            for t in range(2):
                if present[t]:
                    d = state[t, S_DAYS] + 1.0
                    q = state[t, S_Q]
                    q_old = q
                    if par[t, P_CAL_FADE] > 0.0:
                        kcal = stress_factor_core(aging[0], aging[1], aging[2], aging[3], aging[4],
                                                  state[t, S_SOCACC] / 1440.0)
                        q = q - kcal * sqrt_increment(d)
                    if par[t, P_FADE_RATE] > 0.0:
                        q = q - par[t, P_FADE_RATE] / 365.0
                    if q != q_old:
                        state[t, S_CAP] = min(q, 1.0) * par[t, P_CAP_NOM]
                    state[t, S_Q] = q
                    state[t, S_DAYS] = d
                    state[t, S_SOCACC] = 0.0


# -- records -----------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    """Power flows of one minute, W.  Battery flows are AC side."""

    pv: float
    load: float
    standby: float
    pv_to_load: float
    pv_to_batt: dict[str, float]
    batt_to_load: dict[str, float]
    grid_import: float
    grid_export: float
    conversion_loss: dict[str, float]

    def balance_residual(self) -> float:
        lhs = self.pv + self.grid_import + sum(self.batt_to_load.values())
        rhs = self.load + self.standby + self.grid_export + sum(self.pv_to_batt.values())
        return lhs - rhs


@dataclass
class EnergyLedger:
    """Energy totals of one simulated year (Wh)."""

    year: int
    pv_wh: float
    load_wh: float
    standby_wh: float
    pv_to_load_wh: float
    import_wh: float
    export_wh: float
    vrfb_charge_wh: float
    vrfb_discharge_wh: float
    lib_charge_wh: float
    lib_discharge_wh: float
    vrfb_loss_wh: float
    lib_loss_wh: float
    vrfb_usable_wh: float  # time-mean usable SOC window x effective capacity
    lib_usable_wh: float
    vrfb_nominal_wh: float  # nameplate capacity, 0 when the battery is absent
    lib_nominal_wh: float
    vrfb_soc_end: float
    lib_soc_end: float
    lib_q_end: float
    import_by_minute_of_day: np.ndarray | None = None
    export_by_minute_of_day: np.ndarray | None = None
    load_by_minute_of_day: np.ndarray | None = None

    @property
    def load_total_wh(self) -> float:
        return self.load_wh + self.standby_wh

    @property
    def loss_wh(self) -> float:
        return self.vrfb_loss_wh + self.lib_loss_wh

    def charge_wh(self, tech: str) -> float:
        return getattr(self, f"{tech}_charge_wh")

    def discharge_wh(self, tech: str) -> float:
        return getattr(self, f"{tech}_discharge_wh")

    def usable_wh(self, tech: str) -> float:
        return getattr(self, f"{tech}_usable_wh")

    def nominal_wh(self, tech: str) -> float:
        return getattr(self, f"{tech}_nominal_wh")

    @property
    def battery_to_load_wh(self) -> float:
        return self.vrfb_discharge_wh + self.lib_discharge_wh

    @property
    def delivered_wh(self) -> float:
        """Energy the PV + storage system supplied to the building."""
        return self.pv_to_load_wh + self.battery_to_load_wh

    def scalars(self) -> dict[str, float]:
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if not f.name.endswith("_by_minute_of_day")
        }

    def balance_residual_wh(self) -> float:
        return (self.pv_wh + self.import_wh + self.battery_to_load_wh) - (
            self.load_total_wh + self.export_wh + self.vrfb_charge_wh + self.lib_charge_wh
        )


# -- Python-level API --------------------------------------------------------


def ems_target(pv: float, load: float) -> float:
    """Signed battery request: + surplus to store, - deficit to cover."""
    return pv - load


def allocate(policy: ScenarioPolicy, p_target: float, lib_soc: float) -> tuple[float, float]:
    if not np.isfinite(p_target):
        raise FloatingPointError("non-finite p_target")
    c = policy.beta_curve
    return allocate_core(
        policy.code, float(p_target), float(lib_soc), policy.beta, policy.band_w,
        np.asarray(c.charge_soc, float), np.asarray(c.charge_beta, float),
        np.asarray(c.discharge_soc, float), np.asarray(c.discharge_beta, float),
    )


def _season(minute: int) -> int:
    day = minute // MINUTES_PER_DAY
    return SUMMER if SUMMER_FIRST_DAY <= day <= SUMMER_LAST_DAY else WINTER


def season_bounds(policy: ScenarioPolicy, specs: Mapping[str, BatterySpec]) -> dict[str, dict[str, tuple[float, float]]]:
    out = {}
    for tech in TECHS:
        spec = specs.get(tech)
        full = (spec.soc_min, spec.soc_max) if spec is not None else (0.0, 1.0)
        seasons = dict((policy.soc_ranges or {}).get(tech, {}))
        out[tech] = {"winter": seasons.get("winter", full), "summer": seasons.get("summer", full)}
    return out


def dispatch_step(
    policy: ScenarioPolicy,
    specs: Mapping[str, BatterySpec],
    states: Mapping[str, BatteryState],
    pv: float,
    load: float,
    soc_bounds: Mapping[str, tuple[float, float]] | None = None,
) -> tuple[dict[str, BatteryState], StepRecord]:
    """Resolve one minute of the EMS ladder and return the new battery states."""
    if pv < 0 or load < 0:
        raise ValueError("pv and load must be non-negative")
    active = policy.active
    for tech in active:
        if tech not in specs or tech not in states:
            raise ConfigurationError(f"{policy.id} needs a {tech} spec and state")
    bounds = {t: (soc_bounds or {}).get(t, (specs[t].soc_min, specs[t].soc_max)) for t in active}
    standby = sum(specs[t].standby_power for t in active)
    load_total = load + standby
    p_target = battery_request(pv, load, load_total)
    pv_to_load = min(pv, load_total)

    limits = {t: (0.0, 0.0) for t in TECHS}
    for t in active:
        limits[t] = limits_core(
            states[t].soc, states[t].effective_capacity, bounds[t][0], bounds[t][1],
            specs[t].p_charge_max, specs[t].p_discharge_max,
            specs[t].eta_charge, specs[t].eta_discharge, specs[t].taper_band, 1.0,
        )
    lib_soc = states["lib"].soc if "lib" in states else 0.0
    cmd_v, cmd_l = allocate(policy, p_target, lib_soc)
    fin = dict(zip(TECHS, resolve_core(p_target, cmd_v, cmd_l, *limits["vrfb"], *limits["lib"])))

    new_states = dict(states)
    actual = {t: 0.0 for t in TECHS}
    loss = {t: 0.0 for t in TECHS}
    for t in active:
        new_states[t], actual[t], loss_wh = battery_step(specs[t], states[t], fin[t], 1.0, bounds[t])
        loss[t] = loss_wh * 60.0

    net = pv - load_total - actual["vrfb"] - actual["lib"]
    record = StepRecord(
        pv=pv,
        load=load,
        standby=standby,
        pv_to_load=pv_to_load,
        pv_to_batt={t: max(actual[t], 0.0) for t in TECHS},
        batt_to_load={t: max(-actual[t], 0.0) for t in TECHS},
        grid_import=-net if net < 0 else 0.0,
        grid_export=net if net > 0 else 0.0,
        conversion_loss=loss,
    )
    return new_states, record


def _param_matrix(specs: Mapping[str, BatterySpec]) -> np.ndarray:
    par = np.zeros((2, N_PARAM))
    for t, tech in enumerate(TECHS):
        s = specs.get(tech)
        if s is None:
            continue
        par[t] = (s.energy_capacity_nominal, s.p_charge_max, s.p_discharge_max, s.eta_charge,
                  s.eta_discharge, s.standby_power, s.taper_band, s.capacity_fade_rate,
                  1.0 if s.calendar_fade else 0.0)
    return par


def _state_matrix(states: Mapping[str, BatteryState]) -> np.ndarray:
    mat = np.zeros((2, N_STATE))
    mat[:, S_CAP] = 1.0
    for t, tech in enumerate(TECHS):
        s = states.get(tech)
        if s is None:
            continue
        mat[t] = (s.soc, s.q, s.effective_capacity, s.elapsed_days, s.soc_day_accumulator,
                  s.throughput_charge, s.throughput_discharge)
    return mat


def _states_from_matrix(mat: np.ndarray, techs) -> dict[str, BatteryState]:
    out = {}
    for t, tech in enumerate(TECHS):
        if tech in techs:
            row = mat[t]
            out[tech] = BatteryState(
                soc=float(row[S_SOC]), effective_capacity=float(row[S_CAP]), q=float(row[S_Q]),
                elapsed_days=int(row[S_DAYS]), soc_day_accumulator=float(row[S_SOCACC]),
                throughput_charge=float(row[S_THR_C]), throughput_discharge=float(row[S_THR_D]),
            )
    return out


SEASON_OF_DAY = np.zeros(DAYS_PER_YEAR, dtype=np.int64)
SEASON_OF_DAY[SUMMER_FIRST_DAY : SUMMER_LAST_DAY + 1] = SUMMER
SEASON_OF_DAY.setflags(write=False)

YearCallback = Callable[[int, EnergyLedger, "np.ndarray | None"], None]


def simulate_horizon(
    policy: ScenarioPolicy,
    specs: Mapping[str, BatterySpec] | None,
    base_profiles: tuple[MinuteSeries, MinuteSeries],
    scaling: ScalingPolicy | None = None,
    years: int = HORIZON_YEARS,
    aging: AgingParams | None = None,
    on_year: YearCallback | None = None,
    trace: bool = False,
) -> tuple[list[EnergyLedger], dict[str, BatteryState]]:
    """Run ``years`` x 525,600 dispatch steps.

    ``on_year(year, ledger, trace)`` is called after each year; ``trace`` is a
    ``(len(TRACE_FIELDS), 525600)`` array of per-minute flows when requested,
    else ``None``.  Returns the yearly ledgers and the final battery states.
    """
    specs = dict(specs) if specs is not None else default_specs()
    scaling = scaling or ScalingPolicy()
    aging = aging or AgingParams()
    pv_base, load_base = base_profiles
    if pv_base.kind != "pv" or load_base.kind != "load":
        raise ValueError("base_profiles must be (pv, load)")
    if not 1 <= years <= HORIZON_YEARS:
        raise ValueError(f"years must lie in [1, {HORIZON_YEARS}]")

    active = policy.active
    for tech in active:
        if tech not in specs:
            raise ConfigurationError(f"{policy.id} needs a {tech} battery spec")
    present = np.array([tech in active for tech in TECHS])
    par = _param_matrix({t: specs[t] for t in active})
    sb = season_bounds(policy, specs)
    bounds = np.zeros((2, 2, 2))
    for t, tech in enumerate(TECHS):
        bounds[t, WINTER] = sb[tech]["winter"]
        bounds[t, SUMMER] = sb[tech]["summer"]
    aging_vec = np.array([aging.a, aging.b, aging.c, aging.t_ref, aging.ambient_t, aging.q0])
    state = _state_matrix({t: initial_state(specs[t], aging) for t in active})
    curve = policy.beta_curve
    ch_x, ch_y = np.asarray(curve.charge_soc, float), np.asarray(curve.charge_beta, float)
    dis_x, dis_y = np.asarray(curve.discharge_soc, float), np.asarray(curve.discharge_beta, float)
    trace_buf = np.zeros((len(TRACE_FIELDS), MINUTES_PER_YEAR if trace else 0))

    ledgers = []
    for year in range(1, years + 1):
        pv = scale_to_year(pv_base, scaling, year).values
        load = scale_to_year(load_base, scaling, year).values
        acc = np.zeros(N_ACC)
        mod = np.zeros((3, MINUTES_PER_DAY))
        _run_year(pv, load, policy.code, policy.beta, policy.band_w, ch_x, ch_y, dis_x, dis_y,
                  present, par, bounds, SEASON_OF_DAY, aging_vec, state, acc, mod, trace_buf, trace)
        ledger = EnergyLedger(
            year=year,
            pv_wh=acc[A_PV],
            load_wh=acc[A_LOAD],
            standby_wh=acc[A_STANDBY],
            pv_to_load_wh=acc[A_PV_TO_LOAD],
            import_wh=acc[A_IMPORT],
            export_wh=acc[A_EXPORT],
            vrfb_charge_wh=acc[A_CH_V],
            vrfb_discharge_wh=acc[A_DIS_V],
            lib_charge_wh=acc[A_CH_L],
            lib_discharge_wh=acc[A_DIS_L],
            vrfb_loss_wh=acc[A_LOSS_V],
            lib_loss_wh=acc[A_LOSS_L],
            vrfb_usable_wh=acc[A_USABLE_V] / MINUTES_PER_YEAR,
            lib_usable_wh=acc[A_USABLE_L] / MINUTES_PER_YEAR,
            vrfb_nominal_wh=par[0, P_CAP_NOM],
            lib_nominal_wh=par[1, P_CAP_NOM],
            vrfb_soc_end=state[0, S_SOC] if present[0] else 0.0,
            lib_soc_end=state[1, S_SOC] if present[1] else 0.0,
            lib_q_end=state[1, S_Q] if present[1] else 0.0,
            import_by_minute_of_day=mod[M_IMPORT].copy(),
            export_by_minute_of_day=mod[M_EXPORT].copy(),
            load_by_minute_of_day=mod[M_LOAD].copy(),
        )
        ledgers.append(ledger)
        if on_year is not None:
            on_year(year, ledger, trace_buf if trace else None)
    return ledgers, _states_from_matrix(state, active)


def reference_run(
    policy: ScenarioPolicy,
    specs: Mapping[str, BatterySpec],
    pv: np.ndarray,
    load: np.ndarray,
    aging: AgingParams | None = None,
) -> tuple[list[StepRecord], dict[str, BatteryState]]:
    """Slow step-by-step run through :func:`dispatch_step` (tests and debugging).

    Minute ``i`` of the input is treated as minute ``i`` of the calendar year.
    """
    aging = aging or AgingParams()
    states = {t: initial_state(specs[t], aging) for t in policy.active}
    sb = season_bounds(policy, specs)
    records = []
    for i, (p, l) in enumerate(zip(pv, load)):
        season = "summer" if _season(i) == SUMMER else "winter"
        bounds = {t: sb[t][season] for t in policy.active}
        states, rec = dispatch_step(policy, specs, states, float(p), float(l), bounds)
        records.append(rec)
        if i % MINUTES_PER_DAY == MINUTES_PER_DAY - 1:
            states = {t: apply_daily_fade(specs[t], s, aging) for t, s in states.items()}
    return records, states
