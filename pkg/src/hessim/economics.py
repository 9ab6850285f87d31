"""Bi-hourly tariff, cashflows and the NPV / IRR / SPB / LCOE calculators.

Savings are avoided grid cost: the building's bill with no PV or storage
minus its bill with the system, plus any export revenue.  Energy prices
escalate yearly, OPEX follows inflation, and the battery packs are bought
again in the replacement year.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .dispatch import EnergyLedger
from .profiles import MINUTES_PER_DAY, MINUTES_PER_YEAR

Config = Literal["hess", "vrfb_only", "lib_only"]
CONFIGS: tuple[str, ...] = ("hess", "vrfb_only", "lib_only")
FORMULA_VERSION = "econ-1"


class NoSolutionError(ValueError):
    pass


def config_for_scenario(scenario_id: str) -> Config:
    if scenario_id == "s5_single_vrfb":
        return "vrfb_only"
    if scenario_id == "s5_single_lib":
        return "lib_only"
    return "hess"


def _clock_minutes(hhmm: str) -> int:
    hours, minutes = hhmm.split(":")
    value = int(hours) * 60 + int(minutes)
    if not 0 <= value < MINUTES_PER_DAY:
        raise ValueError(f"clock time {hhmm!r} out of range")
    return value


@dataclass(frozen=True)
class Tariff:
    fixed_daily: float = 0.2796  # EUR/day contracted power
    price_peak: float = 0.2116  # EUR/kWh
    price_offpeak: float = 0.1145  # EUR/kWh
    offpeak_start: str = "22:00"
    offpeak_end: str = "08:00"
    export_price: float = 0.0  # EUR/kWh

    def __post_init__(self):
        if min(self.fixed_daily, self.price_peak, self.price_offpeak, self.export_price) < 0:
            raise ValueError("tariff prices must be >= 0")
        if _clock_minutes(self.offpeak_start) == _clock_minutes(self.offpeak_end):
            raise ValueError("off-peak window is empty")

    def offpeak_mask(self) -> np.ndarray:
        """Boolean per minute of day, True inside the off-peak window."""
        start, end = _clock_minutes(self.offpeak_start), _clock_minutes(self.offpeak_end)
        minute = np.arange(MINUTES_PER_DAY)
        if start < end:
            return (minute >= start) & (minute < end)
        return (minute >= start) | (minute < end)

    def price_by_minute(self) -> np.ndarray:
        """EUR/kWh for each minute of the day."""
        return np.where(self.offpeak_mask(), self.price_offpeak, self.price_peak)


@dataclass(frozen=True)
class CostTable:
    """Capital and operating costs in EUR, VAT included."""

    module_price_per_wp: float = 0.45
    pv_power_wp: float = 9750.0
    inverter_pv_a: float = 2432.0
    inverter_pv_b: float = 1483.0
    lib: float = 4527.0
    lib_inverter: float = 2125.0
    vrfb: float = 17252.0
    vrfb_inverter: float = 1159.0
    vrfb_inverter_count: int = 3
    cabling_hess: float = 2250.0
    cabling_single: float = 750.0  # one third of the HESS figure
    opex: float = 500.0  # EUR/year, VRFB inert-gas supply

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"cost {name} must be >= 0")

    def line_items(self, config: Config) -> dict[str, float]:
        if config not in CONFIGS:
            raise ValueError(f"unknown configuration {config!r}")
        items = {
            "pv_modules": self.module_price_per_wp * self.pv_power_wp,
            "inverter_pv_a": self.inverter_pv_a,
            "inverter_pv_b": self.inverter_pv_b,
        }
        if config in ("hess", "lib_only"):
            items["lib"] = self.lib
            items["lib_inverter"] = self.lib_inverter
        if config in ("hess", "vrfb_only"):
            items["vrfb"] = self.vrfb
            items["vrfb_inverters"] = self.vrfb_inverter_count * self.vrfb_inverter
        items["cabling"] = self.cabling_hess if config == "hess" else self.cabling_single
        return items

    def annual_opex(self, config: Config) -> float:
        return 0.0 if config == "lib_only" else self.opex

    def replacement(self, config: Config) -> float:
        items = self.line_items(config)
        return items.get("lib", 0.0) + items.get("vrfb", 0.0)


def total_investment(cost: CostTable, config: Config) -> float:
    return sum(cost.line_items(config).values())


@dataclass(frozen=True)
class Rates:
    discount: float = 0.08
    inflation: float = 0.013
    energy_escalation: float = 0.016
    horizon: int = 15
    replacement_year: int = 15

    def __post_init__(self):
        if self.discount <= -1:
            raise ValueError("discount rate must exceed -1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1 year")
        if not 0 <= self.replacement_year <= self.horizon:
            raise ValueError("replacement year outside the horizon (0 disables replacement)")

    def for_horizon(self, years: int) -> "Rates":
        """Same rates over a shorter run; a replacement falling after it is dropped."""
        replacement = self.replacement_year if self.replacement_year <= years else 0
        return replace(self, horizon=years, replacement_year=replacement)


@dataclass(frozen=True)
class Bill:
    energy_cost: float
    fixed_cost: float
    export_revenue: float
    fallback: bool = False

    @property
    def import_cost(self) -> float:
        return self.energy_cost + self.fixed_cost


def _priced(energy_by_minute_of_day: np.ndarray, tariff: Tariff) -> float:
    return float(np.dot(energy_by_minute_of_day, tariff.price_by_minute())) / 1000.0


def annual_bill(
    ledger: EnergyLedger,
    tariff: Tariff,
    minute_import_trace: np.ndarray | None = None,
    price_factor: float = 1.0,
) -> Bill:
    """Grid bill for one year.

    Import is priced per minute of day when a trace (W per minute of the
    year) or the ledger's minute-of-day import profile is available.
    Otherwise the yearly total is priced at the time-weighted mean price and
    the bill is flagged as a fallback.
    """
    fallback = False
    if minute_import_trace is not None:
        trace = np.asarray(minute_import_trace, dtype=float)
        if trace.shape != (MINUTES_PER_YEAR,):
            raise ValueError(f"import trace must have {MINUTES_PER_YEAR} samples")
        by_mod = (trace / 60.0).reshape(-1, MINUTES_PER_DAY).sum(axis=0)
        energy = _priced(by_mod, tariff)
    elif ledger.import_by_minute_of_day is not None:
        energy = _priced(ledger.import_by_minute_of_day, tariff)
    else:
        warnings.warn("no minute-level import data; pricing at the mean daily tariff", stacklevel=2)
        fallback = True
        energy = float(tariff.price_by_minute().mean()) * ledger.import_wh / 1000.0
    return Bill(
        energy_cost=energy * price_factor,
        fixed_cost=365.0 * tariff.fixed_daily * price_factor,
        export_revenue=ledger.export_wh / 1000.0 * tariff.export_price * price_factor,
        fallback=fallback,
    )


def counterfactual_bill(ledger: EnergyLedger, tariff: Tariff, price_factor: float = 1.0) -> Bill:
    """Bill for the same building load with no PV and no storage."""
    if ledger.load_by_minute_of_day is not None:
        energy, fallback = _priced(ledger.load_by_minute_of_day, tariff), False
    else:
        fallback = True
        energy = float(tariff.price_by_minute().mean()) * ledger.load_wh / 1000.0
    return Bill(energy * price_factor, 365.0 * tariff.fixed_daily * price_factor, 0.0, fallback)


@dataclass(frozen=True)
class CashflowSchedule:
    investment: float  # EUR, positive number; year-0 flow is its negative
    savings: tuple[float, ...]  # years 1..H
    opex: tuple[float, ...]
    replacement: tuple[float, ...]
    delivered_kwh: tuple[float, ...]
    fallback: bool = False

    @property
    def flows(self) -> list[float]:
        yearly = [s - o - r for s, o, r in zip(self.savings, self.opex, self.replacement)]
        return [-self.investment] + yearly

    @property
    def costs(self) -> list[float]:
        """Life-cycle cost stream (year 0 = investment) used for TLCC."""
        return [self.investment] + [o + r for o, r in zip(self.opex, self.replacement)]


def build_cashflows(
    ledgers: Sequence[EnergyLedger],
    tariff: Tariff,
    cost: CostTable,
    rates: Rates,
    config: Config,
) -> CashflowSchedule:
    if len(ledgers) != rates.horizon:
        raise ValueError(f"expected {rates.horizon} yearly ledgers, got {len(ledgers)}")
    savings, opex, replacement, delivered = [], [], [], []
    fallback = False
    for year, ledger in enumerate(ledgers, start=1):
        escalation = (1.0 + rates.energy_escalation) ** (year - 1)
        actual = annual_bill(ledger, tariff, price_factor=escalation)
        baseline = counterfactual_bill(ledger, tariff, price_factor=escalation)
        fallback = fallback or actual.fallback or baseline.fallback
        savings.append(baseline.import_cost - actual.import_cost + actual.export_revenue)
        opex.append(cost.annual_opex(config) * (1.0 + rates.inflation) ** (year - 1))
        replacement.append(cost.replacement(config) if year == rates.replacement_year else 0.0)
        delivered.append(ledger.delivered_wh / 1000.0)
    return CashflowSchedule(
        investment=total_investment(cost, config),
        savings=tuple(savings),
        opex=tuple(opex),
        replacement=tuple(replacement),
        delivered_kwh=tuple(delivered),
        fallback=fallback,
    )


# -- calculators -------------------------------------------------------------


def npv(flows: Sequence[float], discount: float) -> float:
    """Net present value, ``flows[0]`` undiscounted at year 0."""
    if len(flows) == 0:
        raise ValueError("empty cashflow")
    return sum(f / (1.0 + discount) ** y for y, f in enumerate(flows))


def _bisect(values: list[float], lo: float, hi: float, f_lo: float, f_hi: float) -> tuple[float, float]:
    """Bisect until the bracket cannot be split in floating point."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = npv(values, mid)
        if f_mid == 0.0:
            return mid, 0.0
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)


def irr(flows: Sequence[float], lo: float = -0.99, hi: float = 10.0, tol: float = 1e-6) -> float:
    """Internal rate of return on ``(lo, hi]``.

    NPV is sampled on a grid over the interval and every sign change is
    bisected to floating-point exhaustion.  Flows with a late negative year
    (a pack replacement) can have two roots; the one closest to zero is
    returned.  Raises if no root is found or its |NPV| exceeds ``tol`` EUR.
    """
    values = [float(f) for f in flows]
    if not (any(v > 0 for v in values) and any(v < 0 for v in values)):
        raise NoSolutionError("cashflow has no sign change")
    grid = np.unique(np.concatenate([np.linspace(lo, 1.0, 400), np.geomspace(1.0, hi, 100)]))
    grid = [float(r) for r in grid if lo <= r <= hi]
    f_grid = [npv(values, r) for r in grid]
    roots = []
    for (a, fa), (b, fb) in zip(zip(grid, f_grid), zip(grid[1:], f_grid[1:])):
        if fa == 0.0 and a > lo:
            roots.append((a, 0.0))
        elif fa * fb < 0:
            roots.append(_bisect(values, a, b, fa, fb))
    if f_grid[-1] == 0.0:
        roots.append((grid[-1], 0.0))
    if not roots:
        raise NoSolutionError(f"NPV does not change sign on ({lo}, {hi}]")
    root, residual = min(roots, key=lambda r: abs(r[0]))
    if abs(residual) >= tol:
        raise NoSolutionError(f"bisection stalled with |NPV| = {abs(residual):.3g}")
    return root


def spb(flows: Sequence[float]) -> float:
    """Simple payback in years, interpolated within the year of recovery.

    ``math.inf`` when the cumulative flow never turns non-negative.
    """
    cumulative = flows[0]
    if cumulative >= 0:
        return 0.0
    for year, flow in enumerate(flows[1:], start=1):
        previous, cumulative = cumulative, cumulative + flow
        if cumulative >= 0:
            return (year - 1) + (-previous) / flow
    return math.inf


def lcoe(costs: Sequence[float], delivered_kwh: Sequence[float], discount: float) -> float:
    """Levelized cost, EUR/kWh.

    ``costs[0]`` is the investment and ``costs[y]`` the year-y O&M and
    replacement outlay; ``delivered_kwh[y-1]`` is the energy supplied to the
    load in year y.
    """
    tlcc = sum(c / (1.0 + discount) ** y for y, c in enumerate(costs))
    energy = sum(e / (1.0 + discount) ** y for y, e in enumerate(delivered_kwh, start=1))
    if energy <= 0:
        raise NoSolutionError("LCOE undefined: no energy delivered")
    return tlcc / energy


@dataclass
class EconomicReport:
    config: str
    investment: float
    flows: list[float]
    npv: float
    irr: float | None
    spb: float | None
    lcoe: float
    savings: list[float] = field(default_factory=list)
    fallback_pricing: bool = False
    formula_version: str = FORMULA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(schedule: CashflowSchedule, rates: Rates, config: Config) -> EconomicReport:
    flows = schedule.flows
    try:
        rate = irr(flows)
    except NoSolutionError:
        rate = None
    payback = spb(flows)
    return EconomicReport(
        config=config,
        investment=schedule.investment,
        flows=flows,
        npv=npv(flows, rates.discount),
        irr=rate,
        spb=None if math.isinf(payback) else payback,
        lcoe=lcoe(schedule.costs, schedule.delivered_kwh, rates.discount),
        savings=list(schedule.savings),
        fallback_pricing=schedule.fallback,
    )
