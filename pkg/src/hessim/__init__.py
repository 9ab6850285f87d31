"""Minute-resolution PV + hybrid VRFB / Li-ion storage simulator."""
from .batteries import AgingParams, BatterySpec, BatteryState, default_spec, lib_spec, vrfb_spec
from .dispatch import SCENARIOS, EnergyLedger, ScenarioPolicy, default_specs, simulate_horizon
from .economics import CostTable, Rates, Tariff
from .kpi import KpiReport, compute_kpis
from .profiles import MinuteSeries, ScalingPolicy, load_profile, synthetic_year

__version__ = "0.1.0"

__all__ = [
    "AgingParams", "BatterySpec", "BatteryState", "CostTable", "EnergyLedger", "KpiReport",
    "MinuteSeries", "Rates", "SCENARIOS", "ScalingPolicy", "ScenarioPolicy", "Tariff",
    "compute_kpis", "default_spec", "default_specs", "lib_spec", "load_profile",
    "simulate_horizon", "synthetic_year", "vrfb_spec",
]
