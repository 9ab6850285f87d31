"""Seasonal SOC-window sweep (scenario 4) and KPI-priority ranking.

Every admissible pair of VRFB and LIB SOC windows from the grid below is
simulated over the full horizon with the fixed-split allocation.  A window
is admissible when its depth of discharge is at least 40 points.  Use cases
decide in which season the swept windows apply; in the other season both
batteries run on their full default window.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Literal, Mapping, Sequence

from .batteries import AgingParams, BatterySpec
from .dispatch import ScenarioPolicy, default_specs, simulate_horizon
from .economics import (
    CostTable,
    EconomicReport,
    Rates,
    Tariff,
    build_cashflows,
    config_for_scenario,
    evaluate,
)
from .kpi import KpiReport, compute_kpis
from .profiles import MinuteSeries, ScalingPolicy

SOC_GRID = {
    "lib": ((10, 20, 30, 40), (50, 60, 70, 80, 90)),
    "vrfb": ((5, 15, 25, 35, 45), (55, 65, 75, 85, 95)),
}
FULL_RANGE = {"vrfb": (5, 95), "lib": (10, 90)}
MIN_DOD = 40

UseCase = Literal["uc1_all_year_variable", "uc2_winter_variable_summer_fixed", "uc3_winter_fixed_summer_variable"]
USE_CASES: tuple[str, ...] = (
    "uc1_all_year_variable",
    "uc2_winter_variable_summer_fixed",
    "uc3_winter_fixed_summer_variable",
)
_VARIABLE_SEASONS = {
    "uc1_all_year_variable": ("winter", "summer"),
    "uc2_winter_variable_summer_fixed": ("winter",),
    "uc3_winter_fixed_summer_variable": ("summer",),
}


@dataclass(frozen=True)
class SocRange:
    tech: str
    soc_min: int  # percent
    soc_max: int

    def __post_init__(self):
        mins, maxs = SOC_GRID[self.tech]
        if self.soc_min not in mins or self.soc_max not in maxs:
            raise ValueError(f"{self.tech} range [{self.soc_min}, {self.soc_max}] is not on the sweep grid")
        if self.dod < MIN_DOD:
            raise ValueError(f"{self.tech} range [{self.soc_min}, {self.soc_max}] has DOD < {MIN_DOD}")

    @property
    def dod(self) -> int:
        return self.soc_max - self.soc_min

    @property
    def fraction(self) -> tuple[float, float]:
        return self.soc_min / 100.0, self.soc_max / 100.0

    def __str__(self) -> str:
        return f"[{self.soc_min}, {self.soc_max}]"


def admissible_ranges(tech: str) -> list[SocRange]:
    mins, maxs = SOC_GRID[tech]
    return [SocRange(tech, lo, hi) for lo, hi in product(mins, maxs) if hi - lo >= MIN_DOD]


@dataclass(frozen=True)
class SweepCase:
    index: int
    use_case: str
    vrfb_range: SocRange
    lib_range: SocRange

    def policy(self, base: str = "s1_fixed_split") -> ScenarioPolicy:
        variable = _VARIABLE_SEASONS[self.use_case]
        ranges = {}
        for tech, swept in (("vrfb", self.vrfb_range), ("lib", self.lib_range)):
            full = tuple(v / 100.0 for v in FULL_RANGE[tech])
            ranges[tech] = {s: (swept.fraction if s in variable else full) for s in ("winter", "summer")}
        scenario = "s4_soc_sweep_case" if base == "s1_fixed_split" else base
        return ScenarioPolicy(id=scenario, soc_ranges=ranges)

    @property
    def label(self) -> str:
        return f"VRFB {self.vrfb_range}; LIB {self.lib_range}"


def enumerate_cases(use_case: str) -> list[SweepCase]:
    if use_case not in USE_CASES:
        raise ValueError(f"unknown use case {use_case!r}; expected one of {USE_CASES}")
    pairs = product(admissible_ranges("vrfb"), admissible_ranges("lib"))
    return [SweepCase(i, use_case, v, l) for i, (v, l) in enumerate(pairs)]


@dataclass(frozen=True)
class SweepInputs:
    pv: MinuteSeries
    load: MinuteSeries
    specs: Mapping[str, BatterySpec] = field(default_factory=default_specs)
    scaling: ScalingPolicy = field(default_factory=ScalingPolicy)
    aging: AgingParams = field(default_factory=AgingParams)
    tariff: Tariff = field(default_factory=Tariff)
    cost: CostTable = field(default_factory=CostTable)
    rates: Rates = field(default_factory=Rates)
    years: int = 15
    obu_basis: str = "nominal"

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.pv.values.tobytes())
        h.update(self.load.values.tobytes())
        h.update(repr((sorted(self.specs.items()), self.scaling, self.aging, self.tariff,
                       self.cost, self.rates, self.years, self.obu_basis)).encode())
        return h.hexdigest()[:16]


@dataclass
class SweepResult:
    case: SweepCase
    kpis: KpiReport
    economics: EconomicReport

    @property
    def scr(self) -> float:
        return self.kpis.scr

    @property
    def lcoe(self) -> float:
        return self.economics.lcoe

    @property
    def npv(self) -> float:
        return self.economics.npv

    @property
    def obu(self) -> dict[str, float]:
        return self.kpis.obu

    def metric(self, name: str) -> float:
        if name == "obu_total":
            return self.obu["vrfb"] + self.obu["lib"]
        if name.startswith("obu_"):
            return self.obu[name[4:]]
        return getattr(self, name)

    def row(self) -> dict:
        c = self.case
        return {
            "use_case": c.use_case,
            "vrfb_min": c.vrfb_range.soc_min,
            "vrfb_max": c.vrfb_range.soc_max,
            "lib_min": c.lib_range.soc_min,
            "lib_max": c.lib_range.soc_max,
            "scr": self.scr,
            "lcoe": self.lcoe,
            "obu_vrfb": self.obu["vrfb"],
            "obu_lib": self.obu["lib"],
            "npv": self.npv,
        }

    def to_dict(self) -> dict:
        return {
            "index": self.case.index,
            "use_case": self.case.use_case,
            "vrfb_range": [self.case.vrfb_range.soc_min, self.case.vrfb_range.soc_max],
            "lib_range": [self.case.lib_range.soc_min, self.case.lib_range.soc_max],
            "kpis": self.kpis.to_dict(),
            "economics": self.economics.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepResult":
        case = SweepCase(
            data["index"], data["use_case"],
            SocRange("vrfb", *data["vrfb_range"]), SocRange("lib", *data["lib_range"]),
        )
        kpis = dict(data["kpis"])
        kpis["notes"] = tuple(kpis.get("notes", ()))
        return cls(case, KpiReport(**kpis), EconomicReport(**data["economics"]))


def run_case(case: SweepCase, inputs: SweepInputs, base: str = "s1_fixed_split") -> SweepResult:
    policy = case.policy(base)
    ledgers, _ = simulate_horizon(policy, inputs.specs, (inputs.pv, inputs.load),
                                  inputs.scaling, inputs.years, inputs.aging)
    config = config_for_scenario(policy.id)
    rates = inputs.rates.for_horizon(inputs.years)
    schedule = build_cashflows(ledgers, inputs.tariff, inputs.cost, rates, config)
    return SweepResult(case, compute_kpis(ledgers, inputs.obu_basis), evaluate(schedule, rates, config))


_WORKER_INPUTS: SweepInputs | None = None


def _init_worker(inputs: SweepInputs) -> None:
    global _WORKER_INPUTS
    _WORKER_INPUTS = inputs


def _run_in_worker(args) -> SweepResult:
    case, base = args
    return run_case(case, _WORKER_INPUTS, base)


def _load_store(store: Path, fingerprint: str, use_case: str) -> dict[int, SweepResult]:
    done = {}
    if not store.exists():
        return done
    for line in store.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("fingerprint") == fingerprint and record["result"]["use_case"] == use_case:
            result = SweepResult.from_dict(record["result"])
            done[result.case.index] = result
    return done


def run_sweep(
    use_case: str,
    inputs: SweepInputs,
    scenario: str = "s1_fixed_split",
    workers: int = 1,
    store: str | Path | None = None,
    cases: Sequence[SweepCase] | None = None,
) -> list[SweepResult]:
    """Simulate every case of ``use_case``; results are ordered by case index.

    With ``store`` set, each finished case is appended to that JSON-lines
    file and cases already present (same inputs fingerprint) are skipped, so
    an interrupted sweep resumes where it stopped.
    """
    if scenario not in ("s1_fixed_split", "s2_psoc_split", "s3_band_split"):
        raise ValueError(f"sweep base scenario must be a HESS split, got {scenario!r}")
    todo = list(cases) if cases is not None else enumerate_cases(use_case)
    fingerprint = inputs.fingerprint()
    results: dict[int, SweepResult] = {}
    sink = None
    if store is not None:
        store = Path(store)
        store.parent.mkdir(parents=True, exist_ok=True)
        results = _load_store(store, fingerprint, use_case)
        sink = store.open("a", encoding="utf-8")
    pending = [c for c in todo if c.index not in results]

    def keep(result: SweepResult) -> None:
        results[result.case.index] = result
        if sink is not None:
            sink.write(json.dumps({"fingerprint": fingerprint, "result": result.to_dict()}) + "\n")
            sink.flush()

    try:
        if workers <= 1 or len(pending) <= 1:
            for case in pending:
                keep(run_case(case, inputs, scenario))
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                     initargs=(inputs,)) as pool:
                for result in pool.map(_run_in_worker, [(c, scenario) for c in pending]):
                    keep(result)
    finally:
        if sink is not None:
            sink.close()
    wanted = {c.index for c in todo}
    return [results[i] for i in sorted(results) if i in wanted]


# -- ranking -----------------------------------------------------------------

SECONDARY_KPIS = ("obu_lib", "obu_vrfb", "obu_total", "lcoe")
SCR_TIE = 1e-4


def rank(results: Sequence[SweepResult], secondary: str = "obu_lib", scr_tol: float = SCR_TIE) -> list[SweepResult]:
    """Order by SCR (descending); cases within ``scr_tol`` of a group's best
    SCR are ordered by the secondary KPI (ascending).  Stable."""
    if not results:
        raise ValueError("nothing to rank")
    if secondary not in SECONDARY_KPIS:
        raise ValueError(f"secondary KPI must be one of {SECONDARY_KPIS}")
    by_scr = sorted(results, key=lambda r: -r.scr)
    ranked, i = [], 0
    while i < len(by_scr):
        leader = by_scr[i].scr
        j = i
        while j < len(by_scr) and leader - by_scr[j].scr <= scr_tol:
            j += 1
        ranked.extend(sorted(by_scr[i:j], key=lambda r: r.metric(secondary)))
        i = j
    return ranked


def best_per_kpi(results: Sequence[SweepResult], tol: float = SCR_TIE) -> dict[str, dict]:
    """Best value of each KPI and every case that attains it (within ``tol``)."""
    if not results:
        raise ValueError("nothing to rank")
    summary = {}
    for name, maximize in (("scr", True), ("lcoe", False), ("obu_vrfb", False), ("obu_lib", False)):
        values = [r.metric(name) for r in results]
        best = max(values) if maximize else min(values)
        winners = [r for r, v in zip(results, values) if abs(v - best) <= tol]
        summary[name] = {
            "best": best,
            "cases": [
                {"vrfb": [w.case.vrfb_range.soc_min, w.case.vrfb_range.soc_max],
                 "lib": [w.case.lib_range.soc_min, w.case.lib_range.soc_max]}
                for w in winners
            ],
        }
    return summary
