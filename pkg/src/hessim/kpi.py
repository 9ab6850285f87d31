"""Energy key-performance indicators.

Each indicator is evaluated per simulated year and reported as the mean of
the annual values.  Complementary pairs are built as ``1 - x`` from the same
quantity so that SCR + TGU and SSR + FGU are exactly one.

Definitions (E = annual energy, load includes inverter standby):

    TGU = E_export / E_pv                 SCR = 1 - TGU
    FGU = E_import / E_load               SSR = 1 - FGU
    GRF = 1 - (E_import + E_export) / (E_load + E_pv)
    FBU_k = E_discharge_k / E_load        TBU_k = E_charge_k / E_pv
    OBU_k = E_discharge_k / (365 * C_k)        equivalent full cycles per day
    EG  = E_import in kWh

``C_k`` is the nameplate capacity (``obu_basis="nominal"``, the default) or
the time-mean usable SOC window times effective capacity
(``obu_basis="usable"``).  With the usable basis a narrower SOC window
shrinks the denominator faster than the throughput, so narrowing a window
raises OBU; the nominal basis ranks narrow windows as lower battery use.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from statistics import fmean
from typing import Sequence

from .batteries import TECHS
from .dispatch import EnergyLedger

FORMULA_VERSION = "kpi-2"
OBU_BASES = ("nominal", "usable")


@dataclass(frozen=True)
class KpiReport:
    scr: float
    ssr: float
    grf: float
    fgu: float
    tgu: float
    obu: dict[str, float]
    fbu: dict[str, float]
    tbu: dict[str, float]
    eg: float  # kWh/year
    notes: tuple[str, ...] = field(default=())
    formula_version: str = FORMULA_VERSION

    def flat(self) -> dict[str, float]:
        row = {"scr": self.scr, "ssr": self.ssr, "grf": self.grf, "fgu": self.fgu, "tgu": self.tgu}
        for name in ("obu", "fbu", "tbu"):
            for tech in TECHS:
                row[f"{name}_{tech}"] = getattr(self, name)[tech]
        row["eg_kwh"] = self.eg
        return row

    def to_dict(self) -> dict:
        out = asdict(self)
        out["notes"] = list(self.notes)
        return out


def _mean(values: list[float]) -> float:
    # fmean of n identical floats is not always bit-identical to the float
    first = values[0]
    if all(v == first for v in values):
        return first
    return fmean(values)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def year_kpis(ledger: EnergyLedger, obu_basis: str = "nominal") -> tuple[dict[str, float], list[str]]:
    if obu_basis not in OBU_BASES:
        raise ValueError(f"obu_basis must be one of {OBU_BASES}")
    notes = []
    e_pv = ledger.pv_wh
    e_load = ledger.load_total_wh
    if e_pv <= 0:
        notes.append(f"year {ledger.year}: no PV generation, SCR/TGU/TBU set to 1/0/0")
    if e_load <= 0:
        notes.append(f"year {ledger.year}: no consumption, SSR/FGU/FBU set to 1/0/0")
    tgu = _ratio(ledger.export_wh, e_pv)
    fgu = _ratio(ledger.import_wh, e_load)
    denom = e_load + e_pv
    row = {
        "tgu": tgu,
        "scr": 1.0 - tgu,
        "fgu": fgu,
        "ssr": 1.0 - fgu,
        "grf": 1.0 - _ratio(ledger.import_wh + ledger.export_wh, denom),
        "eg": ledger.import_wh / 1000.0,
    }
    for tech in TECHS:
        row[f"fbu_{tech}"] = _ratio(ledger.discharge_wh(tech), e_load)
        row[f"tbu_{tech}"] = _ratio(ledger.charge_wh(tech), e_pv)
        capacity = ledger.nominal_wh(tech) if obu_basis == "nominal" else ledger.usable_wh(tech)
        row[f"obu_{tech}"] = _ratio(ledger.discharge_wh(tech), 365.0 * capacity)
    return row, notes


def compute_kpis(ledgers: Sequence[EnergyLedger], obu_basis: str = "nominal") -> KpiReport:
    if not ledgers:
        raise ValueError("compute_kpis needs at least one yearly ledger")
    rows, notes = [], []
    for ledger in ledgers:
        row, year_notes = year_kpis(ledger, obu_basis)
        rows.append(row)
        notes.extend(year_notes)
    mean = {key: _mean([r[key] for r in rows]) for key in rows[0]}
    return KpiReport(
        scr=1.0 - mean["tgu"],
        ssr=1.0 - mean["fgu"],
        grf=mean["grf"],
        fgu=mean["fgu"],
        tgu=mean["tgu"],
        obu={t: mean[f"obu_{t}"] for t in TECHS},
        fbu={t: mean[f"fbu_{t}"] for t in TECHS},
        tbu={t: mean[f"tbu_{t}"] for t in TECHS},
        eg=mean["eg"],
        notes=tuple(notes),
        formula_version=f"{FORMULA_VERSION}/obu-{obu_basis}",
    )
