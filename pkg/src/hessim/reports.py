"""CSV/JSON writers for ledgers, KPIs, economics and sweeps.

All files are UTF-8.  Floats are written with ``repr`` so that identical
runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dispatch import TRACE_FIELDS, EnergyLedger

LEDGER_COLUMNS = (
    "year", "pv_wh", "load_wh", "import_wh", "export_wh",
    "vrfb_charge_wh", "vrfb_discharge_wh", "lib_charge_wh", "lib_discharge_wh",
    "standby_wh", "loss_wh",
)
LEDGER_EXTRA = (
    "pv_to_load_wh", "vrfb_loss_wh", "lib_loss_wh", "vrfb_usable_wh", "lib_usable_wh",
    "vrfb_soc_end", "lib_soc_end", "lib_q_end",
)
SWEEP_COLUMNS = (
    "use_case", "vrfb_min", "vrfb_max", "lib_min", "lib_max",
    "scr", "lcoe", "obu_vrfb", "obu_lib", "npv",
)


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Path, payload) -> None:
    text = json.dumps(_plain(payload), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def ledger_rows(ledgers: Sequence[EnergyLedger]) -> list[dict]:
    rows = []
    for ledger in ledgers:
        row = ledger.scalars()
        row["loss_wh"] = ledger.loss_wh
        rows.append(row)
    return rows


def write_ledger_csv(path: Path, ledgers: Sequence[EnergyLedger]) -> None:
    write_rows(path, LEDGER_COLUMNS + LEDGER_EXTRA, ledger_rows(ledgers))


def append_trace_csv(path: Path, year: int, trace: np.ndarray, header: bool) -> None:
    minutes = np.arange(trace.shape[1])
    with open(path, "a", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(",".join(("year", "minute") + TRACE_FIELDS) + "\n")
        block = np.column_stack([np.full(minutes.size, year), minutes, trace.T])
        np.savetxt(fh, block, delimiter=",", fmt=["%d", "%d"] + ["%.9g"] * len(TRACE_FIELDS))


KPI_COLUMNS = (
    "scenario", "scr", "ssr", "grf", "fgu", "tgu",
    "obu_vrfb", "obu_lib", "fbu_vrfb", "fbu_lib", "tbu_vrfb", "tbu_lib", "eg_kwh", "formula_version",
)
ECON_ROWS = ("investment", "npv", "lcoe", "irr", "spb")


def kpi_csv(path: Path, payload: dict) -> None:
    rows = []
    for scenario, report in payload["scenarios"].items():
        row = {"scenario": scenario, "formula_version": report["formula_version"]}
        for key in ("scr", "ssr", "grf", "fgu", "tgu"):
            row[key] = report[key]
        for name in ("obu", "fbu", "tbu"):
            for tech, value in report[name].items():
                row[f"{name}_{tech}"] = value
        row["eg_kwh"] = report["eg"]
        rows.append(row)
    write_rows(path, KPI_COLUMNS, rows)


def economics_csv(path: Path, payload: dict) -> None:
    """Parameters as rows, scenarios as columns (the layout of a results table)."""
    scenarios = list(payload["scenarios"])
    rows = []
    for key in ECON_ROWS:
        row = {"parameter": key}
        for s in scenarios:
            row[s] = payload["scenarios"][s][key]
        rows.append(row)
    write_rows(path, ("parameter", *scenarios), rows)


def sweep_csv(path: Path, rows: Sequence[Mapping]) -> None:
    write_rows(path, SWEEP_COLUMNS, rows)


def render_json_to_csv(json_path: Path, csv_path: Path) -> None:
    """Re-render a kpi/economics/sweep JSON report as its CSV mirror."""
    payload = json.loads(Path(json_path).read_text(encoding="utf-8"))
    kind = payload.get("kind")
    if kind == "kpi":
        kpi_csv(csv_path, payload)
    elif kind == "economics":
        economics_csv(csv_path, payload)
    elif kind == "sweep":
        rows = [r for uc in payload["use_cases"].values() for r in uc["rows"]]
        sweep_csv(csv_path, rows)
    else:
        raise ValueError(f"{json_path}: unknown report kind {kind!r}")
