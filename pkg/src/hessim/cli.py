"""Command-line entry point: ``hessim {run,sweep,validate,report}``.

Output directory precedence: ``--out``, then ``$HESSIM_OUT_DIR``, then the
config's ``output_dir``.  Every failure prints exactly one line

    hessim: error: <kind>: <message>

on stderr, with exit status 2 for configuration problems and 1 for
failures during simulation or report writing.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numba
import numpy as np
import pandas as pd

from . import __version__, economics, kpi
from .config import ConfigError, RunConfig, canonical, validate
from .dispatch import ConfigurationError, simulate_horizon
from .economics import build_cashflows, config_for_scenario, evaluate
from .kpi import compute_kpis
from .profiles import ProfileError
from .reports import (
    append_trace_csv,
    economics_csv,
    kpi_csv,
    render_json_to_csv,
    sweep_csv,
    write_json,
    write_ledger_csv,
)
from .sweep import SweepInputs, best_per_kpi, enumerate_cases, rank, run_sweep

OUT_ENV = "HESSIM_OUT_DIR"
EXIT_CONFIG = 2
EXIT_SIMULATION = 1


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse prints usage plus a message; keep the error to one line
    def error(self, message):
        raise CliError("usage", message, EXIT_CONFIG)


def _config_error(exc: Exception) -> CliError:
    return CliError("config", " ".join(str(exc).split()), EXIT_CONFIG)


def _load_config(args, overrides: dict) -> RunConfig:
    try:
        config = RunConfig.load(args.config, overrides)
    except ConfigError as exc:
        raise _config_error(exc) from exc
    diags = validate(config)
    if diags:
        more = f" (+{len(diags) - 1} more)" if len(diags) > 1 else ""
        raise CliError("config", diags[0] + more, EXIT_CONFIG)
    return config


def _out_dir(args, config: RunConfig) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or config.raw["output_dir"]
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, config: RunConfig, command: str, files: list[Path], started: float) -> None:
    manifest = {
        "command": command,
        "config_sha256": config.digest(),
        "config": config.raw,
        "formula_versions": {"kpi": kpi.FORMULA_VERSION, "economics": economics.FORMULA_VERSION},
        "versions": {
            "hessim": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "numba": numba.__version__,
            "pandas": pd.__version__,
        },
        "outputs": {p.name: _sha256(p) for p in sorted(files)},
        # the only non-reproducible field
        "timestamp": {
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "wall_time_s": round(time.perf_counter() - started, 3),
        },
    }
    write_json(out / "manifest.json", manifest)


# -- run ---------------------------------------------------------------------


def simulate_scenario(config: RunConfig, scenario: str, trace_path: Path | None = None) -> dict:
    """Simulate one scenario and return ledgers, KPI report and economic report."""
    years = config.raw["years"]
    policy = config.policy(scenario)
    pv, load = config.profiles()

    on_year = None
    if trace_path is not None:
        trace_path.unlink(missing_ok=True)

        def on_year(year, ledger, trace):
            append_trace_csv(trace_path, year, trace, header=(year == 1))

    ledgers, _ = simulate_horizon(policy, config.specs(), (pv, load), config.scaling(), years,
                                  config.aging(), on_year=on_year, trace=trace_path is not None)
    econ_config = config_for_scenario(policy.id)
    rates = config.rates().for_horizon(years)
    schedule = build_cashflows(ledgers, config.tariff(), config.costs(), rates, econ_config)
    return {
        "scenario": policy.id,
        "ledgers": ledgers,
        "kpis": compute_kpis(ledgers, config.raw["kpi"]["obu_basis"]),
        "economics": evaluate(schedule, rates, econ_config),
    }


def _scenario_job(args):
    raw, base_dir, scenario, trace_path = args
    return simulate_scenario(RunConfig(raw=raw, base_dir=base_dir), scenario, trace_path)


def cmd_run(args) -> int:
    started = time.perf_counter()
    overrides = {}
    if args.scenario:
        overrides["scenarios"] = [canonical(s) for group in args.scenario for s in group.split(",")]
    if args.years is not None:
        overrides["years"] = args.years
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.trace:
        overrides["trace"] = True
    config = _load_config(args, overrides)
    out = _out_dir(args, config)
    scenarios = list(dict.fromkeys(config.scenarios()))
    try:
        config.profiles()
    except (ProfileError, OSError) as exc:
        raise CliError("profile", " ".join(str(exc).split()), EXIT_CONFIG) from exc

    jobs = [(config.raw, config.base_dir, s, out / f"trace_{s}.csv" if config.raw["trace"] else None)
            for s in scenarios]
    try:
        if config.raw["workers"] > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=config.raw["workers"]) as pool:
                results = list(pool.map(_scenario_job, jobs))
        else:
            results = [_scenario_job(job) for job in jobs]
    except (ConfigurationError, ConfigError) as exc:
        raise _config_error(exc) from exc
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise CliError("simulation", " ".join(str(exc).split()), EXIT_SIMULATION) from exc

    files = []
    for res in results:
        path = out / f"ledger_{res['scenario']}.csv"
        write_ledger_csv(path, res["ledgers"])
        files.append(path)
        if config.raw["trace"]:
            files.append(out / f"trace_{res['scenario']}.csv")
    kpi_payload = {"kind": "kpi", "formula_version": kpi.FORMULA_VERSION,
                   "scenarios": {r["scenario"]: r["kpis"].to_dict() for r in results}}
    econ_payload = {"kind": "economics", "formula_version": economics.FORMULA_VERSION,
                    "scenarios": {r["scenario"]: r["economics"].to_dict() for r in results}}
    for name, payload, to_csv in (("kpi", kpi_payload, kpi_csv), ("economics", econ_payload, economics_csv)):
        write_json(out / f"{name}.json", payload)
        to_csv(out / f"{name}.csv", payload)
        files += [out / f"{name}.json", out / f"{name}.csv"]
    _write_manifest(out, config, "run", files, started)
    for r in results:
        k, e = r["kpis"], r["economics"]
        print(f"{r['scenario']}: SCR={k.scr:.4f} SSR={k.ssr:.4f} NPV={e.npv:.0f} EUR LCOE={e.lcoe:.4f} EUR/kWh")
    print(f"reports written to {out}")
    return 0


# -- sweep -------------------------------------------------------------------


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    overrides: dict = {"sweep": {}}
    if args.use_case:
        overrides["sweep"]["use_cases"] = [canonical(u) for group in args.use_case for u in group.split(",")]
    if args.scenario:
        overrides["sweep"]["scenario"] = canonical(args.scenario)
    if args.years is not None:
        overrides["years"] = args.years
    if args.workers is not None:
        overrides["workers"] = args.workers
    config = _load_config(args, overrides)
    out = _out_dir(args, config)
    try:
        pv, load = config.profiles()
    except (ProfileError, OSError) as exc:
        raise CliError("profile", " ".join(str(exc).split()), EXIT_CONFIG) from exc
    sweep_cfg = config.raw["sweep"]
    inputs = SweepInputs(
        pv=pv, load=load, specs=config.specs(), scaling=config.scaling(), aging=config.aging(),
        tariff=config.tariff(), cost=config.costs(), rates=config.rates(),
        years=config.raw["years"], obu_basis=config.raw["kpi"]["obu_basis"],
    )
    rows, summary = [], {"kind": "sweep_ranking", "secondary": sweep_cfg["secondary"], "use_cases": {}}
    full = {"kind": "sweep", "use_cases": {}}
    for use_case in dict.fromkeys(canonical(u) for u in sweep_cfg["use_cases"]):
        cases = enumerate_cases(use_case)
        if args.limit is not None:
            cases = cases[: args.limit]
        try:
            results = run_sweep(use_case, inputs, canonical(sweep_cfg["scenario"]), config.raw["workers"],
                                store=out / "sweep_store.jsonl", cases=cases)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            raise CliError("simulation", " ".join(str(exc).split()), EXIT_SIMULATION) from exc
        uc_rows = [r.row() for r in results]
        rows += uc_rows
        ranked = rank(results, sweep_cfg["secondary"])
        summary["use_cases"][use_case] = {
            "cases": len(results),
            "best": best_per_kpi(results),
            "top": [r.row() for r in ranked[:10]],
        }
        full["use_cases"][use_case] = {"rows": uc_rows}
        print(f"{use_case}: {len(results)} cases, best SCR {ranked[0].scr:.4f} "
              f"at VRFB {ranked[0].case.vrfb_range} LIB {ranked[0].case.lib_range}")
    files = [out / "sweep.csv", out / "sweep.json", out / "sweep_ranking.json"]
    sweep_csv(files[0], rows)
    write_json(files[1], full)
    write_json(files[2], summary)
    _write_manifest(out, config, "sweep", files, started)
    print(f"reports written to {out}")
    return 0


# -- validate / report -------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        config = RunConfig.load(args.config)
    except ConfigError as exc:
        raise _config_error(exc) from exc
    if args.show:
        print(json.dumps(config.raw, indent=2, sort_keys=True))
    diags = validate(config)
    for line in diags:
        print(line)
    if diags:
        raise CliError("config", f"{len(diags)} problem(s) found", EXIT_CONFIG)
    print("config ok")
    return 0


def cmd_report(args) -> int:
    src = Path(args.json)
    dst = Path(args.out) if args.out else src.with_suffix(".csv")
    try:
        render_json_to_csv(src, dst)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError("report", " ".join(str(exc).split()), EXIT_SIMULATION) from exc
    print(dst)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hessim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hessim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON run configuration (defaults apply to omitted keys)")
        p.add_argument("--years", type=int, help="simulated years, 1-15")
        p.add_argument("--workers", type=int, help="parallel worker processes")
        p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV})")

    run = sub.add_parser("run", help="simulate scenarios and write ledgers, KPIs and economics")
    common(run)
    run.add_argument("--scenario", action="append",
                     help="scenario id or alias (s1, s2, s3, s5_vrfb, s5_lib); repeat or comma-separate")
    run.add_argument("--trace", action="store_true", help="also write the per-minute trace CSV")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="SOC-window sweep and KPI ranking")
    common(sweep)
    sweep.add_argument("--use-case", action="append", help="uc1, uc2, uc3 (repeatable)")
    sweep.add_argument("--scenario", help="allocation used inside the sweep (default s1)")
    sweep.add_argument("--limit", type=int, help="only the first N cases of each use case")
    sweep.set_defaults(func=cmd_sweep)

    val = sub.add_parser("validate", help="check a configuration without simulating")
    val.add_argument("--config")
    val.add_argument("--show", action="store_true", help="print the merged configuration")
    val.set_defaults(func=cmd_validate)

    rep = sub.add_parser("report", help="re-render a JSON report as CSV")
    rep.add_argument("json")
    rep.add_argument("--out", help="CSV path (default: next to the JSON)")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"hessim: error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except KeyboardInterrupt:
        print("hessim: error: interrupted: stopped by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
