"""Run configuration: a JSON file layered over built-in defaults.

Schema (every key optional; omitted keys take the defaults shown by
``hessim validate --show``)::

    {
      "profiles":  {"pv": path|null, "load": path|null,
                    "pv_native_step": s, "load_native_step": s},
      "scenarios": ["s1_fixed_split", ...],
      "years": 15,
      "batteries": {"vrfb": {BatterySpec field: value}, "lib": {...}},
      "policy":    {"alpha", "beta", "band_w", "beta_curve": {...}, "soc_ranges": {...}},
      "scaling":   {"pv_degradation_rate", "load_growth_rate"},
      "aging":     {"a", "b", "c", "t_ref", "ambient_t", "q0"},
      "tariff":    {Tariff fields}, "costs": {CostTable fields}, "rates": {Rates fields},
      "kpi":       {"obu_basis": "nominal" | "usable"},
      "sweep":     {"use_cases": [...], "scenario": "s1_fixed_split", "secondary": "obu_lib"},
      "output_dir": "out", "workers": 1, "trace": false
    }

Null profile paths select the bundled synthetic sample year.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .batteries import AgingParams, BatterySpec, default_spec
from .dispatch import SCENARIOS, BetaCurve, ScenarioPolicy
from .economics import CostTable, Rates, Tariff
from .kpi import OBU_BASES
from .profiles import MinuteSeries, ScalingPolicy, load_profile, synthetic_year
from .sweep import SECONDARY_KPIS, USE_CASES

ALIASES = {
    "s1": "s1_fixed_split",
    "s2": "s2_psoc_split",
    "s3": "s3_band_split",
    "s4": "s4_soc_sweep_case",
    "s5_vrfb": "s5_single_vrfb",
    "s5_lib": "s5_single_lib",
    "uc1": "uc1_all_year_variable",
    "uc2": "uc2_winter_variable_summer_fixed",
    "uc3": "uc3_winter_fixed_summer_variable",
}

DEFAULTS: dict[str, Any] = {
    "profiles": {"pv": None, "load": None, "pv_native_step": 60, "load_native_step": 900},
    "scenarios": ["s1_fixed_split"],
    "years": 15,
    "batteries": {"vrfb": {}, "lib": {}},
    "policy": {},
    "scaling": {},
    "aging": {},
    "tariff": {},
    "costs": {},
    "rates": {},
    "kpi": {"obu_basis": "nominal"},
    "sweep": {"use_cases": ["uc1_all_year_variable"], "scenario": "s1_fixed_split", "secondary": "obu_lib"},
    "output_dir": "out",
    "workers": 1,
    "trace": False,
}


class ConfigError(ValueError):
    pass


def canonical(name: str) -> str:
    return ALIASES.get(name, name)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None) -> "RunConfig":
        raw = copy.deepcopy(DEFAULTS)
        base_dir = Path.cwd()
        if path is not None:
            path = Path(path)
            try:
                user = json.loads(path.read_text(encoding="utf-8"))
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
            if not isinstance(user, dict):
                raise ConfigError(f"{path}: top level must be an object")
            raw = _merge(raw, user)
            base_dir = path.parent
        if overrides:
            raw = _merge(raw, overrides)
        return cls(raw=raw, base_dir=base_dir)

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- builders (raise on bad values; validate() turns these into diagnostics)

    def _path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def scenarios(self) -> list[str]:
        return [canonical(s) for s in self.raw["scenarios"]]

    def specs(self) -> dict[str, BatterySpec]:
        return {tech: default_spec(tech, **self.raw["batteries"].get(tech, {})) for tech in ("vrfb", "lib")}

    def policy(self, scenario: str) -> ScenarioPolicy:
        opts = dict(self.raw["policy"])
        curve = opts.pop("beta_curve", None)
        if curve is not None:
            opts["beta_curve"] = BetaCurve(**{k: tuple(v) for k, v in curve.items()})
        ranges = opts.pop("soc_ranges", None)
        if ranges is not None:
            opts["soc_ranges"] = {t: {s: tuple(r) for s, r in seasons.items()} for t, seasons in ranges.items()}
        return ScenarioPolicy(id=canonical(scenario), **opts)

    def scaling(self) -> ScalingPolicy:
        return ScalingPolicy(**self.raw["scaling"])

    def aging(self) -> AgingParams:
        return AgingParams(**self.raw["aging"])

    def tariff(self) -> Tariff:
        return Tariff(**self.raw["tariff"])

    def costs(self) -> CostTable:
        return CostTable(**self.raw["costs"])

    def rates(self) -> Rates:
        return Rates(**self.raw["rates"])

    def profiles(self) -> tuple[MinuteSeries, MinuteSeries]:
        prof = self.raw["profiles"]
        pv = (load_profile(self._path(prof["pv"]), "pv", prof["pv_native_step"])
              if prof["pv"] else synthetic_year("pv"))
        load = (load_profile(self._path(prof["load"]), "load", prof["load_native_step"])
                if prof["load"] else synthetic_year("load"))
        return pv, load


def _check_fields(section: str, values: dict, reference, diagnostics: list[str]) -> None:
    """Flag unknown keys and values whose type differs from ``reference``'s."""
    known = {f.name for f in dataclasses.fields(reference)}
    for key, value in values.items():
        if key not in known:
            diagnostics.append(f"{section}.{key}: unknown field")
            continue
        default = getattr(reference, key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                diagnostics.append(f"{section}.{key}: expected true/false, got {value!r}")
        elif isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                diagnostics.append(f"{section}.{key}: expected a number, got {value!r}")
        elif isinstance(default, str) and not isinstance(value, str):
            diagnostics.append(f"{section}.{key}: expected a string, got {value!r}")


def validate(config: RunConfig) -> list[str]:
    """Dry-run check of the configuration.  Returns ``field.path: message`` strings."""
    diags: list[str] = []
    raw = config.raw
    for key in raw:
        if key not in DEFAULTS:
            diags.append(f"{key}: unknown top-level key")

    for kind in ("pv", "load"):
        value = raw["profiles"].get(kind)
        if value is not None and not config._path(value).is_file():
            diags.append(f"profiles.{kind}: file not found: {config._path(value)}")
    for scenario in raw["scenarios"]:
        if canonical(scenario) not in SCENARIOS:
            diags.append(f"scenarios: unknown scenario {scenario!r}")
    years = raw["years"]
    if not isinstance(years, int) or isinstance(years, bool) or not 1 <= years <= 15:
        diags.append(f"years: must be an integer in [1, 15], got {years!r}")
    workers = raw["workers"]
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        diags.append(f"workers: must be a positive integer, got {workers!r}")

    for tech in raw["batteries"]:
        if tech not in ("vrfb", "lib"):
            diags.append(f"batteries.{tech}: unknown technology")
            continue
        before = len(diags)
        _check_fields(f"batteries.{tech}", raw["batteries"][tech], default_spec(tech), diags)
        if len(diags) == before:
            ref = default_spec(tech)
            lo = raw["batteries"][tech].get("soc_min", ref.soc_min)
            hi = raw["batteries"][tech].get("soc_max", ref.soc_max)
            if lo >= hi:
                diags.append(f"batteries.{tech}.soc_min: {lo} is not below soc_max {hi}")
                continue
            try:
                default_spec(tech, **raw["batteries"][tech])
            except (TypeError, ValueError) as exc:
                diags.append(f"batteries.{tech}: {exc}")

    for section, reference, build in (
        ("scaling", ScalingPolicy(), config.scaling),
        ("aging", AgingParams(), config.aging),
        ("tariff", Tariff(), config.tariff),
        ("costs", CostTable(), config.costs),
        ("rates", Rates(), config.rates),
    ):
        before = len(diags)
        _check_fields(section, raw[section], reference, diags)
        if len(diags) == before:
            try:
                build()
            except (TypeError, ValueError) as exc:
                diags.append(f"{section}: {exc}")

    policy_raw = {k: v for k, v in raw["policy"].items() if k not in ("beta_curve", "soc_ranges")}
    before = len(diags)
    _check_fields("policy", policy_raw, ScenarioPolicy(), diags)
    if len(diags) == before:
        try:
            config.policy("s1_fixed_split")
        except (TypeError, ValueError) as exc:
            diags.append(f"policy: {exc}")

    if raw["kpi"].get("obu_basis") not in OBU_BASES:
        diags.append(f"kpi.obu_basis: must be one of {OBU_BASES}")
    sweep = raw["sweep"]
    for uc in sweep.get("use_cases", []):
        if canonical(uc) not in USE_CASES:
            diags.append(f"sweep.use_cases: unknown use case {uc!r}")
    if canonical(sweep.get("scenario", "")) not in ("s1_fixed_split", "s2_psoc_split", "s3_band_split"):
        diags.append("sweep.scenario: must be s1_fixed_split, s2_psoc_split or s3_band_split")
    if sweep.get("secondary") not in SECONDARY_KPIS:
        diags.append(f"sweep.secondary: must be one of {SECONDARY_KPIS}")
    return diags
