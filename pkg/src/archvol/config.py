"""YAML run configuration.

Example::

    year_days: 260
    seed: 11
    horizons: [5, 10, 21, 63, 126, 252]
    processes:
      - {label: igarch1, preset: igarch1, tau: 16}
      - {label: igarch2, preset: igarch2, tau1: 4, tau2: 512, tau0: 1560}
      - {label: lm, preset: lm_arch, tau1: 4, tau_n: 512, rho: 1.41421356237, tau0: 1560}
      - {label: garch, preset: garch11, tau1: 16, w_inf: 0.1, sigma_inf_sq: 0.01}
      - label: raw
        components: [{tau: 4, weight: 0.5}, {tau: 64, weight: 0.4}]
        w_inf: 0.1
        sigma_inf_sq: 0.01
    inputs: {prices: prices.csv, implied: implied.csv, curve: curve.csv}

Section-specific keys live under ``weights``, ``forecast``, ``evaluate``,
``simulate`` and ``market``; see the README for the full list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .arch_process import (ProcessSpec, build_garch11, build_igarch1, build_igarch2,
                           build_lm_arch)
from .errors import ArchVolError, ConfigError
from .evaluate import DEFAULT_HORIZONS
from .market_model import MarketModelSpec
from .timeseries import YEAR_DAYS

_PRESETS = {
    "igarch1": (build_igarch1, ("tau",)),
    "igarch2": (build_igarch2, ("tau1", "tau2", "tau0")),
    "lm_arch": (build_lm_arch, ("tau1", "tau_n", "rho", "tau0")),
    "garch11": (build_garch11, ("tau1", "w_inf", "sigma_inf_sq")),
}


def _number(value, where: str) -> float:
    if isinstance(value, str):
        # allow "sqrt(2)" style entries for rho
        if value.startswith("sqrt(") and value.endswith(")"):
            return math.sqrt(_number(value[5:-1], where))
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def build_process(entry: dict, where: str) -> ProcessSpec:
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a mapping")
    label = str(entry.get("label") or entry.get("preset") or "")
    if not label:
        raise ConfigError(f"{where}.label: missing")
    try:
        if "preset" in entry:
            name = entry["preset"]
            if name not in _PRESETS:
                raise ConfigError(f"{where}.preset: unknown preset {name!r}")
            fn, keys = _PRESETS[name]
            missing = [k for k in keys if k not in entry]
            if missing:
                raise ConfigError(f"{where}.{missing[0]}: missing")
            args = [_number(entry[k], f"{where}.{k}") for k in keys]
            return fn(*args, label=label)
        comps = entry.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{where}: needs 'preset' or a non-empty 'components' list")
        taus = [_number(c.get("tau"), f"{where}.components[{i}].tau") for i, c in enumerate(comps)]
        ws = [_number(c.get("weight"), f"{where}.components[{i}].weight")
              for i, c in enumerate(comps)]
        w_inf = _number(entry.get("w_inf", 0.0), f"{where}.w_inf")
        s_inf = entry.get("sigma_inf_sq")
        s_inf = None if s_inf is None else _number(s_inf, f"{where}.sigma_inf_sq")
        return ProcessSpec.from_components(taus, ws, w_inf, s_inf, label)
    except ConfigError:
        raise
    except ArchVolError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class RunConfig:
    year_days: float = YEAR_DAYS
    seed: int = 0
    horizons: list[int] = field(default_factory=lambda: list(DEFAULT_HORIZONS))
    processes: list[ProcessSpec] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    out_dir: Path = Path("out")
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name) or {}

    def market_model(self) -> MarketModelSpec:
        m = self.section("market")
        where = "market"
        try:
            n = int(m.get("n_factors", 2))
            tau = m.get("tau", [4, 64] if n == 2 else [16])
            return MarketModelSpec(
                n, tuple(_number(t, f"{where}.tau") for t in tau),
                _number(m.get("v_inf", 0.01), f"{where}.v_inf"),
                tuple(_number(x, f"{where}.w") for x in m.get("w", ())),
                _number(m.get("beta", 0.5), f"{where}.beta"),
                _number(m.get("gamma", 0.0), f"{where}.gamma"))
        except ConfigError:
            raise
        except (ArchVolError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from None


def parse_config(raw: dict | None) -> RunConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    cfg = RunConfig()
    if "year_days" in raw:
        cfg.year_days = _number(raw["year_days"], "year_days")
        if cfg.year_days <= 0:
            raise ConfigError("year_days: must be positive")
    if "seed" in raw:
        cfg.seed = int(_number(raw["seed"], "seed"))
    if "horizons" in raw:
        hs = raw["horizons"]
        if not isinstance(hs, list) or not hs:
            raise ConfigError("horizons: expected a non-empty list")
        cfg.horizons = []
        for i, h in enumerate(hs):
            if isinstance(h, bool) or not isinstance(h, int) or h < 1:
                raise ConfigError(f"horizons[{i}]: expected a positive integer")
            cfg.horizons.append(h)
        cfg.horizons = sorted(set(cfg.horizons))
    procs = raw.get("processes", [])
    if not isinstance(procs, list):
        raise ConfigError("processes: expected a list")
    cfg.processes = [build_process(p, f"processes[{i}]") for i, p in enumerate(procs)]
    labels = [p.label for p in cfg.processes]
    dup = {l for l in labels if labels.count(l) > 1}
    if dup:
        raise ConfigError(f"processes: duplicate label {sorted(dup)[0]!r}")
    cfg.inputs = dict(raw.get("inputs") or {})
    if "out_dir" in raw:
        cfg.out_dir = Path(raw["out_dir"])
    cfg.sections = {k: raw[k] for k in ("weights", "forecast", "evaluate", "simulate", "market")
                    if k in raw}
    for k, v in cfg.sections.items():
        if v is not None and not isinstance(v, dict):
            raise ConfigError(f"{k}: expected a mapping")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc.__class__.__name__})") from None
    cfg = parse_config(raw)
    base = path.parent
    cfg.inputs = {k: str(base / v) for k, v in cfg.inputs.items()}
    if "out_dir" in (raw or {}):
        cfg.out_dir = base / cfg.out_dir
    return cfg
