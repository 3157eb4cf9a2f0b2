"""Command line front end: ``archvol {weights,forecast,simulate,evaluate,market-fit}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .arch_process import VolState, run_cascade
from .config import RunConfig, load_config, parse_config
from .errors import ArchVolError, ConfigError, DataError
from .evaluate import EvalConfig, rolling_evaluation, snapshot
from .forecast import forecast_weights, term_structure
from .market_model import ForwardCurveObs, fit_factors, simulate_market_model
from .simulate import InnovationDist, martingale_check, simulate_returns
from .timeseries import load_csv, log_returns

log = logging.getLogger("archvol")

FLOAT_FORMAT = "%.12g"


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    """Write via a temporary file in the target directory, then rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            df.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %s", path)
    return path


def _datestr(dates) -> np.ndarray:
    return np.datetime_as_string(np.asarray(dates, dtype="datetime64[D]"), unit="D")


def _require_processes(cfg: RunConfig):
    if not cfg.processes:
        raise ConfigError("processes: at least one process must be configured")
    return cfg.processes


def _input(cfg: RunConfig, key: str, required: bool = True):
    path = cfg.inputs.get(key)
    if path is None and required:
        raise ConfigError(f"inputs.{key}: missing (or pass --{key})")
    return path


def cmd_weights(cfg: RunConfig) -> list[Path]:
    max_h = int(cfg.section("weights").get("max_horizon", 512))
    if max_h < 1:
        raise ConfigError("weights.max_horizon: must be >= 1")
    rows, sums = [], []
    for spec in _require_processes(cfg):
        wt = forecast_weights(spec, max_h)
        horizon = np.arange(1, max_h + 1)
        comp = wt.component[:max_h]
        for k, tau in enumerate(spec.taus):
            rows.append(pd.DataFrame({"spec": spec.label, "horizon": horizon,
                                      "component_tau": tau, "weight": comp[:, k]}))
        sums.append(pd.DataFrame({"spec": spec.label, "horizon": horizon,
                                  "sum_weights": comp.sum(axis=1),
                                  "w_inf": wt.w_inf[:max_h]}))
    return [write_csv(pd.concat(rows, ignore_index=True), cfg.out_dir / "weights.csv"),
            write_csv(pd.concat(sums, ignore_index=True), cfg.out_dir / "weight_sums.csv")]


def cmd_forecast(cfg: RunConfig) -> list[Path]:
    prices = load_csv(_input(cfg, "prices"), "price")
    rets = log_returns(prices)
    sec = cfg.section("forecast")
    warmup = int(sec.get("warmup", 25))
    if len(rets) < warmup:
        raise DataError(f"need at least {warmup} returns for the warmup, got {len(rets)}")
    wanted = sec.get("dates")
    if wanted:
        idx = np.searchsorted(rets.dates, np.asarray(wanted, dtype="datetime64[D]"))
        bad = [d for d, i in zip(wanted, idx) if i >= len(rets) or rets.dates[i] != np.datetime64(d, "D")]
        if bad:
            raise DataError(f"forecast date {bad[0]} not in the price series")
        if np.any(idx < warmup - 1):
            raise DataError("forecast dates must fall after the warmup window")
    else:
        idx = np.array([len(rets) - 1])
    init = np.mean(rets.returns[:warmup] ** 2)
    frames = []
    for spec in _require_processes(cfg):
        states = run_cascade(spec, rets.returns, init)
        for i in idx:
            curve = term_structure(VolState(states[i], rets.dates[i]), spec, cfg.horizons,
                                   cfg.year_days)
            frames.append(pd.DataFrame({
                "date": _datestr(rets.dates[i]), "spec": spec.label,
                "horizon_days": curve.horizons, "forward_vol": curve.forward_volatility,
                "forecast_vol": curve.forecast_volatility}))
    return [write_csv(pd.concat(frames, ignore_index=True), cfg.out_dir / "term_structure.csv")]


def _dist(sec: dict) -> InnovationDist:
    d = sec.get("dist") or {}
    try:
        return InnovationDist(str(d.get("kind", "gaussian")), float(d.get("dof", 5.0)))
    except ValueError as exc:
        raise ConfigError(f"simulate.dist: {exc}") from None


def _kurtosis(x: np.ndarray) -> float:
    x = x - x.mean()
    m2 = np.mean(x ** 2)
    return float(np.mean(x ** 4) / m2 ** 2) if m2 > 0 else float("nan")


def cmd_simulate(cfg: RunConfig, dump_paths: bool = False) -> list[Path]:
    sec = cfg.section("simulate")
    n_steps = int(sec.get("n_steps", 2600))
    n_paths = int(sec.get("n_paths", 10))
    if n_steps < 1 or n_paths < 1:
        raise ConfigError("simulate.n_steps and simulate.n_paths must be >= 1")
    dist = _dist(sec)
    level = float(sec.get("initial_vol", 0.1)) ** 2 / cfg.year_days
    dump_paths = dump_paths or bool(sec.get("dump_paths", False))
    out = []
    summary, dumps = [], []
    for spec in _require_processes(cfg):
        for p in range(n_paths):
            # per-path substream (seed, spec index, path) keeps runs reproducible
            seed = int(np.random.SeedSequence([cfg.seed, cfg.processes.index(spec), p])
                       .generate_state(1)[0])
            path = simulate_returns(spec, dist, n_steps, seed, level=level,
                                    year_days=cfg.year_days)
            r = path.returns
            summary.append((spec.label, p, n_steps, float(np.sqrt(cfg.year_days * np.mean(r ** 2))),
                            _kurtosis(r),
                            float(np.sqrt(cfg.year_days * path.sigma_eff_sq.mean())),
                            float(path.sigma_k_sq.min())))
            if dump_paths:
                dumps.append(pd.DataFrame({"spec": spec.label, "path": p,
                                           "step": np.arange(1, n_steps + 1), "return": r,
                                           "sigma_eff_sq": path.sigma_eff_sq[:-1]}))
    out.append(write_csv(pd.DataFrame(summary, columns=[
        "spec", "path", "n_steps", "realized_vol", "kurtosis", "mean_effective_vol",
        "min_sigma_k_sq"]), cfg.out_dir / "simulation_summary.csv"))
    if dumps:
        out.append(write_csv(pd.concat(dumps, ignore_index=True), cfg.out_dir / "paths.csv"))

    mart = sec.get("martingale")
    if mart:
        rows = []
        for i, spec in enumerate(cfg.processes):
            rep = martingale_check(spec, np.full(spec.n_components, level),
                                   int(mart.get("t_prime", 10)), int(mart.get("T", 63)),
                                   int(mart.get("n_paths", 10000)), cfg.seed + i, dist,
                                   cfg.year_days)
            rows.append((spec.label, int(mart.get("t_prime", 10)), int(mart.get("T", 63)),
                         rep.n_paths, rep.mean, rep.se, rep.target, rep.z))
        out.append(write_csv(pd.DataFrame(rows, columns=[
            "spec", "t_prime", "T", "n_paths", "mean", "se", "target", "z"]),
            cfg.out_dir / "martingale.csv"))

    mm = sec.get("market_model")
    if mm:
        model = cfg.market_model()
        init = mm.get("initial", [model.v_inf] * model.n_factors)
        paths = simulate_market_model(model, init, int(mm.get("n_steps", 260)),
                                      seed=cfg.seed, n_paths=int(mm.get("n_paths", 10)),
                                      year_days=cfg.year_days)
        cols = {"path": np.arange(paths.shape[0])}
        for k in range(model.n_factors):
            cols[f"mean_v{k + 1}"] = paths[:, :, k].mean(axis=1)
            cols[f"final_v{k + 1}"] = paths[:, -1, k]
        out.append(write_csv(pd.DataFrame(cols), cfg.out_dir / "market_simulation.csv"))
    return out


def cmd_evaluate(cfg: RunConfig) -> list[Path]:
    prices = load_csv(_input(cfg, "prices"), "price")
    ipath = _input(cfg, "implied", required=False)
    implied = load_csv(ipath, "implied") if ipath else None
    sec = cfg.section("evaluate")
    econf = EvalConfig(cfg.year_days, sec.get("burn_in"), int(sec.get("warmup", 25)),
                       int(sec.get("stride", 1)))
    res = rolling_evaluation(prices, implied, _require_processes(cfg), cfg.horizons, econf)
    records = res.records.copy()
    records["date"] = _datestr(records["date"])
    out = [write_csv(records, cfg.out_dir / "records.csv"),
           write_csv(res.distances, cfg.out_dir / "distances.csv")]
    for d in sec.get("snapshot_dates") or []:
        snap = snapshot(res.records, d)
        out.append(write_csv(snap, cfg.out_dir / f"snapshot_{np.datetime64(d, 'D')}.csv"))
    return out


def _read_curve(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"{path}: cannot read forward curve ({exc.__class__.__name__})") from None
    if "horizon_days" not in df or not ({"forward_var", "forward_vol"} & set(df.columns)):
        raise DataError(f"{path}: need horizon_days and forward_var or forward_vol columns")
    if "forward_var" not in df:
        df["forward_var"] = df["forward_vol"] ** 2
    if "date" not in df:
        df["date"] = ""
    return df


def cmd_market_fit(cfg: RunConfig) -> list[Path]:
    model = cfg.market_model()
    df = _read_curve(_input(cfg, "curve"))
    spec_filter = cfg.section("market").get("spec")
    if spec_filter is not None:
        if "spec" not in df:
            raise DataError("market.spec given but the curve file has no spec column")
        df = df[df["spec"] == spec_filter]
    elif "spec" in df and df["spec"].nunique() > 1:
        raise ConfigError("market.spec: the curve file holds several specs; select one")
    if df.empty:
        raise DataError("forward curve has no rows to fit")
    rows = []
    for date, grp in df.groupby("date", sort=True):
        grp = grp.sort_values("horizon_days")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_factors(model, ForwardCurveObs(grp["horizon_days"].to_numpy(float),
                                                      grp["forward_var"].to_numpy(float)))
        for w in caught:
            log.warning("%s: %s", date, w.message)
        rows.append((date, *fit.factors, fit.residual))
    cols = ["date"] + [f"v{k + 1}" for k in range(model.n_factors)] + ["residual"]
    return [write_csv(pd.DataFrame(rows, columns=cols), cfg.out_dir / "factors.csv")]


COMMANDS = {
    "weights": cmd_weights,
    "forecast": cmd_forecast,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "market-fit": cmd_market_fit,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", type=Path)
    common.add_argument("--year-days", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="archvol", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("weights", parents=[common], help="forecast weight tables")
    p = sub.add_parser("forecast", parents=[common], help="forward / forecast term structures")
    p.add_argument("--prices", help="price CSV (date,price)")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo simulation reports")
    p.add_argument("--dump-paths", action="store_true", help="also write per-path returns")
    p = sub.add_parser("evaluate", parents=[common], help="rolling forecast evaluation")
    p.add_argument("--prices", help="price CSV (date,price)")
    p.add_argument("--implied", help="implied-vol CSV (date,iv_<h>,...)")
    p = sub.add_parser("market-fit", parents=[common], help="fit market-model factors to curves")
    p.add_argument("--curve", help="forward curve CSV (date,horizon_days,forward_var|forward_vol)")
    return parser


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.year_days is not None:
        if args.year_days <= 0:
            raise ConfigError("--year-days: must be positive")
        cfg.year_days = args.year_days
    for key in ("prices", "implied", "curve"):
        if getattr(args, key, None):
            cfg.inputs[key] = getattr(args, key)
    return cfg


def _fail(code: str, message: str) -> int:
    print(json.dumps({"error": code, "message": " ".join(message.split())}), file=sys.stderr)
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "simulate":
            cmd_simulate(cfg, dump_paths=args.dump_paths)
        else:
            COMMANDS[args.command](cfg)
    except ArchVolError as exc:
        return _fail(exc.code, str(exc))
    except OSError as exc:
        return _fail("io_error", f"{exc.filename}: {exc.strerror}")
    except ValueError as exc:
        return _fail("invalid_input", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
