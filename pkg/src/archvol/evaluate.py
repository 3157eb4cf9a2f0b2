"""Rolling (forecast, implied, realized) volatility triples and distance tables."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .arch_process import ProcessSpec, run_cascade
from .errors import DataError, InsufficientDataError
from .forecast import forecast_weights
from .timeseries import (YEAR_DAYS, ImpliedVolSeries, PriceSeries, log_returns,
                         realized_volatility_series)

DEFAULT_HORIZONS = (5, 10, 21, 42, 63, 126, 252)
PAIRS = (("forecast", "implied"), ("forecast", "realized"), ("implied", "realized"))
RECORD_COLUMNS = ["date", "spec", "horizon", "forecast", "implied", "realized"]
DISTANCE_COLUMNS = ["spec", "horizon", "pair", "mae", "rmse", "mae_log", "n", "n_eff"]


def _aligned(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series must have equal lengths")
    keep = ~(np.isnan(x) | np.isnan(y))
    if not keep.any():
        raise DataError("no overlapping observations")
    return x[keep], y[keep]


def mae(x, y) -> float:
    """Mean absolute difference over pairs where both sides are present."""
    x, y = _aligned(x, y)
    return float(np.mean(np.abs(x - y)))


def rmse(x, y) -> float:
    x, y = _aligned(x, y)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def mae_log(x, y) -> float:
    x, y = _aligned(x, y)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DataError("mae_log needs strictly positive values")
    return float(np.mean(np.abs(np.log(x) - np.log(y))))


@dataclass(frozen=True)
class EvalConfig:
    """``burn_in=None`` uses the longest time scale among the specs."""

    year_days: float = YEAR_DAYS
    burn_in: int | None = None
    warmup: int = 25
    stride: int = 1


@dataclass(frozen=True)
class EvalResult:
    records: pd.DataFrame
    distances: pd.DataFrame


def required_length(specs, horizons, config: EvalConfig) -> int:
    """Minimum number of returns for one fully scored date."""
    return max(_burn_in(specs, config), config.warmup) + max(horizons)


def _burn_in(specs, config: EvalConfig) -> int:
    if config.burn_in is not None:
        return int(config.burn_in)
    return int(np.ceil(max(max(s.taus) for s in specs)))


def _implied_matrix(implied: ImpliedVolSeries | None, dates, horizons) -> np.ndarray:
    out = np.full((dates.size, len(horizons)), np.nan)
    if implied is None:
        return out
    idx = np.searchsorted(implied.dates, dates)
    idx_c = np.minimum(idx, implied.dates.size - 1)
    hit = implied.dates[idx_c] == dates
    for j, h in enumerate(horizons):
        if h in implied.horizons:
            out[hit, j] = implied.column(h)[idx_c[hit]]
    return out


def rolling_evaluation(prices: PriceSeries, implied: ImpliedVolSeries | None,
                       specs: list[ProcessSpec], horizons=DEFAULT_HORIZONS,
                       config: EvalConfig = EvalConfig()) -> EvalResult:
    """Score every spec's forecast term structure on each date after burn-in.

    The EMA states are seeded with the mean squared return of the first
    ``config.warmup`` returns and then run over the whole sample; dates before
    the burn-in are not scored. Realized windows crossing the sample end are dropped.
    """
    if not specs:
        raise ValueError("need at least one process spec")
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ValueError("spec labels must be unique")
    horizons = sorted(int(h) for h in horizons)
    if horizons[0] < 1:
        raise ValueError("horizons must be positive")
    rets = log_returns(prices)
    need = required_length(specs, horizons, config)
    if len(rets) < need:
        raise InsufficientDataError(
            f"insufficient sample: {len(rets)} returns, need at least {need} "
            f"(burn-in {_burn_in(specs, config)} + horizon {horizons[-1]})")

    r = rets.returns
    start = max(_burn_in(specs, config), config.warmup) - 1
    eval_idx = np.arange(start, len(r), config.stride)
    dates = rets.dates[eval_idx]
    realized = np.column_stack([realized_volatility_series(r, h, config.year_days)[eval_idx]
                                for h in horizons])
    iv = _implied_matrix(implied, dates, horizons)
    init = np.mean(r[:config.warmup] ** 2)

    frames = []
    for spec in specs:
        states = run_cascade(spec, r, init)[eval_idx]
        weights = forecast_weights(spec, horizons[-1])
        s_inf = spec.sigma_inf_sq_step(config.year_days)
        avg = np.column_stack([weights.averaged(h) for h in horizons])
        var = config.year_days * (s_inf + (states - s_inf) @ avg)
        fc = np.sqrt(np.maximum(var, 0.0))
        frames.append(pd.DataFrame({
            "date": np.repeat(dates, len(horizons)),
            "spec": spec.label,
            "horizon": np.tile(horizons, dates.size),
            "forecast": fc.ravel(),
            "implied": iv.ravel(),
            "realized": realized.ravel(),
        }))
    records = pd.concat(frames, ignore_index=True)[RECORD_COLUMNS]
    return EvalResult(records, distance_table(records))


def distance_table(records: pd.DataFrame) -> pd.DataFrame:
    """MAE / RMSE / MAE-of-log per (spec, horizon, pair); empty cells are omitted."""
    rows = []
    for (label, h), grp in records.groupby(["spec", "horizon"], sort=False):
        for a, b in PAIRS:
            x = grp[a].to_numpy(float)
            y = grp[b].to_numpy(float)
            keep = ~(np.isnan(x) | np.isnan(y))
            n = int(keep.sum())
            if n == 0:
                continue
            xs, ys = x[keep], y[keep]
            ml = mae_log(xs, ys) if np.all(xs > 0) and np.all(ys > 0) else np.nan
            rows.append((label, int(h), f"{a}-{b}", mae(xs, ys), rmse(xs, ys), ml, n,
                         n / int(h)))
    return pd.DataFrame(rows, columns=DISTANCE_COLUMNS)


def snapshot(records: pd.DataFrame, date) -> pd.DataFrame:
    """Term structures on one date: a row per horizon, a forecast column per spec."""
    date = np.datetime64(date, "D")
    dates = records["date"].to_numpy("datetime64[D]")
    if dates.size == 0 or not dates.min() <= date <= dates.max():
        raise DataError(f"snapshot date {date} outside evaluated range")
    day = records[dates == date]
    if day.empty:
        raise DataError(f"no evaluation on {date}")
    wide = day.pivot(index="horizon", columns="spec", values="forecast")
    wide.columns = [f"forecast[{c}]" for c in wide.columns]
    first = day.drop_duplicates("horizon").set_index("horizon")
    wide["implied"] = first["implied"]
    wide["realized"] = first["realized"]
    return wide.reset_index()
