"""Daily price / implied-volatility series, returns and realized volatility.

All dates are business dates taken as given (no calendar logic); the series
granularity is one business day.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, InsufficientDataError

YEAR_DAYS = 260

_IV_COLUMN = re.compile(r"^iv_(\d+)$")


def _as_dates(dates) -> np.ndarray:
    out = np.asarray(dates, dtype="datetime64[D]")
    out.setflags(write=False)
    return out


def _frozen(values, ndim: int) -> np.ndarray:
    out = np.array(values, dtype=float, ndmin=ndim)
    out.setflags(write=False)
    return out


def _check_increasing(dates: np.ndarray) -> None:
    if dates.size > 1:
        bad = np.nonzero(np.diff(dates) <= np.timedelta64(0, "D"))[0]
        if bad.size:
            raise DataError(f"dates not strictly increasing at index {bad[0] + 1}")


@dataclass(frozen=True)
class PriceSeries:
    dates: np.ndarray
    prices: np.ndarray
    delta_t: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "prices", _frozen(self.prices, 1))
        if self.dates.shape != self.prices.shape:
            raise DataError("dates and prices must have equal lengths")
        _check_increasing(self.dates)
        bad = np.nonzero(~(self.prices > 0))[0]
        if bad.size:
            raise DataError(f"non-positive price at index {bad[0]}")

    def __len__(self) -> int:
        return self.prices.size


@dataclass(frozen=True)
class ReturnSeries:
    """Unannualized per-step returns; ``returns[i]`` covers ``(dates[i-1], dates[i]]``."""

    dates: np.ndarray
    returns: np.ndarray
    delta_t: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "returns", _frozen(self.returns, 1))
        if self.dates.shape != self.returns.shape:
            raise DataError("dates and returns must have equal lengths")
        _check_increasing(self.dates)

    def __len__(self) -> int:
        return self.returns.size

    @classmethod
    def from_array(cls, returns, start="2000-01-03") -> "ReturnSeries":
        """Attach consecutive business dates to a bare return array."""
        r = np.asarray(returns, dtype=float)
        dates = np.busday_offset(np.datetime64(start, "D"), np.arange(r.size), roll="forward")
        return cls(dates, r)


@dataclass(frozen=True)
class ImpliedVolSeries:
    """Constant-maturity ATM implied volatilities; NaN marks a missing cell."""

    dates: np.ndarray
    horizons: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        object.__setattr__(self, "values", _frozen(self.values, 2))
        if self.values.shape != (self.dates.size, len(self.horizons)):
            raise DataError("implied-vol matrix shape does not match dates x horizons")
        _check_increasing(self.dates)
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise DataError("implied-vol horizons must be strictly increasing")
        present = self.values[~np.isnan(self.values)]
        if np.any(present <= 0):
            raise DataError("implied volatilities must be positive")

    def column(self, horizon: int) -> np.ndarray:
        return self.values[:, self.horizons.index(horizon)]


def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise DataError("need at least 2 prices to form a return")
    return ReturnSeries(prices.dates[1:], np.diff(np.log(prices.prices)), prices.delta_t)


def realized_volatility(returns: ReturnSeries, t, horizon_days: int,
                        year_days: float = YEAR_DAYS) -> float:
    """Annualized RMS of the ``horizon_days`` returns strictly after date ``t``."""
    if horizon_days < 1:
        raise ValueError("horizon_days must be >= 1")
    start = int(np.searchsorted(returns.dates, np.datetime64(t, "D"), side="right"))
    stop = start + horizon_days
    if stop > len(returns):
        raise InsufficientDataError(
            f"insufficient future data: window of {horizon_days} returns after {t} "
            f"needs {stop - len(returns)} more observations")
    window = returns.returns[start:stop]
    return float(np.sqrt(year_days / horizon_days * np.dot(window, window)))


def realized_volatility_series(r: np.ndarray, horizon_days: int,
                               year_days: float = YEAR_DAYS) -> np.ndarray:
    """Realized vol over ``r[i+1 : i+1+n]`` for every index ``i``; NaN where the window overruns."""
    r2 = np.concatenate([[0.0], np.cumsum(np.asarray(r, dtype=float) ** 2)])
    out = np.full(len(r), np.nan)
    m = len(r) - horizon_days
    if m > 0:
        sums = r2[horizon_days + 1:] - r2[1:m + 1]
        out[:m] = np.sqrt(np.maximum(sums, 0.0) * year_days / horizon_days)
    return out


def load_csv(path, schema: str):
    """Read a ``price`` (``date,price``) or ``implied`` (``date,iv_<h>,...``) file."""
    if schema not in ("price", "implied"):
        raise ValueError(f"unknown schema {schema!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no data rows")
        header = [h.strip() for h in header]
        if header[0] != "date":
            raise DataError(f"{path}:1: first column must be 'date'")
        if schema == "price":
            if header != ["date", "price"]:
                raise DataError(f"{path}:1: expected header 'date,price'")
            horizons = None
        else:
            horizons = []
            for name in header[1:]:
                m = _IV_COLUMN.match(name)
                if not m:
                    raise DataError(f"{path}:1: bad implied-vol column {name!r}")
                horizons.append(int(m.group(1)))
            if not horizons:
                raise DataError(f"{path}:1: no implied-vol columns")

        dates, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                d = np.datetime64(row[0].strip(), "D")
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad date {row[0]!r}") from None
            try:
                vals = [float(c) if c.strip() else np.nan for c in row[1:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value") from None
            if schema == "price" and np.isnan(vals[0]):
                raise DataError(f"{path}:{lineno}: missing price")
            if dates and d <= dates[-1]:
                raise DataError(f"{path}:{lineno}: dates not strictly increasing")
            dates.append(d)
            rows.append(vals)

    if not rows:
        raise DataError(f"{path}: no data rows")
    if schema == "price":
        prices = np.array([r[0] for r in rows])
        bad = np.nonzero(prices <= 0)[0]
        if bad.size:
            raise DataError(f"{path}:{bad[0] + 2}: non-positive price")
        return PriceSeries(dates, prices)
    return ImpliedVolSeries(dates, horizons, np.array(rows))
