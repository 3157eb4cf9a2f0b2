"""Forward-variance and forecasted-volatility term structures of an ARCH spec.

Step index ``h`` denotes ``E[sigma_eff^2(t+h) | t]``, the conditional variance of
the return at ``t+h+1``. A forecast horizon ``dT`` (days) therefore maps to
``h = dT - 1`` for the forward variance, and the forecasted variance over ``dT``
averages ``h = 0 .. dT-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arch_process import ProcessSpec, VolState
from .timeseries import YEAR_DAYS


def transition_matrix(spec: ProcessSpec) -> np.ndarray:
    """One-step map of expected EMA variances: ``M[k, j] = mu_k 1{k=j} + (1-mu_k) w_j``."""
    mu = spec.mu
    return np.diag(mu) + np.outer(1.0 - mu, spec.w)


@dataclass(frozen=True)
class ForecastWeights:
    """``component[h]`` holds ``w_k(h)`` for h = 0..max_step; ``w_inf(h) = 1 - sum_k w_k(h)``."""

    spec: ProcessSpec
    component: np.ndarray = field(repr=False)
    _cum: np.ndarray = field(repr=False, compare=False)

    @property
    def max_step(self) -> int:
        return self.component.shape[0] - 1

    @property
    def w_inf(self) -> np.ndarray:
        return 1.0 - self.component.sum(axis=1)

    def forward(self, h: int) -> np.ndarray:
        if not 0 <= h <= self.max_step:
            raise ValueError(f"step {h} outside 0..{self.max_step}")
        return self.component[h]

    def averaged(self, n: int) -> np.ndarray:
        """Mean of ``w(h)`` over h = 0..n-1: the realized-window forecast weights."""
        if not 1 <= n <= self.max_step + 1:
            raise ValueError(f"window {n} outside 1..{self.max_step + 1}")
        return self._cum[n] / n


@lru_cache(maxsize=64)
def forecast_weights(spec: ProcessSpec, max_horizon: int) -> ForecastWeights:
    """Iterate ``w(h+1) = w(h) M`` from the spec weights for h up to ``max_horizon``."""
    if max_horizon < 1:
        raise ValueError("max_horizon must be >= 1")
    m = transition_matrix(spec)
    out = np.empty((max_horizon + 1, spec.n_components))
    out[0] = spec.w
    for h in range(max_horizon):
        out[h + 1] = out[h] @ m
    cum = np.vstack([np.zeros(spec.n_components), np.cumsum(out, axis=0)])
    out.setflags(write=False)
    cum.setflags(write=False)
    return ForecastWeights(spec, out, cum)


def _sigma(state) -> np.ndarray:
    return state.sigma_k_sq if isinstance(state, VolState) else np.asarray(state, dtype=float)


def _combine(sig2, spec, wk, year_days):
    s_inf = spec.sigma_inf_sq_step(year_days)
    return year_days * (s_inf + (sig2 - s_inf) @ wk)


def forward_variance(state, spec: ProcessSpec, weights: ForecastWeights, h: int,
                     year_days: float = YEAR_DAYS):
    """Annualized ``E[sigma_eff^2(t+h)]``; ``state`` may be an array of shape ``(..., n)``."""
    return _combine(_sigma(state), spec, weights.forward(h), year_days)


def forecasted_volatility(state, spec: ProcessSpec, weights: ForecastWeights, n: int,
                          year_days: float = YEAR_DAYS):
    """Annualized forecast of the realized volatility over the next ``n`` steps."""
    var = _combine(_sigma(state), spec, weights.averaged(n), year_days)
    return np.sqrt(np.maximum(var, 0.0))


@dataclass(frozen=True)
class ForecastCurve:
    as_of: object
    horizons: np.ndarray
    forward_variance: np.ndarray
    forecast_volatility: np.ndarray

    @property
    def forward_volatility(self) -> np.ndarray:
        return np.sqrt(self.forward_variance)

    def __len__(self) -> int:
        return self.horizons.size


def term_structure(state: VolState, spec: ProcessSpec, horizons,
                   year_days: float = YEAR_DAYS,
                   weights: ForecastWeights | None = None) -> ForecastCurve:
    horizons = np.asarray(horizons, dtype=int)
    if horizons.size == 0 or np.any(horizons < 1) or np.any(np.diff(horizons) <= 0):
        raise ValueError("horizons must be positive and sorted ascending")
    if weights is None or weights.max_step < horizons[-1] - 1:
        weights = forecast_weights(spec, max(int(horizons[-1]) - 1, 1))
    fwd = np.array([forward_variance(state, spec, weights, int(d) - 1, year_days)
                    for d in horizons])
    vol = np.array([forecasted_volatility(state, spec, weights, int(d), year_days)
                    for d in horizons])
    return ForecastCurve(getattr(state, "as_of", None), horizons, fwd, vol)
