"""Linear one- and two-factor market models for the forward-variance curve.

The curve is ``G(v; dT) = v_inf + sum_k w_k(dT) (v_k - v_inf)`` with
exponential loadings; factor time scales and ``dT`` are in days, variances
are annualized.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SpecError
from .simulate import path_rng
from .timeseries import YEAR_DAYS


@dataclass(frozen=True)
class MarketModelSpec:
    n_factors: int
    tau: tuple[float, ...]
    v_inf: float
    w: tuple[float, ...] = ()
    beta: float = 0.5
    gamma: float = 0.0

    def __post_init__(self):
        if self.n_factors not in (1, 2):
            raise SpecError("only 1- and 2-factor models are supported")
        tau = tuple(float(t) for t in self.tau)
        w = tuple(float(x) for x in self.w) or ((1.0,) if self.n_factors == 1 else (1.0, 0.0))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "w", w)
        if len(tau) != self.n_factors or len(w) != self.n_factors:
            raise SpecError("tau and w must have one entry per factor")
        if any(t <= 0 for t in tau):
            raise SpecError("time scales must be positive")
        if self.n_factors == 2 and not tau[0] < tau[1]:
            raise SpecError("two-factor model needs tau1 < tau2")
        if not 0.5 <= self.beta <= 1.0:
            raise SpecError("beta must lie in [1/2, 1]")
        if self.gamma < 0:
            raise SpecError("gamma must be non-negative")
        if self.v_inf < 0:
            raise SpecError("v_inf must be non-negative")


@dataclass(frozen=True)
class ForwardCurveObs:
    horizons: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.horizons, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if h.shape != v.shape or h.ndim != 1:
            raise DataError("horizons and variances must be 1-d and aligned")
        if np.any(np.diff(h) < 0):
            raise DataError("horizons must be increasing")
        if np.any(v < 0):
            raise DataError("forward variances must be non-negative")
        object.__setattr__(self, "horizons", h)
        object.__setattr__(self, "variances", v)


def factor_weights(model: MarketModelSpec, dT) -> np.ndarray:
    """Loadings ``w_k(dT)``, shape ``dT.shape + (n_factors,)``."""
    dT = np.asarray(dT, dtype=float)
    a = np.exp(-dT / model.tau[0])
    w1 = model.w[0] * a
    if model.n_factors == 1:
        return w1[..., None]
    b = np.exp(-dT / model.tau[1])
    w2 = (-model.w[0] * a + (model.w[0] + model.w[1]) * b) / (1.0 - model.tau[0] / model.tau[1])
    return np.stack([w1, w2], axis=-1)


def curve_value(model: MarketModelSpec, factors, dT):
    """Forward variance ``G(v; dT)``; broadcasts over leading axes of ``factors`` and ``dT``."""
    v = np.asarray(factors, dtype=float)
    if v.shape[-1] != model.n_factors:
        raise SpecError(f"expected {model.n_factors} factors, got {v.shape[-1]}")
    out = model.v_inf + np.sum(factor_weights(model, dT) * (v - model.v_inf), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def factor_drift(model: MarketModelSpec, factors) -> np.ndarray:
    v = np.asarray(factors, dtype=float)
    if model.n_factors == 1:
        return -(v - model.v_inf) / model.tau[0]
    return np.stack([-(v[..., 0] - v[..., 1]) / model.tau[0],
                     -(v[..., 1] - model.v_inf) / model.tau[1]], axis=-1)


@dataclass(frozen=True)
class FactorFit:
    factors: np.ndarray
    residual: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def fit_factors(model: MarketModelSpec, obs: ForwardCurveObs) -> FactorFit:
    """Least-squares factors for fixed time scales and ``v_inf``; residual is the RMS misfit."""
    if obs.horizons.size < model.n_factors:
        raise DataError(f"need at least {model.n_factors} curve points")
    design = factor_weights(model, obs.horizons)
    if np.linalg.matrix_rank(design) < model.n_factors:
        raise DataError("rank-deficient design: horizons do not identify the factors")
    target = obs.variances - model.v_inf
    u, *_ = np.linalg.lstsq(design, target, rcond=None)
    factors = u + model.v_inf
    resid = float(np.sqrt(np.mean((design @ u - target) ** 2)))
    status = "ok"
    if np.any(factors < 0):
        status = "negative_factor"
        warnings.warn(f"fitted factors {factors} contain negative values", RuntimeWarning,
                      stacklevel=2)
    return FactorFit(factors, resid, status)


def compatibility_residual(model: MarketModelSpec, factors, dT: float,
                           fd_step: float = 1e-3, curve=None) -> float:
    """``|d G/d dT - sum_i drift_i dG/dv_i|`` by central differences.

    Linear curves have no second-order term, so the factor volatility drops out.
    ``curve(v, dT)`` replaces ``G`` (used for mutation tests).
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    g = curve or (lambda v, t: curve_value(model, v, t))
    v = np.asarray(factors, dtype=float)
    hT = fd_step * max(abs(dT), 1.0)
    lhs = (g(v, dT + hT) - g(v, dT - hT)) / (2 * hT)
    drift = factor_drift(model, v)
    rhs = 0.0
    for i in range(model.n_factors):
        hv = fd_step * max(abs(v[i]), 1.0)
        e = np.zeros_like(v)
        e[i] = hv
        rhs += drift[i] * (g(v + e, dT) - g(v - e, dT)) / (2 * hv)
    return float(abs(lhs - rhs))


def simulate_market_model(model: MarketModelSpec, initial_factors, n_steps: int,
                          dt: float = 1.0 / YEAR_DAYS, seed: int = 0, n_paths: int = 1,
                          year_days: float = YEAR_DAYS) -> np.ndarray:
    """Full-truncation Euler paths, shape ``(n_paths, n_steps + 1, n_factors)``.

    ``dt`` is in years; factor time scales are converted from days with ``year_days``.
    Path ``p`` draws from substream ``(seed, p)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v0 = np.asarray(initial_factors, dtype=float)
    if v0.shape != (model.n_factors,) or np.any(v0 <= 0):
        raise ValueError("initial factors must be positive, one per factor")
    scaled = MarketModelSpec(model.n_factors, tuple(t / year_days for t in model.tau),
                             model.v_inf, model.w, model.beta, model.gamma)
    noise = np.stack([path_rng(seed, p).standard_normal((n_steps, model.n_factors))
                      for p in range(n_paths)])
    out = np.empty((n_paths, n_steps + 1, model.n_factors))
    out[:, 0] = v0
    sq = np.sqrt(dt)
    for t in range(n_steps):
        vp = np.maximum(out[:, t], 0.0)
        out[:, t + 1] = (out[:, t] + factor_drift(scaled, vp) * dt
                         + model.gamma * vp ** model.beta * sq * noise[:, t])
    return out
