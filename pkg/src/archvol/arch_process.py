"""Multi-component ARCH process definitions and the EMA variance cascade.

Internally every variance is per step (one business day). The mean variance
``sigma_inf_sq`` of an affine spec is stored annualized and converted with
``year_days`` where it is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, SpecError
from .timeseries import YEAR_DAYS, ReturnSeries

_TOL = 1e-12


@dataclass(frozen=True)
class ProcessSpec:
    """Time scales ``taus`` (days), decays ``mus``, weights; ``w_inf`` anchors to ``sigma_inf_sq``."""

    taus: tuple[float, ...]
    mus: tuple[float, ...]
    weights: tuple[float, ...]
    w_inf: float = 0.0
    sigma_inf_sq: float | None = None
    label: str = ""

    def __post_init__(self):
        n = len(self.taus)
        if n == 0 or len(self.mus) != n or len(self.weights) != n:
            raise SpecError("taus, mus and weights must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise SpecError("component time scales must be strictly increasing")
        for tau, mu in zip(self.taus, self.mus):
            if not 0.0 < mu < 1.0 or abs(mu - math.exp(-1.0 / tau)) > _TOL:
                raise SpecError(f"decay {mu} inconsistent with tau {tau}")
        if any(w < 0 for w in self.weights) or not 0.0 <= self.w_inf <= 1.0:
            raise SpecError("weights must be non-negative")
        if abs(sum(self.weights) + self.w_inf - 1.0) > _TOL:
            raise SpecError("component weights and w_inf must sum to 1")
        if self.w_inf > 0:
            if self.sigma_inf_sq is None or not self.sigma_inf_sq > 0:
                raise SpecError("affine spec (w_inf > 0) needs a positive sigma_inf_sq")
        elif self.sigma_inf_sq is not None:
            raise SpecError("sigma_inf_sq is only meaningful when w_inf > 0")

    @classmethod
    def from_components(cls, taus, weights, w_inf: float = 0.0,
                        sigma_inf_sq: float | None = None, label: str = "") -> "ProcessSpec":
        taus = tuple(float(t) for t in taus)
        if any(t < 1 for t in taus):
            raise SpecError("time scales must be >= 1 day")
        mus = tuple(math.exp(-1.0 / t) for t in taus)
        return cls(taus, mus, tuple(float(w) for w in weights), float(w_inf),
                   None if sigma_inf_sq is None else float(sigma_inf_sq), label)

    @property
    def n_components(self) -> int:
        return len(self.taus)

    @property
    def is_linear(self) -> bool:
        return self.w_inf == 0.0

    @property
    def mu(self) -> np.ndarray:
        return np.array(self.mus)

    @property
    def w(self) -> np.ndarray:
        return np.array(self.weights)

    def sigma_inf_sq_step(self, year_days: float = YEAR_DAYS) -> float:
        """Mean variance per step; 0 for linear specs."""
        return 0.0 if self.sigma_inf_sq is None else self.sigma_inf_sq / year_days


def _log_weights(taus, tau0: float) -> np.ndarray:
    raw = 1.0 - np.log(taus) / math.log(tau0)
    if np.any(raw <= 0):
        raise SpecError("tau0 too small: 1 - ln(tau_k)/ln(tau0) must stay positive")
    return raw / raw.sum()


def build_lm_arch(tau1: float, tau_n: float, rho: float, tau0: float,
                  label: str = "LM-ARCH") -> ProcessSpec:
    """Long-memory ARCH: geometric time scales with logarithmically decaying weights."""
    if not (1 <= tau1 <= tau_n and rho > 1):
        raise SpecError("need 1 <= tau1 <= tau_n and rho > 1")
    if tau0 <= tau_n:
        raise SpecError("tau0 too small: must exceed tau_n")
    # relative slack so that tau1*rho**k landing on tau_n up to rounding is kept
    n = int(math.floor(math.log(tau_n / tau1) / math.log(rho) + 1e-9)) + 1
    taus = tau1 * rho ** np.arange(n)
    return ProcessSpec.from_components(taus, _log_weights(taus, tau0), label=label)


def build_igarch1(tau: float, label: str = "I-GARCH(1)") -> ProcessSpec:
    if tau < 1:
        raise SpecError("tau must be >= 1")
    return ProcessSpec.from_components([tau], [1.0], label=label)


def build_igarch2(tau1: float, tau2: float, tau0: float, label: str = "I-GARCH(2)") -> ProcessSpec:
    if not 1 <= tau1 < tau2 < tau0:
        raise SpecError("need 1 <= tau1 < tau2 < tau0")
    taus = np.array([tau1, tau2], dtype=float)
    return ProcessSpec.from_components(taus, _log_weights(taus, tau0), label=label)


def build_garch11(tau1: float, w_inf: float, sigma_inf_sq: float,
                  label: str = "GARCH(1,1)") -> ProcessSpec:
    """GARCH(1,1) as the one-component affine process; ``sigma_inf_sq`` is annualized."""
    if tau1 < 1:
        raise SpecError("tau1 must be >= 1")
    if not 0.0 < w_inf < 1.0:
        raise SpecError("w_inf must lie in (0, 1); use build_igarch1 for w_inf = 0")
    if not sigma_inf_sq > 0:
        raise SpecError("sigma_inf_sq must be positive")
    return ProcessSpec.from_components([tau1], [1.0 - w_inf], w_inf, sigma_inf_sq, label)


@dataclass(frozen=True)
class VolState:
    """Per-step EMA variances of every component as of a date (or integer step)."""

    sigma_k_sq: np.ndarray
    as_of: object = None

    def __post_init__(self):
        s = np.array(self.sigma_k_sq, dtype=float, ndmin=1)
        if np.any(s < 0):
            raise DataError("EMA variances must be non-negative")
        s.setflags(write=False)
        object.__setattr__(self, "sigma_k_sq", s)


def _check_state(state: VolState, spec: ProcessSpec) -> None:
    if state.sigma_k_sq.shape != (spec.n_components,):
        raise SpecError(f"state has {state.sigma_k_sq.size} components, spec {spec.n_components}")


def init_state(spec: ProcessSpec, warmup: ReturnSeries, min_length: int = 25) -> VolState:
    """Seed every EMA with the warmup mean of squared returns."""
    if len(warmup) < min_length:
        raise DataError(f"warmup needs at least {min_length} returns, got {len(warmup)}")
    level = float(np.mean(warmup.returns ** 2))
    return VolState(np.full(spec.n_components, level), warmup.dates[-1])


def update_state(state: VolState, spec: ProcessSpec, r: float, date=None) -> VolState:
    """One EMA step with return ``r``. Integer ``as_of`` steps advance by one."""
    _check_state(state, spec)
    mu = spec.mu
    new = mu * state.sigma_k_sq + (1.0 - mu) * (r * r)
    if date is None and isinstance(state.as_of, (int, np.integer)):
        date = state.as_of + 1
    return VolState(new, date)


def effective_variance(state, spec: ProcessSpec, year_days: float = YEAR_DAYS):
    """Per-step effective variance; accepts a VolState or an array ``(..., n)`` of EMA variances."""
    s = state.sigma_k_sq if isinstance(state, VolState) else np.asarray(state, dtype=float)
    out = s @ spec.w + spec.w_inf * spec.sigma_inf_sq_step(year_days)
    return float(out) if np.ndim(out) == 0 else out


def run_cascade(spec: ProcessSpec, returns, initial) -> np.ndarray:
    """EMA variances after each return, shape ``(len(returns), n)``.

    Row ``i`` is the state once ``returns[i]`` has been absorbed.
    """
    r2 = np.asarray(returns, dtype=float) ** 2
    init = np.broadcast_to(np.asarray(initial, dtype=float), (spec.n_components,))
    out = np.empty((r2.size, spec.n_components))
    for k, mu in enumerate(spec.mus):
        out[:, k], _ = lfilter([1.0 - mu], [1.0, -mu], r2, zi=[mu * init[k]])
    return out
