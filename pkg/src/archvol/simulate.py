"""Monte Carlo engines for ARCH processes.

Two equivalent views of the same dynamics are provided: the return-level
process (``r = sigma_eff * eps`` feeding the EMA cascade) and the induced
variance-level recursion driven by ``chi = eps^2 - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .arch_process import ProcessSpec, VolState
from .errors import DataError
from .forecast import forecast_weights, forward_variance
from .timeseries import YEAR_DAYS

DEFAULT_BLOCK = 8192


@dataclass(frozen=True)
class InnovationDist:
    """Unit-variance innovations. ``kind="zero"`` is a degenerate hook (eps = 0)."""

    kind: str = "gaussian"
    dof: float = 5.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "student_t", "zero"):
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "student_t" and not self.dof > 2:
            raise ValueError("student_t needs dof > 2 for a finite variance")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "student_t":
            return rng.standard_t(self.dof, size) * np.sqrt((self.dof - 2.0) / self.dof)
        return np.zeros(size)


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Independent substream for path (or block) ``index`` of run ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@dataclass(frozen=True)
class SimPath:
    """``sigma_k_sq[t]`` / ``sigma_eff_sq[t]`` are the states after ``t`` returns (row 0 = initial)."""

    seed: int
    returns: np.ndarray = field(repr=False)
    epsilon: np.ndarray = field(repr=False)
    sigma_k_sq: np.ndarray = field(repr=False)
    sigma_eff_sq: np.ndarray = field(repr=False)


@njit(cache=True)
def _arch_kernel(eps, mu, w, anchor, s0):
    n_steps = eps.shape[0]
    n = mu.shape[0]
    sig = np.empty((n_steps + 1, n))
    eff = np.empty(n_steps + 1)
    ret = np.empty(n_steps)
    sig[0] = s0
    for t in range(n_steps):
        e = anchor
        for k in range(n):
            e += w[k] * sig[t, k]
        eff[t] = e
        r = np.sqrt(e) * eps[t]
        ret[t] = r
        r2 = r * r
        for k in range(n):
            sig[t + 1, k] = mu[k] * sig[t, k] + (1.0 - mu[k]) * r2
    e = anchor
    for k in range(n):
        e += w[k] * sig[n_steps, k]
    eff[n_steps] = e
    return ret, sig, eff


@njit(cache=True)
def _induced_kernel(chi, mu, w, anchor, v0):
    n_steps = chi.shape[0]
    n = mu.shape[0]
    v = np.empty((n_steps + 1, n))
    v[0] = v0
    for t in range(n_steps):
        veff = anchor
        for k in range(n):
            veff += w[k] * v[t, k]
        drive = (chi[t] + 1.0) * veff
        for k in range(n):
            v[t + 1, k] = v[t, k] + (1.0 - mu[k]) * (drive - v[t, k])
    return v


def _initial_sigma(spec: ProcessSpec, initial_state, level) -> np.ndarray:
    if initial_state is not None:
        s = initial_state.sigma_k_sq if isinstance(initial_state, VolState) else initial_state
        s = np.asarray(s, dtype=float)
        if s.shape != (spec.n_components,):
            raise ValueError("initial state does not match the spec")
        return s
    if level is None:
        raise ValueError("give either initial_state or a per-step variance level")
    return np.full(spec.n_components, float(level))


def simulate_returns(spec: ProcessSpec, dist: InnovationDist, n_steps: int, seed: int,
                     initial_state=None, level: float | None = None,
                     year_days: float = YEAR_DAYS, epsilon=None) -> SimPath:
    """Simulate ``r(t+1) = sigma_eff(t) eps(t+1)`` with the EMA cascade.

    ``level`` (per-step variance) sets every ``sigma_k^2`` when no state is given.
    ``epsilon`` overrides the random draws, for replaying a given innovation path.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    s0 = _initial_sigma(spec, initial_state, level)
    if epsilon is None:
        eps = dist.draw(path_rng(seed, 0), n_steps)
    else:
        eps = np.asarray(epsilon, dtype=float)
        if eps.shape != (n_steps,):
            raise ValueError("epsilon must have n_steps entries")
    anchor = spec.w_inf * spec.sigma_inf_sq_step(year_days)
    ret, sig, eff = _arch_kernel(eps, spec.mu, spec.w, anchor, s0)
    return SimPath(seed, ret, eps, sig, eff)


def chi_from_epsilon(eps):
    """Centered squared innovation; ``E[chi] = 0`` and ``chi >= -1``."""
    return np.square(eps) - 1.0


def simulate_induced_variance(spec: ProcessSpec, chi, initial_v,
                              year_days: float = YEAR_DAYS) -> np.ndarray:
    """Annualized component variances under ``dv_k = (1-mu_k){(chi+1) v_eff - v_k}``.

    Returns shape ``(len(chi) + 1, n)`` with row 0 the initial ``v_k``.
    """
    chi = np.asarray(chi, dtype=float)
    if np.any(chi < -1.0):
        raise DataError("chi must be >= -1")
    v0 = np.broadcast_to(np.asarray(initial_v, dtype=float), (spec.n_components,)).copy()
    if np.any(v0 < 0):
        raise DataError("initial variances must be non-negative")
    anchor = spec.w_inf * (spec.sigma_inf_sq or 0.0)
    return _induced_kernel(chi, spec.mu, spec.w, anchor, v0)


def simulate_ensemble(spec: ProcessSpec, dist: InnovationDist, n_steps: int, n_paths: int,
                      seed: int, initial, record_steps=(), year_days: float = YEAR_DAYS,
                      block: int = DEFAULT_BLOCK):
    """Vectorized paths; returns ``(final sigma_k^2 (n_paths, n), {step: sigma_eff^2 array})``.

    Paths are generated in fixed blocks, block ``b`` drawing from substream ``(seed, b)``,
    so the output does not depend on how blocks are scheduled.
    """
    s0 = np.broadcast_to(np.asarray(initial, dtype=float), (spec.n_components,))
    mu, w = spec.mu, spec.w
    anchor = spec.w_inf * spec.sigma_inf_sq_step(year_days)
    record_steps = sorted(set(int(s) for s in record_steps))
    final = np.empty((n_paths, spec.n_components))
    recorded = {s: np.empty(n_paths) for s in record_steps}
    for b, lo in enumerate(range(0, n_paths, block)):
        hi = min(lo + block, n_paths)
        rng = path_rng(seed, b)
        sig = np.tile(s0, (hi - lo, 1))
        for t in range(n_steps + 1):
            eff = sig @ w + anchor
            if t in recorded:
                recorded[t][lo:hi] = eff
            if t == n_steps:
                break
            r2 = eff * dist.draw(rng, hi - lo) ** 2
            sig = mu * sig + (1.0 - mu) * r2[:, None]
        final[lo:hi] = sig
    return final, recorded


@dataclass(frozen=True)
class MartingaleReport:
    mean: float
    se: float
    target: float
    z: float
    n_paths: int


def martingale_check(spec: ProcessSpec, initial_state, t_prime: int, T: int, n_paths: int,
                     seed: int, dist: InnovationDist = InnovationDist(),
                     year_days: float = YEAR_DAYS) -> MartingaleReport:
    """Compare the sample mean of ``v(t', T)`` over simulated paths with ``v(0, T)``."""
    if not 0 <= t_prime < T:
        raise ValueError("need 0 <= t_prime < T")
    s0 = _initial_sigma(spec, initial_state, None)
    weights = forecast_weights(spec, T)
    target = float(forward_variance(s0, spec, weights, T, year_days))
    if t_prime == 0:
        return MartingaleReport(target, 0.0, target, 0.0, n_paths)
    final, _ = simulate_ensemble(spec, dist, t_prime, n_paths, seed, s0, year_days=year_days)
    v = forward_variance(final, spec, weights, T - t_prime, year_days)
    mean = float(v.mean())
    se = float(v.std(ddof=1) / np.sqrt(n_paths))
    z = abs(mean - target) / se if se > 0 else (0.0 if mean == target else np.inf)
    return MartingaleReport(mean, se, target, z, n_paths)
