import numpy as np
import pytest
from numpy.testing import assert_allclose

from archvol.arch_process import ProcessSpec, build_garch11, build_igarch1, run_cascade
from archvol.errors import DataError
from archvol.simulate import (InnovationDist, chi_from_epsilon, martingale_check,
                              simulate_ensemble, simulate_induced_variance, simulate_returns)

A = 260
LEVEL = 0.1 ** 2 / A


def test_zero_innovations_decay_geometrically(lm_spec):
    path = simulate_returns(lm_spec, InnovationDist("zero"), 50, seed=1, level=LEVEL)
    assert np.all(path.returns == 0)
    expected = LEVEL * lm_spec.mu[None, :] ** np.arange(51)[:, None]
    assert_allclose(path.sigma_k_sq, expected, rtol=1e-13)


def test_same_seed_bit_identical(lm_spec):
    a = simulate_returns(lm_spec, InnovationDist("student_t", 5), 500, seed=42, level=LEVEL)
    b = simulate_returns(lm_spec, InnovationDist("student_t", 5), 500, seed=42, level=LEVEL)
    assert np.array_equal(a.returns, b.returns)
    assert np.array_equal(a.sigma_k_sq, b.sigma_k_sq)
    c = simulate_returns(lm_spec, InnovationDist("student_t", 5), 500, seed=43, level=LEVEL)
    assert not np.array_equal(a.returns, c.returns)


def test_path_is_replayable(lm_spec):
    path = simulate_returns(lm_spec, InnovationDist(), 300, seed=3, level=LEVEL)
    replay = run_cascade(lm_spec, path.returns, path.sigma_k_sq[0])
    assert_allclose(path.sigma_k_sq[1:], replay, rtol=1e-12)
    assert_allclose(path.returns, np.sqrt(path.sigma_eff_sq[:-1]) * path.epsilon, rtol=1e-15)


def test_student_t_unit_variance():
    rng = np.random.default_rng(0)
    x = InnovationDist("student_t", 5).draw(rng, 2_000_000)
    # var of the sample variance for t5 is infinite-ish; use a loose but meaningful bound
    assert x.mean() == pytest.approx(0, abs=3e-3)
    assert np.mean(x ** 2) == pytest.approx(1.0, abs=0.02)


def test_innovation_dist_validation():
    with pytest.raises(ValueError):
        InnovationDist("student_t", 2)
    with pytest.raises(ValueError):
        InnovationDist("cauchy")


def test_igarch1_kurtosis_exceeds_gaussian():
    path = simulate_returns(build_igarch1(16), InnovationDist(), 1_000_000, seed=11, level=LEVEL)
    r = path.returns
    assert np.all(np.isfinite(r))
    kurt = np.mean(r ** 4) / np.mean(r ** 2) ** 2
    assert kurt > 3


def test_chi_values():
    assert chi_from_epsilon(1.0) == 0.0
    assert chi_from_epsilon(0.0) == -1.0
    draws = np.random.default_rng(5).standard_normal(1_000_000)
    chi = chi_from_epsilon(draws)
    assert abs(chi.mean()) < 3 * chi.std() / np.sqrt(chi.size)


def test_induced_stationary_fixed_point(lm_spec):
    v = simulate_induced_variance(lm_spec, np.zeros(200), 0.01)
    assert_allclose(v, 0.01, rtol=1e-13)


def test_induced_rejects_chi_below_minus_one(lm_spec):
    with pytest.raises(DataError):
        simulate_induced_variance(lm_spec, [0.0, -1.5], 0.01)


def test_induced_boundary_chi_keeps_positive(lm_spec):
    v = simulate_induced_variance(lm_spec, np.full(500, -1.0), 0.01)
    assert np.all(v >= 0)


@pytest.mark.parametrize("spec", [
    build_igarch1(16),
    ProcessSpec.from_components([4, 512], [0.843, 0.157]),
    build_garch11(16, 0.1, 0.02),
], ids=["igarch1", "igarch2", "garch11"])
def test_return_level_equals_induced_variance(spec):
    eps = InnovationDist("student_t", 5).draw(np.random.default_rng(9), 5000)
    path = simulate_returns(spec, InnovationDist(), 5000, seed=0, level=LEVEL, epsilon=eps)
    v = simulate_induced_variance(spec, chi_from_epsilon(eps), A * LEVEL)
    assert_allclose(A * path.sigma_k_sq, v, rtol=1e-10)


def test_dv_conditional_mean_and_std(lm_spec):
    # along a simulated path: E[dv_k | past] = (1-mu_k)(v_eff - v_k), noise = (1-mu_k) v_eff chi
    rng = np.random.default_rng(21)
    chi = chi_from_epsilon(rng.standard_normal(200_000))
    v = simulate_induced_variance(lm_spec, chi, 0.01)
    veff = v[:-1] @ lm_spec.w
    dv = np.diff(v, axis=0)
    one_minus_mu = 1 - lm_spec.mu
    for k in (0, 7, 14):
        x = veff - v[:-1, k]
        slope = np.sum(x * dv[:, k]) / np.sum(x * x)
        resid = dv[:, k] - slope * x
        se = np.sqrt(np.sum((x * resid) ** 2)) / np.sum(x * x)
        assert abs(slope - one_minus_mu[k]) < 3 * se
    noise = dv - one_minus_mu * (veff[:, None] - v[:-1])
    assert_allclose(noise, one_minus_mu * (veff * chi)[:, None], rtol=1e-8, atol=1e-14)


def test_ensemble_reproducible_and_block_independent(lm_spec):
    a, ra = simulate_ensemble(lm_spec, InnovationDist(), 5, 1000, 3, LEVEL, record_steps=[2])
    b, rb = simulate_ensemble(lm_spec, InnovationDist(), 5, 1000, 3, LEVEL, record_steps=[2])
    assert np.array_equal(a, b) and np.array_equal(ra[2], rb[2])
    assert ra[2].shape == (1000,)


def test_martingale_check_trivial(lm_spec):
    rep = martingale_check(lm_spec, np.full(15, LEVEL), 0, 63, 10, seed=1)
    assert rep.z == 0 and rep.mean == rep.target


@pytest.mark.slow
@pytest.mark.parametrize("t_prime, T", [(1, 5), (10, 63), (40, 63)])
def test_martingale_igarch1(t_prime, T):
    rep = martingale_check(build_igarch1(16), np.array([LEVEL]), t_prime, T, 100_000, seed=5)
    assert rep.z < 3


@pytest.mark.slow
def test_martingale_affine_from_off_equilibrium():
    spec = build_garch11(8, 0.2, 0.04)
    rep = martingale_check(spec, np.array([3 * LEVEL]), 10, 40, 100_000, seed=8)
    assert rep.z < 3
    assert A * 3 * LEVEL < rep.target < spec.sigma_inf_sq
