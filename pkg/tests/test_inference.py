import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from factor_lasso.errors import DegenerateTreatmentError, DomainError
from factor_lasso.inference import (
    FitConfig,
    _cap_support,
    asymptotic_ci,
    clustered_variance,
    estimate_alpha,
    factor_lasso_estimate,
    factor_residuals,
    joint_ols_alpha,
    post_double_select,
)
from factor_lasso.lasso import LassoSolution
from factor_lasso.panel import PanelDataset, demean_panel
from factor_lasso.simulation import PpfmDesign, gen_ppfm

from conftest import inv_norm_cdf


def sol(gamma):
    return LassoSolution(np.asarray(gamma, dtype=float), 0.0, 1)


def test_support_union():
    a = sol([0, 1, 0, 1, 0, 0, 0, 0])
    b = sol([0, 0, 0, 2, 0, 0, 0, 3])
    np.testing.assert_array_equal(post_double_select(a, b), [1, 3, 7])
    assert post_double_select(sol(np.zeros(4)), sol(np.zeros(4))).size == 0
    c = sol([1, 1, 0, 0, 0])
    d = sol([0, 0, 1, 1, 1])
    assert post_double_select(c, d).size == 5


def test_cap_support_keeps_largest():
    gy = sol([0.1, 5.0, 0.0, 0.3])
    gd = sol([0.0, 0.0, 2.0, 0.0])
    with pytest.warns(RuntimeWarning, match="largest"):
        J = _cap_support(np.array([0, 1, 2, 3]), gy, gd, 2)
    np.testing.assert_array_equal(J, [1, 2])


def test_alpha_ratio_cases():
    rng = np.random.default_rng(0)
    eta = rng.standard_normal((5, 3))
    assert estimate_alpha(eta, 2 * eta) == pytest.approx(2.0)
    e = rng.standard_normal((5, 3))
    e -= eta * (eta * e).sum() / (eta * eta).sum()
    assert estimate_alpha(eta, e) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DegenerateTreatmentError):
        estimate_alpha(np.zeros((2, 2)), e[:2, :2])


def test_clustered_variance_hand_and_single_period():
    s_ee, s_eta = clustered_variance([[1.0, 1.0], [1.0, -1.0]], np.ones((2, 2)))
    assert (s_ee, s_eta) == (pytest.approx(1.0), pytest.approx(1.0))
    rng = np.random.default_rng(3)
    eta, eps = rng.standard_normal(9), rng.standard_normal(9)
    assert clustered_variance(eta, eps)[0] == pytest.approx(np.mean(eta**2 * eps**2), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_clustered_variance_brute_force(data):
    n = data.draw(st.integers(1, 7))
    T = data.draw(st.integers(1, 5))
    el = st.floats(-10, 10, allow_nan=False)
    eta = data.draw(arrays(np.float64, (n, T), elements=el))
    eps = data.draw(arrays(np.float64, (n, T), elements=el))
    total, sq = 0.0, 0.0
    for i in range(n):
        s = 0.0
        for t in range(T):
            s += eta[i, t] * eps[i, t]
            sq += eta[i, t] ** 2
        total += s * s
    s_ee, s_eta = clustered_variance(eta, eps)
    assert s_ee == pytest.approx(total / (n * T), rel=1e-12, abs=1e-12)
    assert s_eta == pytest.approx(sq / (n * T), rel=1e-12, abs=1e-12)


def test_asymptotic_ci_values():
    lo, hi = asymptotic_ci(0.7, 2.0, 1.5, 10, 3, tau=1.0)
    assert lo == hi == 0.7
    z = inv_norm_cdf(0.975)
    assert z == pytest.approx(1.959964, abs=1e-6)
    s2 = 1.7
    lo, hi = asymptotic_ci(0.0, s2**2, s2, 20, 5, tau=0.05)
    assert hi == pytest.approx(z / 10, abs=1e-12)
    assert hi == pytest.approx(0.195996, abs=1e-6)
    with pytest.raises(DegenerateTreatmentError):
        asymptotic_ci(0.0, 1.0, 0.0, 10, 1)
    with pytest.raises(DomainError):
        asymptotic_ci(0.0, 1.0, 1.0, 10, 1, tau=0.0)


@given(t1=st.floats(0.001, 0.999), t2=st.floats(0.001, 0.999))
def test_ci_width_monotone_in_tau(t1, t2):
    w = [np.diff(asymptotic_ci(0.0, 2.0, 1.3, 50, 4, t)) for t in (t1, t2)]
    if t1 < t2:
        assert w[0] >= w[1]


def noiseless_panel(seed, alpha=2.0):
    rng = np.random.default_rng(seed)
    n, T, p, K = 30, 4, 12, 2
    f = rng.standard_normal((n, K))
    x = np.einsum("ik,tpk->itp", f, rng.standard_normal((T, p, K))) + rng.standard_normal((n, T, p))
    d = rng.standard_normal((n, T)) + rng.standard_normal(n)[:, None]
    y = alpha * d + rng.standard_normal(n)[:, None] + rng.standard_normal(T)[None, :]
    return PanelDataset(y, d, x)


def test_noiseless_recovers_alpha():
    fit = factor_lasso_estimate(noiseless_panel(0), FitConfig(k=2))
    assert fit.alpha_hat == pytest.approx(2.0, abs=1e-10)


def test_fit_internal_identities(small_fit):
    fit, data, _ = small_fit
    n, T, p = data.x.shape
    UJ = fit.factors.U_hat.reshape(n * T, p)[:, fit.J_hat]
    np.testing.assert_allclose(UJ.T @ fit.e_hat.ravel(), 0, atol=1e-8)
    np.testing.assert_allclose(UJ.T @ fit.eta_hat.ravel(), 0, atol=1e-8)
    np.testing.assert_allclose(fit.eps_hat, fit.e_hat - fit.alpha_hat * fit.eta_hat)
    assert joint_ols_alpha(fit.panel, fit.factors, fit.J_hat) == pytest.approx(fit.alpha_hat, rel=1e-8)
    half = (fit.ci[1] - fit.ci[0]) / 2
    assert half == pytest.approx(inv_norm_cdf(0.975) * fit.se, rel=1e-9)
    assert fit.se == pytest.approx(math.sqrt(fit.sigma_eta_eps) / fit.sigma_eta_sq / math.sqrt(n * T))


def test_fixed_effects_do_not_move_alpha(small_fit):
    fit, data, _ = small_fit
    rng = np.random.default_rng(1)
    y2 = data.y + 5 * rng.standard_normal(data.n)[:, None] + 3 * rng.standard_normal(data.T)[None, :]
    fit2 = factor_lasso_estimate(PanelDataset(y2, data.d, data.x), FitConfig(k=2))
    assert fit2.alpha_hat == pytest.approx(fit.alpha_hat, abs=1e-10)


def test_empty_support_path(small_fit):
    _, data, _ = small_fit
    fit = factor_lasso_estimate(data, FitConfig(k=2, kappa=1e6))
    assert fit.J_hat.size == 0
    pan = demean_panel(data)
    _, ry = factor_residuals(fit.factors.F_hat, pan.y)
    _, rd = factor_residuals(fit.factors.F_hat, pan.d)
    assert fit.alpha_hat == pytest.approx((ry * rd).sum() / (rd * rd).sum(), rel=1e-12)


def test_degenerate_treatment():
    data = noiseless_panel(2)
    flat = PanelDataset(data.y, np.zeros_like(data.d) + np.arange(data.T), data.x)
    with pytest.raises(DegenerateTreatmentError), pytest.warns(RuntimeWarning, match="unit loadings"):
        factor_lasso_estimate(flat, FitConfig(k=2))


def test_config_validation():
    with pytest.raises(DomainError):
        FitConfig(q_n=3.0)
    with pytest.raises(DomainError):
        FitConfig(k=0)
    with pytest.raises(DomainError):
        FitConfig(c0=0.9)


def test_design_coverage_of_five_se():
    design = PpfmDesign(seed=4)
    hits = 0
    for r in range(200):
        data, _ = gen_ppfm(design, np.random.default_rng([4, 1, r]))
        fit = factor_lasso_estimate(data)
        hits += abs(fit.alpha_hat - 1.0) <= 5 * fit.se
    assert hits >= 198
