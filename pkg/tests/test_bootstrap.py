import math

import numpy as np
import pytest

from factor_lasso.bootstrap import (
    BootstrapConfig,
    bootstrap_ci,
    bootstrap_replicate,
    generate_bootstrap_panel,
    mammen_transform,
    mammen_weights,
    rademacher_weights,
    replicate_from_weights,
    replicate_rng,
    run_bootstrap,
)
from factor_lasso.errors import DimensionError, DomainError
from factor_lasso.lasso import LassoProblem, lasso_objective


def test_mammen_points():
    assert mammen_transform(0.0, 0.0) == -0.5
    assert mammen_transform(0.0, 1.0) == 0.0
    assert mammen_transform(math.sqrt(2), 0.0) == pytest.approx(0.5)


def test_weight_moments():
    w = mammen_weights(np.random.default_rng(0), 1_000_000)
    assert abs(w.mean()) < 0.005
    assert abs(w.var() - 1) < 0.01
    r = rademacher_weights(np.random.default_rng(0), 1000)
    assert set(np.unique(r)) == {-1.0, 1.0}


def test_unit_weights_reproduce_sample(small_fit):
    fit, _, _ = small_fit
    ones = np.ones(fit.n)
    star = generate_bootstrap_panel(fit, fit.factors, ones, ones, ones)
    for a, b in ((star.x, fit.panel.x), (star.d, fit.panel.d), (star.y, fit.panel.y)):
        np.testing.assert_allclose(a, b, atol=1e-10)
    assert replicate_from_weights(fit, fit.factors, ones, ones, ones) == pytest.approx(fit.alpha_hat, abs=1e-8)


def test_negative_unit_weights_flip_innovations(small_fit):
    fit, _, _ = small_fit
    m = -np.ones(fit.n)
    star = generate_bootstrap_panel(fit, fit.factors, m, m, m)
    common = np.einsum("ik,tpk->itp", fit.factors.F_hat, fit.factors.Lambda_hat)
    np.testing.assert_allclose(star.x, common - fit.factors.U_hat, atol=1e-12)


def test_weight_shape_checked(small_fit):
    fit, _, _ = small_fit
    with pytest.raises(DimensionError):
        generate_bootstrap_panel(fit, fit.factors, np.ones(3), np.ones(fit.n), np.ones(fit.n))


def test_many_steps_match_full_lasso(small_fit):
    fit, _, _ = small_fit
    rng = replicate_rng(3, 0)
    w = [mammen_weights(rng, fit.n) for _ in range(3)]
    a_k = replicate_from_weights(fit, fit.factors, *w, k=500)
    a_full = replicate_from_weights(fit, fit.factors, *w, full_lasso=True, tol=1e-12)
    assert a_k == pytest.approx(a_full, abs=1e-6)


def test_replicate_deterministic(small_fit):
    fit, _, _ = small_fit
    cfg = BootstrapConfig(B=5, k=5, seed=9)
    a = bootstrap_replicate(fit, fit.factors, cfg, replicate_rng(9, 2))
    b = bootstrap_replicate(fit, fit.factors, cfg, replicate_rng(9, 2))
    assert a == b


def test_penalty_frozen_and_monotone(small_fit):
    fit, _, _ = small_fit
    from factor_lasso.factors import extract_factors_pca
    from factor_lasso.inference import factor_residuals
    from factor_lasso.lasso import k_step_iterate

    rng = replicate_rng(1, 0)
    w = [mammen_weights(rng, fit.n) for _ in range(3)]
    star = generate_bootstrap_panel(fit, fit.factors, *w)
    fac = extract_factors_pca(star.x, fit.K_used)
    _, ry = factor_residuals(fac.F_hat, star.y)
    prob = LassoProblem(ry, fac.U_hat)
    g = fit.lasso_y.gamma
    prev = lasso_objective(prob, fit.penalty_y, g)
    for _ in range(15):
        g = k_step_iterate(prob, fit.penalty_y, g, 1).gamma
        cur = lasso_objective(prob, fit.penalty_y, g)
        assert cur <= prev + 1e-12
        prev = cur


def test_quantile_convention():
    nT = 16
    root = 4.0
    draws = 1.0 + np.array([1, -2, 3, -4]) / root
    q, (lo, hi) = bootstrap_ci(draws, 1.0, 4, 4, tau=0.25)
    assert q == pytest.approx(3.0)
    assert (lo, hi) == (pytest.approx(1 - 3 / root), pytest.approx(1 + 3 / root))
    assert bootstrap_ci(np.full(7, 2.0), 2.0, 3, 3, 0.05)[1] == (2.0, 2.0)
    c = 0.3
    q, _ = bootstrap_ci(np.array([1 - c, 1 + c] * 10), 1.0, nT, 1, 0.05)
    assert q == pytest.approx(math.sqrt(nT) * c)
    q, (lo, hi) = bootstrap_ci([1.4], 1.0, 5, 2, 0.05)
    assert hi - 1.0 == pytest.approx(0.4)


def test_run_bootstrap_deterministic_and_parallel_invariant(small_fit):
    fit, _, _ = small_fit
    cfg = BootstrapConfig(B=30, k=10, seed=5)
    a = run_bootstrap(fit, config=cfg)
    b = run_bootstrap(fit, config=cfg)
    c = run_bootstrap(fit, config=cfg, workers=3)
    assert np.array_equal(a.draws, b.draws) and np.array_equal(a.draws, c.draws)
    assert a.ci == b.ci and a.n_degenerate == 0
    assert a.ci[0] < fit.alpha_hat < a.ci[1]
    single = run_bootstrap(fit, config=BootstrapConfig(B=1, k=5, seed=5))
    assert single.ci[1] - fit.alpha_hat == pytest.approx(abs(single.draws[0] - fit.alpha_hat))


def test_config_validation():
    with pytest.raises(DomainError):
        BootstrapConfig(B=0)
    with pytest.raises(DomainError):
        BootstrapConfig(weight_scheme="normal")
    with pytest.raises(DomainError):
        BootstrapConfig(tau=1.5)


def test_degenerate_replicates_redrawn_then_fail(small_fit, monkeypatch):
    import factor_lasso.bootstrap as bs
    from factor_lasso.errors import BootstrapFailureError, ReplicateDegenerateError

    calls = {"n": 0}

    def flaky(fit, factors, config, rng):
        calls["n"] += 1
        if calls["n"] % 3 == 1:
            raise ReplicateDegenerateError("forced")
        return float(rng.standard_normal())

    monkeypatch.setattr(bs, "bootstrap_replicate", flaky)
    res = bs.run_bootstrap(small_fit[0], config=BootstrapConfig(B=6, k=1))
    assert res.n_degenerate == 3 and res.draws.size == 6

    def always(fit, factors, config, rng):
        raise ReplicateDegenerateError("forced")

    monkeypatch.setattr(bs, "bootstrap_replicate", always)
    with pytest.raises(BootstrapFailureError):
        bs.run_bootstrap(small_fit[0], config=BootstrapConfig(B=4, k=1))
