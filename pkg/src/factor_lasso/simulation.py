"""Monte Carlo designs for the panel partial factor model and its
cross-sectional IV variant, comparison estimators, and the replication
driver.

Loadings, fixed effects and the calibration constants are drawn once per
design (from ``design.seed``) and reused by every replication; each
replication draws fresh factors, idiosyncratic terms and structural errors
from its own stream, derived from ``(seed, replication index)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.stats import norm

from .bootstrap import BootstrapConfig, run_bootstrap
from .errors import CalibrationError, DimensionError, FactorLassoError
from .factors import extract_factors_pca
from .inference import FitConfig, _choose_k, factor_lasso_estimate, factor_residuals
from .iv import IVDataset, iv_2sls, iv_factor_lasso, partial_out
from .lasso import LassoProblem, iterated_loadings_lasso, penalty_level
from .panel import PanelDataset, demean_panel

__all__ = [
    "PpfmDesign",
    "IvDesign",
    "MonteCarloReport",
    "toeplitz_cov",
    "calibrate_loading_scale",
    "calibrate_signal_pair",
    "ppfm_parameters",
    "iv_parameters",
    "gen_ppfm",
    "gen_iv",
    "baseline_estimators",
    "run_monte_carlo",
    "PPFM_ESTIMATORS",
    "IV_ESTIMATORS",
]

SHARE_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


# ----------------------------------------------------------------------------
# designs and calibration


@dataclass(frozen=True)
class PpfmDesign:
    n: int = 100
    T: int = 10
    K: int = 3
    p: int = 100
    rho_u: float = 0.7
    r2_x: float = 0.5
    r2_yd: float = 0.7
    share_y: float = 0.5
    share_d: float = 0.5
    alpha_true: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("share_y", "share_d"):
            if not 0 <= getattr(self, name) <= 1:
                raise CalibrationError(f"{name} must lie in [0, 1]")
        for name in ("r2_x", "r2_yd"):
            if not 0 < getattr(self, name) < 1:
                raise CalibrationError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class IvDesign:
    n: int = 100
    K: int = 2
    p: int = 100
    rho_u: float = 0.7
    r2_x: float = 0.5
    r2_yd: float = 0.7
    share_y: float = 0.5
    share_d: float = 0.5
    corr_eps_eta: float = 0.8
    r2_z: float = 0.7
    share_z: float = 0.5
    frac_z_in_d: float = 0.25
    alpha_true: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("share_y", "share_d", "share_z"):
            if not 0 <= getattr(self, name) <= 1:
                raise CalibrationError(f"{name} must lie in [0, 1]")
        for name in ("r2_x", "r2_yd", "r2_z", "frac_z_in_d"):
            if not 0 < getattr(self, name) < 1:
                raise CalibrationError(f"{name} must lie in (0, 1)")
        if not -1 < self.corr_eps_eta < 1:
            raise CalibrationError("corr_eps_eta must lie in (-1, 1)")

    @property
    def T(self) -> int:
        return 1


def toeplitz_cov(p: int, rho: float) -> np.ndarray:
    """``Sigma[r, s] = rho^|r - s|``."""
    return scipy.linalg.toeplitz(rho ** np.arange(p))


def calibrate_loading_scale(lam_sq_norms, r2: float, noise_var=1.0) -> float:
    """Scale ``c`` with ``mean(c^2 L / (c^2 L + s)) = r2`` over loading rows.

    ``L`` are squared norms of the loading rows and ``s`` the idiosyncratic
    variances; this is the population R^2 of each covariate on the factors,
    averaged over covariates and periods.
    """
    L, s = np.broadcast_arrays(np.asarray(lam_sq_norms, dtype=np.float64), np.asarray(noise_var, dtype=np.float64))
    L, s = L.ravel(), s.ravel()
    if not np.any(L > 0):
        raise CalibrationError("all factor loadings are zero")
    top = float(np.mean(L > 0))
    if r2 >= top:
        raise CalibrationError(f"target R^2 {r2} unreachable (max {top})")

    def gap(c2):
        return float(np.mean(c2 * L / (c2 * L + s))) - r2

    hi = 1.0
    while gap(hi) < 0:
        hi *= 4.0
    return math.sqrt(brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-14))


def calibrate_signal_pair(factor_var: float, resid_var: float, r2: float, share: float, noise_var=1.0):
    """Scales ``(c_f, c_u)`` for a signal ``c_f * A + c_u * B`` with
    uncorrelated parts of population variances ``factor_var`` and
    ``resid_var`` such that the signal's R^2 against unit noise is ``r2`` and
    the factor part carries fraction ``share`` of the explained variance."""
    total = r2 / (1.0 - r2) * noise_var
    want_f, want_u = share * total, (1.0 - share) * total
    if want_f > 0 and not factor_var > 0:
        raise CalibrationError("factor share requested but factor loadings are zero")
    if want_u > 0 and not resid_var > 0:
        raise CalibrationError("residual share requested but the structural vector is zero")
    c_f = math.sqrt(want_f / factor_var) if want_f > 0 else 0.0
    c_u = math.sqrt(want_u / resid_var) if want_u > 0 else 0.0
    return c_f, c_u


def _sparse_coefs(p: int) -> np.ndarray:
    return 1.0 / np.arange(1, p + 1) ** 2


@dataclass(frozen=True, eq=False)
class PpfmParams:
    g: np.ndarray
    zeta: np.ndarray
    w: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    xi: np.ndarray  # (T, K)
    delta_d: np.ndarray  # (T, K)
    Lambda: np.ndarray  # (T, p, K)
    theta: np.ndarray
    gamma_d: np.ndarray
    chol_u: np.ndarray
    sigma_u: np.ndarray
    c_lambda: float
    c_delta: float
    c_gamma: float
    c_xi: float
    c_theta: float


@lru_cache(maxsize=64)
def ppfm_parameters(design: PpfmDesign) -> PpfmParams:
    """Fixed quantities of a PPFM design (cached per design)."""
    n, T, K, p = design.n, design.T, design.K, design.p
    rng = np.random.default_rng([design.seed, 0])
    unit = rng.standard_normal((n, p + 2))
    period = rng.standard_normal((T, p + 2))
    xi = rng.standard_normal((T, K))
    delta_d = rng.standard_normal((T, K))
    Lam = rng.standard_normal((T, p, K))
    sigma = toeplitz_cov(p, design.rho_u)
    chol = np.linalg.cholesky(sigma)
    theta = gamma_d = _sparse_coefs(p)

    c_lam = calibrate_loading_scale((Lam**2).sum(axis=2), design.r2_x, np.diag(sigma)[None, :])
    c_delta, c_gamma = calibrate_signal_pair(
        float((delta_d**2).sum(axis=1).mean()), float(gamma_d @ sigma @ gamma_d), design.r2_yd, design.share_d
    )
    c_xi, c_theta = calibrate_signal_pair(
        float((xi**2).sum(axis=1).mean()), float(theta @ sigma @ theta), design.r2_yd, design.share_y
    )
    return PpfmParams(
        g=unit[:, 0], zeta=unit[:, 1], w=unit[:, 2:],
        nu=period[:, 0], mu=period[:, 1], rho=period[:, 2:],
        xi=xi, delta_d=delta_d, Lambda=Lam, theta=theta, gamma_d=gamma_d,
        chol_u=chol, sigma_u=sigma,
        c_lambda=c_lam, c_delta=c_delta, c_gamma=c_gamma, c_xi=c_xi, c_theta=c_theta,
    )  # fmt: skip


@dataclass(frozen=True, eq=False)
class PpfmTruth:
    params: PpfmParams
    f: np.ndarray
    U: np.ndarray
    eps: np.ndarray
    eta: np.ndarray
    alpha: float

    @property
    def signal_d(self) -> np.ndarray:
        P = self.params
        return P.c_delta * self.f @ P.delta_d.T + P.c_gamma * self.U @ P.gamma_d

    @property
    def signal_y(self) -> np.ndarray:
        P = self.params
        return P.c_xi * self.f @ P.xi.T + P.c_theta * self.U @ P.theta

    @property
    def factor_part_x(self) -> np.ndarray:
        P = self.params
        return P.c_lambda * np.einsum("ik,tpk->itp", self.f, P.Lambda)


def gen_ppfm(design: PpfmDesign, rng: np.random.Generator) -> tuple[PanelDataset, PpfmTruth]:
    P = ppfm_parameters(design)
    n, T, K, p = design.n, design.T, design.K, design.p
    f = rng.standard_normal((n, K))
    U = rng.standard_normal((n, T, p)) @ P.chol_u.T
    eps = rng.standard_normal((n, T))
    eta = rng.standard_normal((n, T))
    truth = PpfmTruth(P, f, U, eps, eta, design.alpha_true)
    x = truth.factor_part_x + P.w[:, None, :] + P.rho[None, :, :] + U
    d = truth.signal_d + P.zeta[:, None] + P.mu[None, :] + eta
    y = design.alpha_true * d + truth.signal_y + P.g[:, None] + P.nu[None, :] + eps
    return PanelDataset(y, d, x), truth


@dataclass(frozen=True, eq=False)
class IvParams:
    nu: float
    mu: float
    zeta: float
    rho: np.ndarray
    xi: np.ndarray
    delta_d: np.ndarray
    delta_z: np.ndarray
    Lambda: np.ndarray  # (p, K)
    theta: np.ndarray
    gamma_d: np.ndarray
    gamma_z: np.ndarray
    chol_u: np.ndarray
    sigma_u: np.ndarray
    pi: float
    c_lambda: float
    c_xi: float
    c_theta: float
    c_delta_d: float
    c_gamma_d: float
    c_delta_z: float
    c_gamma_z: float


@lru_cache(maxsize=64)
def iv_parameters(design: IvDesign) -> IvParams:
    K, p = design.K, design.p
    rng = np.random.default_rng([design.seed, 0])
    consts = rng.standard_normal(3)
    rho = rng.standard_normal(p)
    xi, delta_d, delta_z = rng.standard_normal((3, K))
    Lam = rng.standard_normal((p, K))
    sigma = toeplitz_cov(p, design.rho_u)
    coefs = _sparse_coefs(p)
    quad = float(coefs @ sigma @ coefs)
    c_lam = calibrate_loading_scale((Lam**2).sum(axis=1), design.r2_x, np.diag(sigma))
    c_xi, c_theta = calibrate_signal_pair(float(xi @ xi), quad, design.r2_yd, design.share_y)
    c_dd, c_gd = calibrate_signal_pair(float(delta_d @ delta_d), quad, design.r2_yd, design.share_d)
    c_dz, c_gz = calibrate_signal_pair(float(delta_z @ delta_z), quad, design.r2_z, design.share_z)
    # partial R^2 of z in d given (f, U): pi^2 Var(v) / (pi^2 Var(v) + Var(eta)), both unit
    pi = math.sqrt(design.frac_z_in_d / (1.0 - design.frac_z_in_d))
    return IvParams(
        nu=float(consts[0]), mu=float(consts[1]), zeta=float(consts[2]), rho=rho,
        xi=xi, delta_d=delta_d, delta_z=delta_z, Lambda=Lam,
        theta=coefs, gamma_d=coefs, gamma_z=coefs,
        chol_u=np.linalg.cholesky(sigma), sigma_u=sigma, pi=pi,
        c_lambda=c_lam, c_xi=c_xi, c_theta=c_theta,
        c_delta_d=c_dd, c_gamma_d=c_gd, c_delta_z=c_dz, c_gamma_z=c_gz,
    )  # fmt: skip


@dataclass(frozen=True, eq=False)
class IvTruth:
    params: IvParams
    f: np.ndarray
    U: np.ndarray
    v: np.ndarray
    eps: np.ndarray
    eta: np.ndarray
    alpha: float

    @property
    def signal_y(self):
        P = self.params
        return P.c_xi * self.f @ P.xi + P.c_theta * self.U @ P.theta

    @property
    def signal_d(self):
        P = self.params
        return P.c_delta_d * self.f @ P.delta_d + P.c_gamma_d * self.U @ P.gamma_d

    @property
    def signal_z(self):
        P = self.params
        return P.c_delta_z * self.f @ P.delta_z + P.c_gamma_z * self.U @ P.gamma_z


def gen_iv(design: IvDesign, rng: np.random.Generator) -> tuple[IVDataset, IvTruth]:
    P = iv_parameters(design)
    n, K, p = design.n, design.K, design.p
    f = rng.standard_normal((n, K))
    U = rng.standard_normal((n, p)) @ P.chol_u.T
    v = rng.standard_normal(n)
    r = design.corr_eps_eta
    e1, e2 = rng.standard_normal((2, n))
    eps = e1
    eta = r * e1 + math.sqrt(1.0 - r * r) * e2
    truth = IvTruth(P, f, U, v, eps, eta, design.alpha_true)
    z = truth.signal_z + P.zeta + v
    d = P.pi * z + truth.signal_d + P.mu + eta
    y = design.alpha_true * d + truth.signal_y + P.nu + eps
    x = P.c_lambda * f @ P.Lambda.T + P.rho + U
    return IVDataset(y, d, z, x), truth


# ----------------------------------------------------------------------------
# comparison estimators


def _clustered_ratio(ry, rd, tau=0.05):
    """Coefficient, clustered SE and CI from already-partialled panels."""
    ss = float((rd * rd).sum())
    if not ss > 0:
        raise FactorLassoError("treatment has no residual variation")
    alpha = float((rd * ry).sum()) / ss
    e = ry - alpha * rd
    scores = (rd * e).sum(axis=1)
    se = math.sqrt(float(scores @ scores)) / ss
    half = float(norm.ppf(1 - tau / 2)) * se
    return {"alpha": alpha, "se": se, "ci": (alpha - half, alpha + half)}


def ols_all_x(data: PanelDataset, tau=0.05) -> dict:
    """Two-way fixed-effects OLS of ``y`` on ``d`` and every covariate."""
    n, T, p = data.x.shape
    if p >= n * T:
        raise DimensionError(f"OLS with all controls needs p < nT (p={p}, nT={n * T})")
    pan = demean_panel(data)
    X = pan.x.reshape(n * T, p)
    rank = np.linalg.matrix_rank(X)
    if rank < p:
        warnings.warn(f"covariate design has rank {rank} < p = {p}; using a pseudo-inverse", RuntimeWarning, stacklevel=2)
    ry = partial_out(X, pan.y.reshape(-1)).reshape(n, T)
    rd = partial_out(X, pan.d.reshape(-1)).reshape(n, T)
    out = _clustered_ratio(ry, rd, tau)
    out.update(K=0, support=p)
    return out


def pure_factor(data: PanelDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    """Fixed-effects OLS on ``d`` and the PCA factors interacted with period dummies."""
    config = config or FitConfig()
    pan = demean_panel(data)
    K = _choose_k(pan.x, config)
    fac = extract_factors_pca(pan.x, K)
    _, ry = factor_residuals(fac.F_hat, pan.y)
    _, rd = factor_residuals(fac.F_hat, pan.d)
    out = _clustered_ratio(ry, rd, tau)
    out.update(K=K, support=0)
    return out


def double_selection(data: PanelDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    """Fixed-effects double selection on the raw covariates (no factor step)."""
    config = config or FitConfig()
    pan = demean_panel(data)
    n, T, p = pan.x.shape
    kappa = penalty_level(n, T, p, config.c0, config.q_n)
    kw = dict(tol=config.tol, max_sweeps=config.max_sweeps)
    sy, _ = iterated_loadings_lasso(LassoProblem(pan.y, pan.x), kappa, None, config.refinements, **kw)
    sd, _ = iterated_loadings_lasso(LassoProblem(pan.d, pan.x), kappa, None, config.refinements, **kw)
    J = np.union1d(sy.support, sd.support).astype(np.intp)
    X = pan.x.reshape(n * T, p)[:, J]
    ry = partial_out(X, pan.y.reshape(-1)).reshape(n, T)
    rd = partial_out(X, pan.d.reshape(-1)).reshape(n, T)
    out = _clustered_ratio(ry, rd, tau)
    out.update(K=0, support=int(J.size))
    return out


def factor_lasso_record(data: PanelDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    fit = factor_lasso_estimate(data, replace(config or FitConfig(), tau=tau))
    return {"alpha": fit.alpha_hat, "se": fit.se, "ci": fit.ci, "K": fit.K_used, "support": int(fit.J_hat.size), "_fit": fit}


def baseline_estimators(data: PanelDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    """Comparison estimates ``{"ols_all_x": ..., "pure_factor": ...}``."""
    return {"ols_all_x": ols_all_x(data, tau), "pure_factor": pure_factor(data, config, tau)}


def _iv_record(res_tuple, tau, K, support):
    alpha, se, *_ = res_tuple
    half = float(norm.ppf(1 - tau / 2)) * se
    return {"alpha": alpha, "se": se, "ci": (alpha - half, alpha + half), "K": K, "support": support}


def iv_oracle(data: IVDataset, truth: IvTruth, tau=0.05) -> dict:
    """Infeasible IV that partials out the true confounding directions
    (intercept, factors and the three sparse combinations of ``U``)."""
    P = truth.params
    U = truth.U
    W = np.column_stack([np.ones(data.n), truth.f, U @ P.theta, U @ P.gamma_d, U @ P.gamma_z])
    parts = [partial_out(W, v) for v in (data.y, data.d, data.z)]
    return _iv_record(iv_2sls(*parts), tau, 0, 0)


def iv_pure_factor(data: IVDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    config = config or FitConfig()
    x = (data.x - data.x.mean(axis=0))[:, None, :]
    K = _choose_k(x, config)
    F = extract_factors_pca(x, K).F_hat
    parts = [partial_out(F, v - v.mean()) for v in (data.y, data.d, data.z)]
    return _iv_record(iv_2sls(*parts), tau, K, 0)


def iv_factor_lasso_record(data: IVDataset, config: FitConfig | None = None, tau=0.05) -> dict:
    fit = iv_factor_lasso(data, replace(config or FitConfig(), tau=tau))
    return {"alpha": fit.alpha_hat, "se": fit.se_alpha, "ci": fit.ci, "K": fit.K_used, "support": int(fit.J_hat.size)}


PPFM_ESTIMATORS = ("factor_lasso", "ols_all_x", "pure_factor", "double_selection")
IV_ESTIMATORS = ("factor_lasso", "oracle", "pure_factor")


# ----------------------------------------------------------------------------
# Monte Carlo driver

_FIELDS = ("alpha", "se", "ci_low", "ci_high", "K", "support")


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    design: dict
    R: int
    estimators: tuple
    metrics: dict
    records: dict = field(repr=False)

    def rows(self) -> list[dict]:
        return [{"estimator": name, **self.metrics[name]} for name in self.metrics]


def _replication_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), 1, int(r)])


def _run_one(args):
    design, estimators, r, fit_config, boot_config, tau = args
    rng = _replication_rng(design.seed, r)
    iv = isinstance(design, IvDesign)
    data, truth = (gen_iv if iv else gen_ppfm)(design, rng)
    out = {}
    for name in estimators:
        try:
            if iv:
                rec = {
                    "factor_lasso": lambda: iv_factor_lasso_record(data, fit_config, tau),
                    "oracle": lambda: iv_oracle(data, truth, tau),
                    "pure_factor": lambda: iv_pure_factor(data, fit_config, tau),
                }[name]()
            else:
                rec = {
                    "factor_lasso": lambda: factor_lasso_record(data, fit_config, tau),
                    "ols_all_x": lambda: ols_all_x(data, tau),
                    "pure_factor": lambda: pure_factor(data, fit_config, tau),
                    "double_selection": lambda: double_selection(data, fit_config, tau),
                }[name]()
        except (FactorLassoError, np.linalg.LinAlgError, ArithmeticError, ValueError):
            rec = None
        if rec is not None and name == "factor_lasso" and boot_config is not None and not iv:
            fit = rec["_fit"]
            try:
                boot = run_bootstrap(fit, fit.factors, replace(boot_config, seed=int(boot_config.seed) * 1_000_003 + r, tau=tau))
                out["factor_lasso_kboot"] = (fit.alpha_hat, math.nan, boot.ci[0], boot.ci[1], fit.K_used, fit.J_hat.size)
            except FactorLassoError:
                out["factor_lasso_kboot"] = None
        if rec is None:
            out[name] = None
        else:
            out[name] = (rec["alpha"], rec["se"], rec["ci"][0], rec["ci"][1], rec["K"], rec["support"])
    return r, out


def _summarise(arr: np.ndarray, alpha: float, cap: float) -> dict:
    ok = np.all(np.isfinite(arr[:, [0, 2, 3]]), axis=1)
    a = arr[ok]
    m = int(ok.sum())
    if m == 0:
        nan = math.nan
        return dict(rmse=nan, rmse_truncated=nan, bias=nan, size_5pct=nan, coverage_95=nan,
                    mean_ci_length=nan, mean_K=nan, mean_support_size=nan, n_ok=0, n_failed=int(arr.shape[0]))  # fmt: skip
    err = a[:, 0] - alpha
    covered = (a[:, 2] <= alpha) & (alpha <= a[:, 3])
    return {
        "rmse": float(np.sqrt(np.mean(err**2))),
        "rmse_truncated": float(np.sqrt(np.mean(np.minimum(err**2, cap**2)))),
        "bias": float(np.mean(err)),
        # 5% t-test of alpha = alpha_true rejects exactly when the 95% interval misses it
        "size_5pct": float(np.mean(~covered)),
        "coverage_95": float(np.mean(covered)),
        "mean_ci_length": float(np.mean(a[:, 3] - a[:, 2])),
        "mean_K": float(np.mean(a[:, 4])),
        "mean_support_size": float(np.mean(a[:, 5])),
        "n_ok": m,
        "n_failed": int(arr.shape[0] - m),
    }


def run_monte_carlo(
    design,
    estimators=None,
    R: int = 100,
    workers: int = 1,
    *,
    fit_config: FitConfig | None = None,
    bootstrap: BootstrapConfig | None = None,
    truncation: float | None = None,
    start: int = 0,
) -> MonteCarloReport:
    """Run ``R`` replications of ``design`` and aggregate per estimator.

    Replication ``r`` uses a generator seeded by ``(design.seed, start + r)``;
    results are collected by index so the report does not depend on
    ``workers`` or completion order.  ``size_5pct`` is the rejection rate of the
    5% t-test of the true coefficient and ``coverage_95`` its complement.
    Failed estimator calls are recorded as NaN and counted in ``n_failed``.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    iv = isinstance(design, IvDesign)
    if estimators is None:
        estimators = ("factor_lasso", "oracle") if iv else ("factor_lasso", "ols_all_x", "pure_factor")
    estimators = tuple(estimators)
    allowed = IV_ESTIMATORS if iv else PPFM_ESTIMATORS
    unknown = set(estimators) - set(allowed)
    if unknown:
        raise ValueError(f"unknown estimator(s) {sorted(unknown)}; choose from {allowed}")
    if truncation is None:
        truncation = 1.0 if iv else 0.1
    tau = 0.05
    jobs = [(design, estimators, start + r, fit_config, bootstrap, tau) for r in range(R)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, R // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda t: t[0])

    names = list(estimators)
    if bootstrap is not None and not iv and "factor_lasso" in estimators:
        names.append("factor_lasso_kboot")
    records = {}
    for name in names:
        arr = np.full((R, len(_FIELDS)), np.nan)
        for row, (_, out) in enumerate(results):
            if out.get(name) is not None:
                arr[row] = out[name]
        records[name] = arr
    metrics = {name: _summarise(records[name], design.alpha_true, truncation) for name in names}
    return MonteCarloReport(design=asdict(design), R=R, estimators=tuple(names), metrics=metrics, records=records)
