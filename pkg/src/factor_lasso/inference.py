"""Factor-lasso point estimate of the treatment coefficient with clustered
asymptotic standard errors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import DegenerateTreatmentError, DomainError
from .factors import (
    FactorEstimate,
    default_k_max,
    extract_factors_pca,
    gram_eigen,
    project_on_factors,
    select_num_factors_er,
)
from .lasso import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_REFINEMENTS,
    DEFAULT_TOL,
    LassoProblem,
    LassoSolution,
    PenaltySpec,
    iterated_loadings_lasso,
    penalty_level,
    post_lasso_ols,
)
from .panel import DemeanedPanel, PanelDataset, demean_panel

__all__ = [
    "FitConfig",
    "FactorLassoFit",
    "post_double_select",
    "estimate_alpha",
    "clustered_variance",
    "asymptotic_ci",
    "factor_lasso_estimate",
    "factor_residuals",
    "joint_ols_alpha",
]


@dataclass(frozen=True)
class FitConfig:
    """Tuning for :func:`factor_lasso_estimate`.

    ``k=None`` selects the factor count by eigenvalue ratio with ``k_max``
    (default ``min(8, n - 2)``).  ``q_n=None`` means ``0.1 / log(n)``.
    """

    k: int | None = None
    k_max: int | None = None
    c0: float = 1.1
    q_n: float | None = None
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    refinements: int = DEFAULT_REFINEMENTS
    tau: float = 0.05
    kappa: float | None = None  # overrides the plug-in level when set

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise DomainError("k must be >= 1")
        if self.c0 < 1:
            raise DomainError("c0 must be >= 1")
        if self.q_n is not None and not 0 < self.q_n < 1:
            raise DomainError("q_n must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise DomainError("tau must lie in (0, 1]")
        if self.refinements < 1:
            raise DomainError("refinements must be >= 1")


@dataclass(frozen=True, eq=False)
class FactorLassoFit:
    alpha_hat: float
    J_hat: np.ndarray
    gamma_y_post: np.ndarray
    gamma_d_post: np.ndarray
    e_hat: np.ndarray
    eta_hat: np.ndarray
    eps_hat: np.ndarray
    sigma_eta_eps: float
    sigma_eta_sq: float
    se: float
    ci: tuple[float, float]
    K_used: int
    delta_y: np.ndarray
    delta_d: np.ndarray
    lasso_y: LassoSolution
    lasso_d: LassoSolution
    penalty_y: PenaltySpec
    penalty_d: PenaltySpec
    kappa: float
    tau: float
    panel: DemeanedPanel = field(repr=False)
    factors: FactorEstimate = field(repr=False)

    @property
    def n(self) -> int:
        return self.e_hat.shape[0]

    @property
    def T(self) -> int:
        return self.e_hat.shape[1]

    @property
    def p(self) -> int:
        return self.lasso_y.gamma.size

    def embed(self, coef_J) -> np.ndarray:
        """Place a coefficient vector over ``J_hat`` into a length-p vector."""
        full = np.zeros(self.p)
        full[self.J_hat] = coef_J
        return full


def post_double_select(sol_y: LassoSolution, sol_d: LassoSolution) -> np.ndarray:
    """Sorted union of the two lasso supports."""
    if sol_y.gamma.shape != sol_d.gamma.shape:
        raise DomainError("lasso solutions have different dimensions")
    return np.union1d(sol_y.support, sol_d.support).astype(np.intp)


def estimate_alpha(eta_hat, e_hat) -> float:
    """``sum(eta * e) / sum(eta^2)`` over all unit-periods."""
    eta = np.asarray(eta_hat, dtype=np.float64).ravel()
    e = np.asarray(e_hat, dtype=np.float64).ravel()
    ss = float(eta @ eta)
    if not ss > 0:
        raise DegenerateTreatmentError("treatment residual is identically zero")
    return float(eta @ e) / ss


def clustered_variance(eta_hat, eps_hat) -> tuple[float, float]:
    """Unit-clustered variance components.

    Returns ``(sigma_eta_eps, sigma_eta_sq)`` with
    ``sigma_eta_eps = (1/nT) sum_i (sum_t eta_it eps_it)^2`` and
    ``sigma_eta_sq = (1/nT) sum_it eta_it^2``.
    """
    eta = np.asarray(eta_hat, dtype=np.float64)
    eps = np.asarray(eps_hat, dtype=np.float64)
    if eta.ndim == 1:
        eta, eps = eta[:, None], eps[:, None]
    if eta.shape != eps.shape:
        raise DomainError(f"shape mismatch {eta.shape} vs {eps.shape}")
    nT = eta.size
    scores = (eta * eps).sum(axis=1)
    return float(scores @ scores) / nT, float((eta * eta).sum()) / nT


def asymptotic_ci(alpha_hat, sigma_eta_eps, sigma_eta_sq, n, T, tau=0.05) -> tuple[float, float]:
    """``alpha_hat -/+ Phi^{-1}(1 - tau/2) * sqrt(sigma_eta_eps) / sigma_eta_sq / sqrt(nT)``."""
    if not 0 < tau <= 1:
        raise DomainError("tau must lie in (0, 1]")
    if not sigma_eta_sq > 0:
        raise DegenerateTreatmentError("sigma_eta_sq must be positive")
    half = float(norm.ppf(1 - tau / 2)) * math.sqrt(sigma_eta_eps) / sigma_eta_sq / math.sqrt(n * T)
    return (float(alpha_hat - half), float(alpha_hat + half))


def factor_residuals(F_hat, v) -> tuple[np.ndarray, np.ndarray]:
    """Per-period projections of ``v`` on the factors and the residual panel."""
    delta = project_on_factors(F_hat, v)
    return delta, v - F_hat @ delta.T


def _cap_support(J, sol_y, sol_d, nobs):
    if J.size <= nobs:
        return J
    warnings.warn(
        f"selected {J.size} controls for {nobs} observations; keeping the {nobs} largest",
        RuntimeWarning,
        stacklevel=3,
    )
    size = np.maximum(np.abs(sol_y.gamma[J]), np.abs(sol_d.gamma[J]))
    keep = np.argsort(-size, kind="stable")[:nobs]
    return np.sort(J[keep])


def _double_selection_stage(U, ry, rd, sol_y, sol_d):
    """Post-double-selection OLS; shared by the estimator and the bootstrap."""
    n, T, p = U.shape
    J = _cap_support(post_double_select(sol_y, sol_d), sol_y, sol_d, n * T)
    U_J = U.reshape(n * T, p)[:, J]
    gy = post_lasso_ols(U_J, ry)
    gd = post_lasso_ols(U_J, rd)
    e_hat = ry - (U_J @ gy).reshape(n, T)
    eta_hat = rd - (U_J @ gd).reshape(n, T)
    return J, gy, gd, e_hat, eta_hat


def _check_treatment(eta_hat, rd, exc=DegenerateTreatmentError):
    ss = float((eta_hat * eta_hat).sum())
    scale = float((rd * rd).sum())
    if not ss > 1e-24 * max(scale, 1e-300):
        raise exc("treatment residual is numerically zero after partialling out controls")


def _choose_k(x_tilde, config: FitConfig) -> int:
    if config.k is not None:
        return int(config.k)
    vals, _ = gram_eigen(x_tilde)
    k_max = config.k_max if config.k_max is not None else default_k_max(x_tilde.shape[0], vals.size)
    return select_num_factors_er(eigvals=vals, K_max=k_max)


def factor_lasso_estimate(data: PanelDataset, config: FitConfig | None = None) -> FactorLassoFit:
    """Run the full factor-lasso pipeline.

    Within-transform; extract PCA factors; partial the factors out of the
    outcome and treatment period by period; cluster-lasso each residual on
    the factor residuals ``U_hat``; OLS on the union of selected columns;
    ratio estimator and clustered confidence interval.
    """
    config = config or FitConfig()
    panel = demean_panel(data)
    n, T, p = panel.x.shape
    K = _choose_k(panel.x, config)
    factors = extract_factors_pca(panel.x, K)
    F, U = factors.F_hat, factors.U_hat

    delta_y, ry = factor_residuals(F, panel.y)
    delta_d, rd = factor_residuals(F, panel.d)

    kappa = config.kappa
    if kappa is None:
        kappa = penalty_level(n, T, p, config.c0, config.q_n)
    lasso_kw = dict(c0=config.c0, q_n=config.q_n, tol=config.tol, max_sweeps=config.max_sweeps)
    sol_y, pen_y = iterated_loadings_lasso(LassoProblem(ry, U), kappa, None, config.refinements, **lasso_kw)
    sol_d, pen_d = iterated_loadings_lasso(LassoProblem(rd, U), kappa, None, config.refinements, **lasso_kw)

    J, gy, gd, e_hat, eta_hat = _double_selection_stage(U, ry, rd, sol_y, sol_d)
    _check_treatment(eta_hat, rd)
    alpha = estimate_alpha(eta_hat, e_hat)
    eps_hat = e_hat - alpha * eta_hat
    s_ee, s_eta2 = clustered_variance(eta_hat, eps_hat)
    se = math.sqrt(s_ee) / s_eta2 / math.sqrt(n * T)
    ci = asymptotic_ci(alpha, s_ee, s_eta2, n, T, config.tau)
    return FactorLassoFit(
        alpha_hat=alpha,
        J_hat=J,
        gamma_y_post=gy,
        gamma_d_post=gd,
        e_hat=e_hat,
        eta_hat=eta_hat,
        eps_hat=eps_hat,
        sigma_eta_eps=s_ee,
        sigma_eta_sq=s_eta2,
        se=se,
        ci=ci,
        K_used=K,
        delta_y=delta_y,
        delta_d=delta_d,
        lasso_y=sol_y,
        lasso_d=sol_d,
        penalty_y=pen_y,
        penalty_d=pen_d,
        kappa=float(kappa),
        tau=config.tau,
        panel=panel,
        factors=factors,
    )


def joint_ols_alpha(panel: DemeanedPanel, factors: FactorEstimate, J) -> float:
    """Coefficient on the treatment in one pooled OLS of ``y~`` on ``d~``,
    the factors interacted with period dummies, and ``U_hat[:, :, J]``.

    Independent of the ratio form; used to cross-check it.
    """
    n, T, p = panel.x.shape
    K = factors.K
    # (i, t) row; block t of the interaction holds f_i in period t only
    inter = np.zeros((n, T, T, K))
    inter[:, np.arange(T), np.arange(T), :] = factors.F_hat[:, None, :]
    Z = np.column_stack(
        [
            panel.d.reshape(n * T),
            inter.reshape(n * T, T * K),
            factors.U_hat.reshape(n * T, p)[:, np.asarray(J, dtype=np.intp)],
        ]
    )
    coef, *_ = np.linalg.lstsq(Z, panel.y.reshape(n * T), rcond=None)
    return float(coef[0])
