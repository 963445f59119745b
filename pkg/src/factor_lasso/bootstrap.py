"""k-step wild bootstrap for the factor-lasso estimate.

Each replicate rebuilds a panel from the fitted model with unit-level
multiplier weights on the three residual components, re-extracts factors,
and replaces the full lasso solves by ``k`` coordinate-descent sweeps that
start from the original solutions with the original penalty frozen.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BootstrapFailureError, DegenerateTreatmentError, DimensionError, DomainError, ReplicateDegenerateError
from .factors import FactorEstimate, extract_factors_pca
from .inference import (
    FactorLassoFit,
    _check_treatment,
    _double_selection_stage,
    estimate_alpha,
    factor_residuals,
)
from .lasso import LassoProblem, coordinate_descent_full, k_step_iterate
from .panel import DemeanedPanel

__all__ = [
    "BootstrapConfig",
    "BootstrapResult",
    "mammen_transform",
    "mammen_weights",
    "rademacher_weights",
    "generate_bootstrap_panel",
    "replicate_from_weights",
    "bootstrap_replicate",
    "bootstrap_ci",
    "run_bootstrap",
    "replicate_rng",
]

WEIGHT_SCHEMES = ("mammen", "rademacher")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    k: int = 15
    tau: float = 0.05
    seed: int = 0
    weight_scheme: str = "mammen"

    def __post_init__(self):
        if self.B < 1 or self.k < 1:
            raise DomainError("B and k must be >= 1")
        if not 0 < self.tau < 1:
            raise DomainError("tau must lie in (0, 1)")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise DomainError(f"weight_scheme must be one of {WEIGHT_SCHEMES}")


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    draws: np.ndarray
    q_star: float
    ci: tuple[float, float]
    n_degenerate: int
    alpha_hat: float
    tau: float

    def summary(self) -> dict:
        d = self.draws
        return {
            "B": int(d.size),
            "mean": float(d.mean()),
            "sd": float(d.std(ddof=1)) if d.size > 1 else 0.0,
            "min": float(d.min()),
            "max": float(d.max()),
        }


def mammen_transform(z1, z2):
    """Mammen-type multiplier from two standard normals:
    ``z1 / sqrt(2) + (z2^2 - 1) / 2`` (mean 0, variance 1)."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    return z1 / math.sqrt(2.0) + (z2 * z2 - 1.0) / 2.0


def mammen_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((2, n))
    return mammen_transform(z[0], z[1])


def rademacher_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=n)


_WEIGHTS = {"mammen": mammen_weights, "rademacher": rademacher_weights}


def replicate_rng(seed: int, b: int, attempt: int = 0) -> np.random.Generator:
    """Generator for replicate ``b``; a pure function of ``(seed, b, attempt)``."""
    return np.random.default_rng([int(seed), int(b), int(attempt)])


def generate_bootstrap_panel(fit: FactorLassoFit, factors: FactorEstimate, wU, wY, wD) -> DemeanedPanel:
    """Bootstrap sample from the fitted model.

    ``U* = wU_i U_hat``, ``eta* = wD_i eta_hat``, ``eps* = wY_i eps_hat``;
    ``x* = Lambda_t f_i + U*``, ``d* = delta_dt' f_i + U*' gamma_d + eta*`` and
    ``y* = alpha d* + xi_t' f_i + U*' theta + eps*`` with
    ``xi_t = delta_yt - alpha delta_dt`` and ``theta = gamma_y - alpha gamma_d``.
    """
    n, T, p = factors.U_hat.shape
    ws = [np.asarray(w, dtype=np.float64).reshape(-1) for w in (wU, wY, wD)]
    if any(w.size != n for w in ws):
        raise DimensionError(f"weight vectors must have length n = {n}")
    if fit.eta_hat.shape != (n, T):
        raise DimensionError("fit and factor estimate come from different panels")
    wU, wY, wD = ws
    F = factors.F_hat
    alpha = fit.alpha_hat
    gamma_d = fit.embed(fit.gamma_d_post)
    theta = fit.embed(fit.gamma_y_post) - alpha * gamma_d
    xi = fit.delta_y - alpha * fit.delta_d

    U_star = wU[:, None, None] * factors.U_hat
    common = np.einsum("ik,tpk->itp", F, factors.Lambda_hat)
    x_star = common + U_star
    d_star = F @ fit.delta_d.T + U_star @ gamma_d + wD[:, None] * fit.eta_hat
    y_star = alpha * d_star + F @ xi.T + U_star @ theta + wY[:, None] * fit.eps_hat
    return DemeanedPanel(y_star, d_star, x_star, T_eq_1=fit.panel.T_eq_1)


def replicate_from_weights(
    fit: FactorLassoFit,
    factors: FactorEstimate,
    wU,
    wY,
    wD,
    k: int = 15,
    *,
    full_lasso: bool = False,
    tol: float = 1e-10,
) -> float:
    """Bootstrap estimate for fixed weights.

    With ``full_lasso=True`` the two lassos are solved to convergence (same
    frozen penalty and warm start) instead of taking ``k`` sweeps.
    """
    star = generate_bootstrap_panel(fit, factors, wU, wY, wD)
    fac = extract_factors_pca(star.x, factors.K)
    _, ry = factor_residuals(fac.F_hat, star.y)
    _, rd = factor_residuals(fac.F_hat, star.d)
    prob_y = LassoProblem(ry, fac.U_hat)
    prob_d = LassoProblem(rd, fac.U_hat)
    if full_lasso:
        sol_y = coordinate_descent_full(prob_y, fit.penalty_y, fit.lasso_y.gamma, tol=tol, max_sweeps=100_000)
        sol_d = coordinate_descent_full(prob_d, fit.penalty_d, fit.lasso_d.gamma, tol=tol, max_sweeps=100_000)
    else:
        sol_y = k_step_iterate(prob_y, fit.penalty_y, fit.lasso_y.gamma, k)
        sol_d = k_step_iterate(prob_d, fit.penalty_d, fit.lasso_d.gamma, k)
    _, _, _, e_hat, eta_hat = _double_selection_stage(fac.U_hat, ry, rd, sol_y, sol_d)
    _check_treatment(eta_hat, rd, ReplicateDegenerateError)
    return estimate_alpha(eta_hat, e_hat)


def bootstrap_replicate(
    fit: FactorLassoFit, factors: FactorEstimate, config: BootstrapConfig, rng: np.random.Generator
) -> float:
    """One k-step wild bootstrap draw of the treatment coefficient."""
    n = factors.n
    draw = _WEIGHTS[config.weight_scheme]
    wU = draw(rng, n)
    wY = draw(rng, n)
    wD = draw(rng, n)
    return replicate_from_weights(fit, factors, wU, wY, wD, config.k)


def bootstrap_ci(draws, alpha_hat: float, n: int, T: int, tau: float) -> tuple[float, tuple[float, float]]:
    """Symmetric percentile interval ``alpha_hat -/+ q* / sqrt(nT)``.

    ``q*`` is the smallest order statistic of ``sqrt(nT) |draw - alpha_hat|``
    with at least ``ceil((1 - tau) B)`` values at or below it.
    """
    draws = np.asarray(draws, dtype=np.float64)
    B = draws.size
    if B < 1:
        raise DomainError("need at least one bootstrap draw")
    root = math.sqrt(n * T)
    stats = np.sort(root * np.abs(draws - alpha_hat))
    rank = math.ceil(round((1 - tau) * B, 9))
    q_star = float(stats[min(max(rank, 1), B) - 1])
    half = q_star / root
    return q_star, (alpha_hat - half, alpha_hat + half)


def _one(fit, factors, config, b):
    attempt = 0
    while True:
        rng = replicate_rng(config.seed, b, attempt)
        try:
            return bootstrap_replicate(fit, factors, config, rng), attempt
        except DegenerateTreatmentError:
            attempt += 1
            if attempt > config.B:
                raise BootstrapFailureError(f"replicate {b} degenerate on every redraw") from None


def run_bootstrap(
    fit: FactorLassoFit,
    factors: FactorEstimate | None = None,
    config: BootstrapConfig | None = None,
    workers: int = 1,
) -> BootstrapResult:
    """Collect ``B`` k-step bootstrap draws and form the percentile interval.

    Degenerate replicates are redrawn from a fresh sub-stream and counted;
    more than ``B/2`` of them aborts the run.  Results depend only on
    ``config`` (not on ``workers``).
    """
    config = config or BootstrapConfig()
    factors = factors if factors is not None else fit.factors
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda b: _one(fit, factors, config, b), range(config.B)))
    else:
        out = [_one(fit, factors, config, b) for b in range(config.B)]
    draws = np.array([a for a, _ in out])
    n_degenerate = int(sum(att for _, att in out))
    if n_degenerate > config.B / 2:
        raise BootstrapFailureError(f"{n_degenerate} degenerate replicates out of B = {config.B}")
    q_star, ci = bootstrap_ci(draws, fit.alpha_hat, fit.n, fit.T, config.tau)
    return BootstrapResult(draws, q_star, ci, n_degenerate, fit.alpha_hat, config.tau)
