"""Cluster-lasso: plug-in penalty, clustered loadings, coordinate descent,
k-step iteration, loading refinement and post-lasso OLS.

Problems are stated on panel arrays: the response is (n, T) and the
regressors are (n, T, p).  Units are the clusters.  The penalised objective is

    (1/nT) * sum_it (r_it - U_it' g)^2 + kappa * sum_j psi_j |g_j|
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import norm

from . import _kernels
from .errors import DimensionError, DomainError, InvalidDataError

__all__ = [
    "PenaltySpec",
    "LassoProblem",
    "LassoSolution",
    "default_qn",
    "penalty_level",
    "clustered_penalty_loadings",
    "lasso_objective",
    "soft_threshold_update",
    "coordinate_descent_full",
    "k_step_iterate",
    "iterated_loadings_lasso",
    "post_lasso_ols",
    "post_lasso_fit",
]

LOADING_FLOOR = 1e-8
DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 1000
DEFAULT_REFINEMENTS = 2


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    kappa: float
    loadings: np.ndarray
    c0: float | None = None
    q_n: float | None = None

    def __post_init__(self):
        psi = np.array(self.loadings, dtype=np.float64, copy=True)
        if psi.ndim != 1:
            raise DimensionError("loadings must be a vector")
        if self.kappa < 0 or not np.all(psi > 0):
            raise DomainError("kappa must be >= 0 and loadings strictly positive")
        psi.setflags(write=False)
        object.__setattr__(self, "loadings", psi)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def half_penalty(self) -> np.ndarray:
        """Per-coordinate soft-threshold level ``kappa * psi_j / 2``."""
        return 0.5 * self.kappa * self.loadings


@dataclass(frozen=True, eq=False)
class LassoProblem:
    response: np.ndarray
    regressors: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.response, dtype=np.float64)
        U = np.asarray(self.regressors, dtype=np.float64)
        if r.ndim == 1:
            r = r[:, None]
        if U.ndim == 2:
            U = U[:, None, :]
        if U.ndim != 3 or r.shape != U.shape[:2]:
            raise DimensionError(f"response {r.shape} and regressors {U.shape} do not match")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(U))):
            raise InvalidDataError("lasso problem contains non-finite entries")
        object.__setattr__(self, "response", r)
        object.__setattr__(self, "regressors", U)

    @property
    def n(self) -> int:
        return self.response.shape[0]

    @property
    def T(self) -> int:
        return self.response.shape[1]

    @property
    def p(self) -> int:
        return self.regressors.shape[2]

    @property
    def nobs(self) -> int:
        return self.n * self.T

    @cached_property
    def design(self) -> np.ndarray:
        """Regressors stacked as (nT, p), unit-major so clusters are contiguous."""
        return np.ascontiguousarray(self.regressors.reshape(self.nobs, self.p))

    @cached_property
    def target(self) -> np.ndarray:
        return self.response.reshape(self.nobs)

    @cached_property
    def gram(self) -> np.ndarray:
        X = self.design
        return X.T @ X / self.nobs

    @cached_property
    def corr(self) -> np.ndarray:
        return self.design.T @ self.target / self.nobs

    @cached_property
    def skip(self) -> np.ndarray:
        """Columns with (numerically) zero sum of squares; held at zero."""
        diag = np.diag(self.gram)
        top = diag.max() if diag.size else 0.0
        if top <= 0:
            return np.ones(self.p, dtype=bool)
        return diag <= 1e-14 * top


@dataclass(frozen=True, eq=False)
class LassoSolution:
    gamma: np.ndarray
    objective: float
    sweeps: int
    converged: bool = True

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.gamma)


def default_qn(n: int) -> float:
    return 0.1 / math.log(n)


def penalty_level(n: int, T: int, p: int, c0: float = 1.1, q_n: float | None = None) -> float:
    """Plug-in penalty ``(2 c0 / sqrt(nT)) * Phi^{-1}(1 - q_n / (2p))``.

    ``q_n`` defaults to ``0.1 / log(n)``.
    """
    if n * T < 1 or p < 1:
        raise DimensionError("need nT >= 1 and p >= 1")
    if c0 < 1:
        raise DomainError(f"c0 must be >= 1, got {c0}")
    if q_n is None:
        q_n = default_qn(n)
    arg = q_n / (2 * p)
    if not 0 < arg < 1:
        raise DomainError(f"q_n / (2p) = {arg} must lie in (0, 1)")
    return float(2 * c0 / math.sqrt(n * T) * norm.ppf(1 - arg))


def clustered_penalty_loadings(U_hat, resid) -> np.ndarray:
    """Cluster-robust penalty loadings.

    ``psi_j = sqrt( (1/nT) * sum_i (sum_t U_itj r_it)^2 )``.  Entries below
    ``1e-8 * max_j psi_j`` are raised to that floor with a warning; if every
    entry is zero the loadings default to one.
    """
    U = np.asarray(U_hat, dtype=np.float64)
    r = np.asarray(resid, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    if U.ndim == 2:
        U = U[:, None, :]
    if U.shape[:2] != r.shape:
        raise DimensionError(f"U_hat {U.shape} and resid {r.shape} do not match")
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(r))):
        raise InvalidDataError("non-finite input to penalty loadings")
    n, T = r.shape
    scores = np.einsum("itj,it->ij", U, r)
    psi = np.sqrt((scores**2).sum(axis=0) / (n * T))
    top = psi.max()
    if top <= 0:
        warnings.warn("all penalty loadings are zero; using unit loadings", RuntimeWarning, stacklevel=2)
        return np.ones_like(psi)
    floor = LOADING_FLOOR * top
    low = psi < floor
    if low.any():
        warnings.warn(
            f"{int(low.sum())} penalty loading(s) floored at {floor:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
        psi = np.where(low, floor, psi)
    return psi


def lasso_objective(problem: LassoProblem, penalty: PenaltySpec, gamma) -> float:
    gamma = np.asarray(gamma, dtype=np.float64)
    resid = problem.target - problem.design @ gamma
    return float(resid @ resid / problem.nobs + penalty.kappa * np.abs(penalty.loadings * gamma).sum())


def soft_threshold_update(problem: LassoProblem, penalty: PenaltySpec, gamma_current, j: int) -> float:
    """Exact minimiser over coordinate ``j`` with the others held fixed.

    ``sign(s) (|s| - kappa psi_j / 2)_+ / ((1/nT) sum U_j^2)`` where ``s`` is
    the mean product of column ``j`` with the partial residual.
    """
    g = np.asarray(gamma_current, dtype=np.float64)
    X = problem.design
    a = float(X[:, j] @ X[:, j]) / problem.nobs
    if a <= 0:
        return 0.0
    partial = problem.target - X @ g + X[:, j] * g[j]
    s = float(X[:, j] @ partial) / problem.nobs
    return _kernels.soft_threshold(s, penalty.half_penalty[j]) / a


def _check_penalty(problem, penalty):
    if penalty.loadings.shape != (problem.p,):
        raise DimensionError(f"loadings length {penalty.loadings.size} != p = {problem.p}")


def _start(problem, init):
    if init is None:
        return np.zeros(problem.p)
    g = np.array(init, dtype=np.float64, copy=True)
    if g.shape != (problem.p,):
        raise DimensionError(f"init has shape {g.shape}, expected ({problem.p},)")
    g[problem.skip] = 0.0
    return g


def coordinate_descent_full(
    problem: LassoProblem,
    penalty: PenaltySpec,
    init=None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> LassoSolution:
    """Cyclic coordinate descent run until the largest coordinate change in a
    sweep falls below ``tol`` or ``max_sweeps`` sweeps have been made."""
    if tol <= 0 or max_sweeps < 1:
        raise DomainError("tol must be > 0 and max_sweeps >= 1")
    _check_penalty(problem, penalty)
    gamma = _start(problem, init)
    sweeps, change = _kernels.cd_sweeps(
        problem.gram, problem.corr, penalty.half_penalty, problem.skip, gamma, max_sweeps, tol
    )
    return LassoSolution(
        gamma=gamma,
        objective=lasso_objective(problem, penalty, gamma),
        sweeps=int(sweeps),
        converged=bool(change < tol),
    )


def k_step_iterate(problem: LassoProblem, penalty: PenaltySpec, init, k: int) -> LassoSolution:
    """Exactly ``k`` coordinate-descent sweeps starting from ``init``."""
    if k < 0:
        raise DomainError("k must be >= 0")
    _check_penalty(problem, penalty)
    if k == 0:
        gamma = np.array(init, dtype=np.float64, copy=True)
        return LassoSolution(gamma, lasso_objective(problem, penalty, gamma), 0, False)
    gamma = _start(problem, init)
    _kernels.cd_sweeps(problem.gram, problem.corr, penalty.half_penalty, problem.skip, gamma, k, 0.0)
    return LassoSolution(gamma, lasso_objective(problem, penalty, gamma), int(k), False)


def post_lasso_ols(U_J, response) -> np.ndarray:
    """OLS of ``response`` on the selected columns (minimum-norm solution when
    the selected Gram matrix is rank deficient)."""
    r = np.asarray(response, dtype=np.float64).reshape(-1)
    U_J = np.asarray(U_J, dtype=np.float64)
    X = U_J.reshape(r.size, -1)
    if X.shape[1] == 0:
        return np.zeros(0)
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    return coef


def post_lasso_fit(problem: LassoProblem, support) -> tuple[np.ndarray, np.ndarray]:
    """Post-lasso coefficients over ``support`` and the (n, T) residual."""
    support = np.asarray(support, dtype=np.intp)
    X = problem.design[:, support]
    coef = post_lasso_ols(X, problem.target)
    resid = problem.target - X @ coef
    return coef, resid.reshape(problem.n, problem.T)


def iterated_loadings_lasso(
    problem: LassoProblem,
    kappa: float,
    preliminary_resid=None,
    n_refinements: int = DEFAULT_REFINEMENTS,
    *,
    c0: float | None = None,
    q_n: float | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[LassoSolution, PenaltySpec]:
    """Lasso with loadings re-estimated from post-lasso residuals.

    Starting from ``preliminary_resid`` (the response itself by default),
    each round builds clustered loadings from the current residuals, solves
    the lasso, and replaces the residuals with those of post-lasso OLS on the
    selected support.  Returns the last solution and the loadings it used.
    """
    if n_refinements < 1:
        raise DomainError("n_refinements must be >= 1")
    resid = problem.response if preliminary_resid is None else np.asarray(preliminary_resid, dtype=np.float64)
    sol = None
    pen = None
    for _ in range(n_refinements):
        psi = clustered_penalty_loadings(problem.regressors, resid)
        pen = PenaltySpec(kappa, psi, c0, q_n)
        sol = coordinate_descent_full(
            problem, pen, init=None if sol is None else sol.gamma, tol=tol, max_sweeps=max_sweeps
        )
        _, resid = post_lasso_fit(problem, sol.support)
    return sol, pen
