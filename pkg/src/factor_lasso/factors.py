"""Principal-components factor extraction on a demeaned covariate panel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrumError, DimensionError, NumericalError, SingularityError

__all__ = [
    "FactorEstimate",
    "gram_eigen",
    "extract_factors_pca",
    "select_num_factors_er",
    "default_k_max",
    "project_on_factors",
    "factor_fit",
]

_ZERO_EIG = 1e-12


@dataclass(frozen=True, eq=False)
class FactorEstimate:
    """Estimated factors and idiosyncratic residuals.

    Attributes
    ----------
    F_hat : (n, K) array, normalised so that ``F_hat.T @ F_hat / n = I``.
    Lambda_hat : (T, p, K) array of per-period loadings.
    U_hat : (n, T, p) array, ``x_tilde - Lambda_hat f_hat``.
    eigvals : nonincreasing eigenvalues of the (n, n) Gram matrix
        ``X X' / (n p T)``, length ``min(n, pT)``.
    """

    K: int
    F_hat: np.ndarray
    Lambda_hat: np.ndarray
    U_hat: np.ndarray
    eigvals: np.ndarray

    @property
    def n(self) -> int:
        return self.F_hat.shape[0]


def gram_eigen(x_tilde) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the unit-by-unit Gram matrix ``X X'/(npT)``.

    Returns eigenvalues in nonincreasing order (truncated to ``min(n, pT)``)
    and the matching eigenvectors as columns.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_tilde.ndim != 3:
        raise DimensionError(f"x_tilde must be (n, T, p), got {x_tilde.shape}")
    n, T, p = x_tilde.shape
    flat = x_tilde.reshape(n, T * p)
    gram = flat @ flat.T / (n * p * T)
    try:
        vals, vecs = scipy.linalg.eigh(gram)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = slice(None, None, -1)
    vals, vecs = vals[order], vecs[:, order]
    m = min(n, T * p)
    vals = np.maximum(vals[:m], 0.0)
    return vals, vecs[:, :m]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive (first one on ties)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def factor_fit(x_tilde: np.ndarray, F_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares loadings and residuals given factors.

    ``Lambda_t = sum_i x_it f_i' (F'F)^{-1}`` and ``U_it = x_it - Lambda_t f_i``.
    """
    n, T, p = x_tilde.shape
    K = F_hat.shape[1]
    flat = x_tilde.reshape(n, T * p)
    coef = np.linalg.solve(F_hat.T @ F_hat, F_hat.T @ flat)  # (K, T*p)
    lam = coef.T.reshape(T, p, K)
    U = (flat - F_hat @ coef).reshape(n, T, p)
    return lam, U


def extract_factors_pca(x_tilde, K: int) -> FactorEstimate:
    """Extract ``K`` principal-component factors from the (n, T, p) panel.

    Columns of ``F_hat / sqrt(n)`` are the leading eigenvectors of
    ``X X'/(npT)``, with each column's largest entry made positive.  The
    loadings and residuals follow by per-period least squares.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_tilde.ndim != 3:
        raise DimensionError(f"x_tilde must be (n, T, p), got {x_tilde.shape}")
    n, T, p = x_tilde.shape
    K = int(K)
    if not 1 <= K <= min(n - 1, p * T):
        raise DimensionError(f"K={K} outside [1, min(n-1, pT)] = [1, {min(n - 1, p * T)}]")
    vals, vecs = gram_eigen(x_tilde)
    F_hat = np.sqrt(n) * _fix_signs(vecs[:, :K])
    lam, U = factor_fit(x_tilde, F_hat)
    return FactorEstimate(K=K, F_hat=F_hat, Lambda_hat=lam, U_hat=U, eigvals=vals)


def default_k_max(n: int, n_eigvals: int | None = None) -> int:
    k = min(8, n - 2)
    if n_eigvals is not None:
        k = min(k, n_eigvals - 1)
    return max(k, 1)


def select_num_factors_er(x_tilde=None, K_max: int | None = None, *, eigvals=None) -> int:
    """Eigenvalue-ratio choice of the number of factors.

    Returns the ``k`` in ``1..K_max`` maximising ``eig[k] / eig[k+1]``
    (1-based), breaking ties toward the smallest ``k``.  Either the panel
    or a precomputed nonincreasing spectrum may be supplied.

    Eigenvalues below ``1e-12 * eig[1]`` are treated as exact zeros: a
    positive eigenvalue followed by a zero one gives an infinite ratio, and
    a ratio of two zeros is ignored.
    """
    if eigvals is None:
        if x_tilde is None:
            raise ValueError("supply x_tilde or eigvals")
        eigvals, _ = gram_eigen(x_tilde)
    ev = np.asarray(eigvals, dtype=np.float64)
    if K_max is None:
        n = np.asarray(x_tilde).shape[0] if x_tilde is not None else ev.size
        K_max = default_k_max(n, ev.size)
    K_max = int(K_max)
    if K_max < 1 or K_max + 1 > ev.size:
        raise DimensionError(f"K_max={K_max} needs K_max + 1 <= {ev.size} eigenvalues")
    if ev[0] < _ZERO_EIG:
        raise DegenerateSpectrumError("all eigenvalues are numerically zero")
    ev = np.where(ev < _ZERO_EIG * ev[0], 0.0, ev)
    num, den = ev[:K_max], ev[1 : K_max + 1]
    ratios = np.full(K_max, -np.inf)
    pos = den > 0
    ratios[pos] = num[pos] / den[pos]
    ratios[~pos & (num > 0)] = np.inf
    return int(np.argmax(ratios)) + 1


def project_on_factors(F_hat, panel_var) -> np.ndarray:
    """Per-period OLS coefficients of ``panel_var[:, t]`` on ``F_hat``.

    Returns a (T, K) array whose row ``t`` is ``(F'F)^{-1} F' v_t``.
    """
    F_hat = np.asarray(F_hat, dtype=np.float64)
    v = np.asarray(panel_var, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    ftf = F_hat.T @ F_hat
    if np.linalg.cond(ftf) > 1e12:
        raise SingularityError("F_hat'F_hat is numerically singular")
    return np.linalg.solve(ftf, F_hat.T @ v).T
