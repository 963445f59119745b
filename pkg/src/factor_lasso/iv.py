"""Cross-sectional instrumental-variables version of the factor-lasso.

Factors and factor residuals are extracted from the controls; outcome,
endogenous regressor and instrument each get a cluster-lasso (with one
period the clustered loadings reduce to heteroskedasticity-robust ones);
the union of the three supports plus the factors is partialled out of all
three variables and the treatment effect is estimated by just-identified
2SLS with HC0 standard errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import DimensionError, InvalidDataError, ParseError, WeakInstrumentError
from .factors import extract_factors_pca
from .inference import FitConfig, _choose_k, factor_residuals
from .lasso import LassoProblem, iterated_loadings_lasso, penalty_level

__all__ = ["IVDataset", "IVFit", "iv_factor_lasso", "iv_2sls", "partial_out", "load_iv_csv"]


@dataclass(frozen=True, eq=False)
class IVDataset:
    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        vecs = [np.array(v, dtype=np.float64, copy=True).reshape(-1) for v in (self.y, self.d, self.z)]
        x = np.array(self.x, dtype=np.float64, copy=True)
        n = vecs[0].size
        if x.ndim != 2 or x.shape[0] != n or any(v.size != n for v in vecs):
            raise DimensionError("y, d, z must be length-n vectors and x an (n, p) matrix")
        if n < 3:
            raise DimensionError("need n >= 3")
        if not all(np.all(np.isfinite(a)) for a in (*vecs, x)):
            raise InvalidDataError("IV data contain non-finite entries")
        for name, arr in zip(("y", "d", "z", "x"), (*vecs, x)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class IVFit:
    alpha_hat: float
    se_alpha: float
    ci: tuple[float, float]
    pi_hat: float
    se_pi: float
    first_stage_F: float
    J_hat: np.ndarray
    K_used: int
    kappa: float
    supports: dict


def partial_out(W, v) -> np.ndarray:
    """Residual of ``v`` after least-squares projection on the columns of ``W``."""
    v = np.asarray(v, dtype=np.float64)
    if W.shape[1] == 0:
        return v.copy()
    coef, *_ = np.linalg.lstsq(W, v, rcond=None)
    return v - W @ coef


def iv_2sls(y, d, z) -> tuple[float, float, float, float, float]:
    """Just-identified IV on already-partialled variables (no intercept).

    Returns ``(alpha, se_alpha, pi, se_pi, F)`` with HC0 standard errors;
    ``F`` is the squared first-stage t statistic.
    """
    y, d, z = (np.asarray(a, dtype=np.float64) for a in (y, d, z))
    zz = float(z @ z)
    zd = float(z @ d)
    scale = max(float(d @ d), float(y @ y), 1e-300)
    if not zz > 1e-24 * scale:
        raise WeakInstrumentError("partialled instrument has no variation")
    if zd == 0.0:
        raise WeakInstrumentError("partialled instrument is orthogonal to the endogenous variable")
    alpha = float(z @ y) / zd
    u = y - alpha * d
    se_alpha = math.sqrt(float((z * z) @ (u * u))) / abs(zd)
    pi = zd / zz
    v = d - pi * z
    se_pi = math.sqrt(float((z * z) @ (v * v))) / zz
    if se_pi > 0:
        F = (pi / se_pi) ** 2
    else:
        F = math.inf if pi != 0 else math.nan
    return alpha, se_alpha, pi, se_pi, F


def iv_factor_lasso(data: IVDataset, config: FitConfig | None = None) -> IVFit:
    config = config or FitConfig()
    n, p = data.x.shape
    x = (data.x - data.x.mean(axis=0))[:, None, :]
    cols = {name: (v - v.mean())[:, None] for name, v in (("y", data.y), ("d", data.d), ("z", data.z))}
    if not np.any(cols["z"]):
        raise WeakInstrumentError("instrument has zero variance")

    K = _choose_k(x, config)
    fac = extract_factors_pca(x, K)
    kappa = config.kappa if config.kappa is not None else penalty_level(n, 1, p, config.c0, config.q_n)
    supports = {}
    for name, v in cols.items():
        _, r = factor_residuals(fac.F_hat, v)
        sol, _ = iterated_loadings_lasso(
            LassoProblem(r, fac.U_hat),
            kappa,
            None,
            config.refinements,
            c0=config.c0,
            q_n=config.q_n,
            tol=config.tol,
            max_sweeps=config.max_sweeps,
        )
        supports[name] = sol.support
    J = np.union1d(np.union1d(supports["y"], supports["d"]), supports["z"]).astype(np.intp)
    W = np.column_stack([fac.F_hat, fac.U_hat[:, 0, J]])
    yp, dp, zp = (partial_out(W, cols[k][:, 0]) for k in ("y", "d", "z"))
    alpha, se_a, pi, se_pi, F = iv_2sls(yp, dp, zp)
    half = float(norm.ppf(1 - config.tau / 2)) * se_a
    return IVFit(
        alpha_hat=alpha,
        se_alpha=se_a,
        ci=(alpha - half, alpha + half),
        pi_hat=pi,
        se_pi=se_pi,
        first_stage_F=F,
        J_hat=J,
        K_used=K,
        kappa=float(kappa),
        supports=supports,
    )


def load_iv_csv(path, y_col="y", d_col="d", z_col="z", x_prefix="x", id_col="id") -> IVDataset:
    """Read a cross-section with one row per unit.  The id column is optional."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for col in (y_col, d_col, z_col):
            if col not in header:
                raise ParseError(f"{path}: missing required column {col!r}")
        reserved = {y_col, d_col, z_col, id_col}
        xidx = [(k, h) for k, h in enumerate(header) if h.startswith(x_prefix) and h not in reserved]
        if not xidx:
            raise ParseError(f"{path}: no covariate columns with prefix {x_prefix!r}")
        rows = []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"row {rowno}: expected {len(header)} fields, found {len(row)}")
            vals = []
            for k, name in [(header.index(c), c) for c in (y_col, d_col, z_col)] + xidx:
                try:
                    vals.append(float(row[k]))
                except ValueError:
                    raise ParseError(f"row {rowno}, column {name!r}: cannot parse {row[k]!r}") from None
            rows.append(vals)
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), 3 + len(xidx))
    return IVDataset(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3:])
