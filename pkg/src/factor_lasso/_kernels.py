"""Coordinate-descent kernels for the weighted-l1 least-squares problem.

Both implementations operate on the Gram form of the problem::

    gram = U'U / N,   corr = U'r / N,   half_pen[j] = kappa * psi[j] / 2

and update ``gamma`` in place, cycling coordinates in ascending order.  A
running vector ``grad = corr - gram @ gamma`` is maintained so that a
coordinate whose value does not move costs nothing.

The numba path is used unless ``FACTOR_LASSO_DISABLE_NUMBA`` is set to a
truthy value or numba cannot be imported.  The numpy path is the reference;
the two are checked against each other in the test suite and compared for
speed in ``benchmarks/bench_cd.py``.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("FACTOR_LASSO_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def soft_threshold(s: float, thresh: float) -> float:
    """``sign(s) * max(|s| - thresh, 0)``."""
    if s > thresh:
        return s - thresh
    if s < -thresh:
        return s + thresh
    return 0.0


def cd_sweeps_numpy(gram, corr, half_pen, skip, gamma, max_sweeps, tol):
    """Run up to ``max_sweeps`` full sweeps; stop early once the largest
    coordinate change in a sweep drops below ``tol`` (``tol <= 0`` disables
    the early stop).  Returns ``(sweeps, last_max_change)``."""
    p = gamma.shape[0]
    grad = corr - gram @ gamma
    diag = np.diag(gram)
    sweeps = 0
    max_change = 0.0
    while sweeps < max_sweeps:
        max_change = 0.0
        for j in range(p):
            if skip[j]:
                continue
            a = diag[j]
            old = gamma[j]
            s = grad[j] + a * old
            new = soft_threshold(s, half_pen[j]) / a
            delta = new - old
            if delta != 0.0:
                gamma[j] = new
                grad -= gram[:, j] * delta
                if abs(delta) > max_change:
                    max_change = abs(delta)
        sweeps += 1
        if tol > 0.0 and max_change < tol:
            break
    return sweeps, max_change


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _cd_sweeps_jit(gram, corr, half_pen, skip, gamma, max_sweeps, tol):
        p = gamma.shape[0]
        grad = np.empty(p)
        for j in range(p):
            acc = corr[j]
            for k in range(p):
                acc -= gram[j, k] * gamma[k]
            grad[j] = acc
        sweeps = 0
        max_change = 0.0
        while sweeps < max_sweeps:
            max_change = 0.0
            for j in range(p):
                if skip[j]:
                    continue
                a = gram[j, j]
                old = gamma[j]
                s = grad[j] + a * old
                t = half_pen[j]
                if s > t:
                    new = (s - t) / a
                elif s < -t:
                    new = (s + t) / a
                else:
                    new = 0.0
                delta = new - old
                if delta != 0.0:
                    gamma[j] = new
                    for k in range(p):
                        grad[k] -= gram[k, j] * delta
                    if abs(delta) > max_change:
                        max_change = abs(delta)
            sweeps += 1
            if tol > 0.0 and max_change < tol:
                break
        return sweeps, max_change

    def cd_sweeps_numba(gram, corr, half_pen, skip, gamma, max_sweeps, tol):
        return _cd_sweeps_jit(
            np.ascontiguousarray(gram, dtype=np.float64),
            np.ascontiguousarray(corr, dtype=np.float64),
            np.ascontiguousarray(half_pen, dtype=np.float64),
            np.ascontiguousarray(skip, dtype=np.bool_),
            gamma,
            int(max_sweeps),
            float(tol),
        )

else:  # pragma: no cover
    cd_sweeps_numba = None


def cd_sweeps(gram, corr, half_pen, skip, gamma, max_sweeps, tol):
    """Dispatch to the active backend. ``gamma`` must be a writable
    contiguous float64 array; it is modified in place."""
    if USE_NUMBA:
        return cd_sweeps_numba(gram, corr, half_pen, skip, gamma, max_sweeps, tol)
    return cd_sweeps_numpy(gram, corr, half_pen, skip, gamma, max_sweeps, tol)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
