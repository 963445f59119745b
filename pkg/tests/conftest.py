import math

import numpy as np
import pytest

from factor_lasso.inference import FitConfig, factor_lasso_estimate
from factor_lasso.simulation import PpfmDesign, gen_ppfm


def inv_norm_cdf(prob, lo=-40.0, hi=40.0):
    """Phi^{-1} by bisection on the erf-based CDF; independent of scipy."""
    def cdf(x):
        return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def small_design(**kw):
    base = dict(n=40, T=5, K=2, p=20, seed=11)
    base.update(kw)
    return PpfmDesign(**base)


@pytest.fixture(scope="session")
def small_fit():
    data, truth = gen_ppfm(small_design(), np.random.default_rng(5))
    return factor_lasso_estimate(data, FitConfig(k=2)), data, truth


@pytest.fixture(scope="session")
def design_fit():
    data, truth = gen_ppfm(PpfmDesign(seed=3), np.random.default_rng(17))
    return factor_lasso_estimate(data), data, truth


# --- acceptance reporting -------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
N_CRITERIA = 12


def record_criterion(num: int, passed: bool, text: str) -> None:
    ACCEPTANCE[num] = (bool(passed), text)
    print(f"[criterion {num:2d}] {'PASS' if passed else 'FAIL'}: {text}")


def pytest_terminal_summary(terminalreporter):
    ran = any("test_acceptance" in str(r.nodeid) for key in ("passed", "failed") for r in terminalreporter.stats.get(key, []))
    if not ran and not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in range(1, N_CRITERIA + 1):
        if num in ACCEPTANCE:
            ok, text = ACCEPTANCE[num]
            terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}")
        else:
            terminalreporter.write_line(f"criterion {num:2d}: NOT RUN")
