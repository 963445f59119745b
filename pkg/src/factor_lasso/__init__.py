"""Factor-lasso inference on a treatment coefficient in high-dimensional panels.

Covariates are split into estimated common factors and idiosyncratic parts;
the factors are partialled out period by period, a cluster-lasso selects
idiosyncratic controls for the outcome and the treatment, and OLS on the
union gives the estimate.  Inference is asymptotic (unit-clustered) or by a
k-step wild bootstrap.
"""

__version__ = "0.1.0"

from .bootstrap import BootstrapConfig, BootstrapResult, run_bootstrap
from .errors import (
    BootstrapFailureError,
    CalibrationError,
    DataError,
    DegenerateTreatmentError,
    DimensionError,
    DomainError,
    FactorLassoError,
    NumericalError,
)
from .factors import FactorEstimate, extract_factors_pca, select_num_factors_er
from .inference import FactorLassoFit, FitConfig, factor_lasso_estimate, joint_ols_alpha
from .iv import IVDataset, IVFit, iv_factor_lasso
from .lasso import LassoProblem, LassoSolution, PenaltySpec, coordinate_descent_full, k_step_iterate, penalty_level
from .panel import PanelDataset, demean_panel, load_csv, within_transform
from .simulation import IvDesign, PpfmDesign, gen_iv, gen_ppfm, run_monte_carlo

__all__ = [
    "__version__",
    "BootstrapConfig",
    "BootstrapResult",
    "run_bootstrap",
    "BootstrapFailureError",
    "CalibrationError",
    "DataError",
    "DegenerateTreatmentError",
    "DimensionError",
    "DomainError",
    "FactorLassoError",
    "NumericalError",
    "FactorEstimate",
    "extract_factors_pca",
    "select_num_factors_er",
    "FactorLassoFit",
    "FitConfig",
    "factor_lasso_estimate",
    "joint_ols_alpha",
    "IVDataset",
    "IVFit",
    "iv_factor_lasso",
    "LassoProblem",
    "LassoSolution",
    "PenaltySpec",
    "coordinate_descent_full",
    "k_step_iterate",
    "penalty_level",
    "PanelDataset",
    "demean_panel",
    "load_csv",
    "within_transform",
    "IvDesign",
    "PpfmDesign",
    "gen_iv",
    "gen_ppfm",
    "run_monte_carlo",
]
