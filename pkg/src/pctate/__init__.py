"""Average treatment effects in percentage points under subgroup heterogeneity.

Semi-log regressions report effects in log points; averaging those over
heterogeneous subgroups and exponentiating misstates the average proportional
effect. This package estimates the share-weighted average of exp(tau_g) - 1
and provides inference for it, for cross-sectional designs and for staggered
difference-in-differences panels.
"""

__version__ = "0.1.0"

from .did import (
    NEVER,
    AggregationSet,
    CellKey,
    PanelData,
    att_report,
    build_panel_design,
    estimate_did,
    fit_stagdid,
)
from .errors import (
    ConvergenceError,
    DegenerateInference,
    InputError,
    MissingGroup,
    NoControlGroup,
    NonPositiveOutcome,
    NumericalError,
    NumericalWarning,
    PctAteError,
    SchemaError,
    SingularDesign,
)
from .estimators import (
    EffectEstimates,
    PointEstimates,
    ate_log,
    hyp0f1,
    point_estimates,
    rho_a,
    rho_b,
    rho_c,
    rho_d,
)
from .inference import (
    InferenceInput,
    InferenceReport,
    ci_rho,
    eta_hat,
    infer,
    mu_hat,
    se_tau_bar,
    sigma_eta,
    sigma_mu2_hat,
    z_mu,
)
from .kernels import BACKEND
from .montecarlo import SimConfig, SimTable, run_experiment, true_values
from .ols import (
    CovMatrix,
    DesignMatrix,
    OlsFit,
    build_design,
    classical_vcov,
    cluster_vcov,
    fit_ols,
    hc0_vcov,
)
from .pipeline import estimate_cross_section
from .shares import ShareEstimates, estimate_shares, fixed_shares

__all__ = [
    "__version__",
    "AggregationSet",
    "BACKEND",
    "CellKey",
    "ConvergenceError",
    "CovMatrix",
    "DegenerateInference",
    "DesignMatrix",
    "EffectEstimates",
    "InferenceInput",
    "InferenceReport",
    "InputError",
    "MissingGroup",
    "NEVER",
    "NoControlGroup",
    "NonPositiveOutcome",
    "NumericalError",
    "NumericalWarning",
    "OlsFit",
    "PanelData",
    "PctAteError",
    "PointEstimates",
    "SchemaError",
    "ShareEstimates",
    "SimConfig",
    "SimTable",
    "SingularDesign",
    "ate_log",
    "att_report",
    "build_design",
    "build_panel_design",
    "ci_rho",
    "classical_vcov",
    "cluster_vcov",
    "estimate_cross_section",
    "estimate_did",
    "estimate_shares",
    "eta_hat",
    "fit_ols",
    "fit_stagdid",
    "fixed_shares",
    "hc0_vcov",
    "hyp0f1",
    "infer",
    "mu_hat",
    "point_estimates",
    "rho_a",
    "rho_b",
    "rho_c",
    "rho_d",
    "run_experiment",
    "se_tau_bar",
    "sigma_eta",
    "sigma_mu2_hat",
    "true_values",
    "z_mu",
]
