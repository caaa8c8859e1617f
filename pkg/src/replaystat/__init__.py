"""Variance-reduced estimation by replaying random subsets of a data buffer.

The core objects are a MomentMap (per-element matrix/vector moments whose
ridge-regularized ratio of sums defines the estimator), a ReplayBuffer of
payloads, and four estimation schemes: one full-buffer solve, subset
averaging without replacement, with replacement, and weighted draws.
Diagnostics quantify the variance cost of subsampling; the bundled
applications cover discounted and continuous-time policy evaluation and
random-feature kernel ridge regression.
"""

from .buffers import Experience, ReplayBuffer, as_buffer
from .diagnostics import (
    AsymptoticCovariance,
    BlomReport,
    VarianceComponents,
    blom_variance_check,
    complete_U,
    estimate_zeta,
    influence_values,
    lemma1_sigma,
)
from .environments import (
    InitSpec,
    OuSpec,
    RegressionSpec,
    drift_estimate_mean,
    ingest_csv,
    make_reward_cont,
    make_reward_mdp,
    mdp_test_grid,
    ou_transition_params,
    reward_cont,
    reward_mdp,
    sample_regression,
    sample_trajectories,
    true_value,
    two_bump_surface,
    write_regression_csv,
)
from .estimators import (
    ReplayConfig,
    ReplayThetaEstimator,
    Scheme,
    ThetaEstimate,
    estimate,
    estimate_full,
    estimate_resampled_U,
    estimate_resampled_V,
    estimate_resampled_weighted,
)
from .exceptions import (
    AllSubsamplesSingular,
    CapExceeded,
    ConfigError,
    DimensionMismatch,
    EmptyFile,
    IndexOutOfRange,
    InvalidWeights,
    ParseError,
    ReplayError,
    SingularSystem,
    TrajectoryTooShort,
)
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    FiveNumber,
    emit_report,
    load_report,
    run_experiment,
    summarize_boxplot,
)
from .features import FeatureMap, make_feature_map
from .fourier import FourierBasis, basis_eval
from .kernel import (
    EXACT_SOLVE_CAP,
    ExactKernelRidge,
    LabeledPoint,
    ReplayKernelRidge,
    default_ridge,
    exact_krr_oracle,
    gaussian_gram,
    krr_moments,
    krr_predict,
    labeled_points,
    split_points,
)
from .moments import DenseMomentTable, MomentMap, eval_h_k
from .policy_eval import (
    DiscountSpec,
    LSTDPolicyValue,
    PhiBEPolicyValue,
    PhibeOrder,
    lstd_moments,
    phibe_moments,
    phibe_mu_sigma,
    value_predict,
)
from .trajectories import (
    Trajectory,
    manifest_path,
    read_trajectories,
    split_trajectory,
    write_trajectories,
)

__version__ = "0.1.0"

__all__ = [
    "AllSubsamplesSingular",
    "AsymptoticCovariance",
    "BlomReport",
    "CapExceeded",
    "ConfigError",
    "DenseMomentTable",
    "DimensionMismatch",
    "DiscountSpec",
    "EXACT_SOLVE_CAP",
    "EmptyFile",
    "ExactKernelRidge",
    "Experience",
    "ExperimentConfig",
    "ExperimentReport",
    "FeatureMap",
    "FiveNumber",
    "FourierBasis",
    "IndexOutOfRange",
    "InitSpec",
    "InvalidWeights",
    "LSTDPolicyValue",
    "LabeledPoint",
    "MomentMap",
    "OuSpec",
    "ParseError",
    "PhiBEPolicyValue",
    "PhibeOrder",
    "RegressionSpec",
    "ReplayBuffer",
    "ReplayConfig",
    "ReplayError",
    "ReplayKernelRidge",
    "ReplayThetaEstimator",
    "Scheme",
    "SingularSystem",
    "ThetaEstimate",
    "Trajectory",
    "TrajectoryTooShort",
    "VarianceComponents",
    "as_buffer",
    "basis_eval",
    "blom_variance_check",
    "complete_U",
    "default_ridge",
    "drift_estimate_mean",
    "emit_report",
    "estimate",
    "estimate_full",
    "estimate_resampled_U",
    "estimate_resampled_V",
    "estimate_resampled_weighted",
    "estimate_zeta",
    "eval_h_k",
    "exact_krr_oracle",
    "gaussian_gram",
    "influence_values",
    "ingest_csv",
    "krr_moments",
    "krr_predict",
    "labeled_points",
    "lemma1_sigma",
    "load_report",
    "lstd_moments",
    "make_feature_map",
    "make_reward_cont",
    "make_reward_mdp",
    "manifest_path",
    "mdp_test_grid",
    "ou_transition_params",
    "phibe_moments",
    "phibe_mu_sigma",
    "read_trajectories",
    "reward_cont",
    "reward_mdp",
    "run_experiment",
    "sample_regression",
    "sample_trajectories",
    "split_points",
    "split_trajectory",
    "summarize_boxplot",
    "true_value",
    "two_bump_surface",
    "value_predict",
    "write_regression_csv",
    "write_trajectories",
]
