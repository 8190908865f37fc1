"""Ensemble smoother with multiple data assimilation (ES-MDA)."""
from esmda._kernels import BACKEND
from esmda.analysis import (
    Mismatch,
    NoiseModel,
    SingularSystemError,
    SolverChoice,
    analysis_update,
    analysis_update_dense,
    analysis_update_subspace,
    data_mismatch,
    perturb_observations,
)
from esmda.config import ConfigError, RunConfig, load_config, parse_config, save_config
from esmda.driver import NumericalFailure, RunRecord, run_esmda, summarize, write_record
from esmda.ensemble import (
    CrossCovariance,
    Ensemble,
    GaussianPrior,
    RandomStreams,
    anomalies,
    cross_covariances,
    ensemble_mean,
    sample_prior,
)
from esmda.forward import (
    DeclineCurveModel,
    ForwardModel,
    ForwardModelError,
    LinearModel,
    RunCounter,
    decline_apply,
    evaluate_batch,
    linear_apply,
)
from esmda.oracle import GaussianPosterior, exact_posterior, posterior_distance
from esmda.schedule import AlphaSchedule, ScheduleError, equal_weights, geometric_decreasing, validate

__version__ = "0.1.0"
