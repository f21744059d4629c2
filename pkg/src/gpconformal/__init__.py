"""Gaussian-process interpolation with conformal prediction intervals."""
from .conformal import (
    ScoreConfig,
    asym_jplus_gp_interval,
    fcp_gp_interval,
    gp_loo_scores,
    jcp_interval,
    jplus_gp_interval,
    jplus_interval,
    scp_interval,
)
from .errors import ConditioningError, DomainError, LevelError
from .gp import (
    Dataset,
    FittedGP,
    LooPrediction,
    SearchConfig,
    fit,
    gaussian_interval,
    loo_at_training,
    loo_predict,
    posterior_mean,
    posterior_sd,
    reml_select,
)
from .interval import PredictionInterval
from .kernel import CovarianceSpec, covariance, gram_matrix, matern_correlation

__version__ = "0.1.0"
