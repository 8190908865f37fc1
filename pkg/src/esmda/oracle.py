"""Closed-form linear-Gaussian posterior and ensemble-to-posterior distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from esmda.analysis import NoiseModel, SingularSystemError
from esmda.ensemble import Ensemble, GaussianPrior, NDArrayFloat, ensemble_mean, anomalies
from esmda.forward import LinearModel


@dataclass(frozen=True, eq=False)
class GaussianPosterior:
    mean: NDArrayFloat
    covariance: NDArrayFloat

    @property
    def std(self) -> NDArrayFloat:
        return np.sqrt(np.diag(self.covariance))


@dataclass(frozen=True, eq=False)
class PosteriorDistance:
    mean_error: NDArrayFloat  # per component, in posterior-std units
    covariance_error: float  # max-norm, relative to max |truth cov|

    def to_dict(self):
        return {"mean_error": self.mean_error.tolist(), "covariance_error": self.covariance_error}


def exact_posterior(
    prior: GaussianPrior, model: LinearModel, d_hist, noise: NoiseModel
) -> GaussianPosterior:
    d_hist = np.asarray(d_hist, dtype=np.float64)
    if model.n_m != prior.n_m or model.n_d != noise.n_d or d_hist.shape != (model.n_d,):
        raise ValueError(
            f"dimension mismatch: prior N_m={prior.n_m}, model {model.n_d}x{model.n_m}, "
            f"data {d_hist.size}, noise {noise.n_d}"
        )
    if np.any(noise.std <= 0.0):
        raise ValueError("exact posterior needs every sigma > 0")
    if not prior.is_full_rank:
        raise ValueError("exact posterior needs a full-rank prior")
    c_m = prior.covariance
    g = model.G
    cmg = c_m @ g.T
    innovation = g @ cmg + np.diag(noise.variance)
    try:
        factor = sla.cho_factor(innovation, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("innovation covariance is singular") from exc
    residual = d_hist - g @ prior.mean - model.bias
    mean = prior.mean + cmg @ sla.cho_solve(factor, residual)
    cov = c_m - cmg @ sla.cho_solve(factor, cmg.T)
    cov = 0.5 * (cov + cov.T)
    return GaussianPosterior(mean, cov)


def posterior_distance(e: Ensemble, truth: GaussianPosterior) -> PosteriorDistance:
    if e.dim != truth.mean.size:
        raise ValueError(f"ensemble dimension {e.dim} does not match posterior dimension {truth.mean.size}")
    a = anomalies(e)
    sample_cov = a @ a.T
    mean_error = np.abs(ensemble_mean(e) - truth.mean) / truth.std
    cov_error = np.max(np.abs(sample_cov - truth.covariance)) / np.max(np.abs(truth.covariance))
    return PosteriorDistance(mean_error, float(cov_error))
