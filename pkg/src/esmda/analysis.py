"""Observation perturbation, the analysis update and the data-mismatch objective."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.linalg as sla

from esmda import _kernels
from esmda.ensemble import (
    PERTURB_TAG,
    CrossCovariance,
    Ensemble,
    NDArrayFloat,
    RandomStreams,
    anomalies,
    cross_covariances,
)

JITTER = 1e-12


class SingularSystemError(ArithmeticError):
    """``alpha C_D + C_dd`` could not be factorized, even after jitter."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Diagonal data-error covariance given by per-datum standard deviations."""

    std: NDArrayFloat

    def __post_init__(self):
        std = np.array(self.std, dtype=np.float64)
        if std.ndim != 1:
            raise ValueError("noise standard deviations must be a vector")
        if not np.all(np.isfinite(std)) or np.any(std < 0.0):
            raise ValueError("noise standard deviations must be finite and >= 0")
        std.setflags(write=False)
        object.__setattr__(self, "std", std)

    @property
    def n_d(self) -> int:
        return self.std.shape[0]

    @property
    def variance(self) -> NDArrayFloat:
        return self.std**2


@dataclass(frozen=True)
class SolverChoice:
    mode: Literal["dense", "subspace"] = "dense"
    energy_fraction: float = 0.999

    def __post_init__(self):
        if self.mode not in ("dense", "subspace"):
            raise ValueError(f"solver mode must be 'dense' or 'subspace', got {self.mode!r}")
        if not 0.0 < self.energy_fraction <= 1.0:
            raise ValueError(f"energy_fraction must lie in (0, 1], got {self.energy_fraction}")


@dataclass(frozen=True, eq=False)
class Mismatch:
    per_member: NDArrayFloat
    mean: float
    excluded: tuple[int, ...] = ()


def perturb_observations(
    d_hist,
    noise: NoiseModel,
    alpha: float,
    streams: Optional[RandomStreams],
    n_e: int,
    iteration: int = 1,
    z: Optional[NDArrayFloat] = None,
) -> NDArrayFloat:
    """Return ``(n_e, N_d)`` perturbed observations ``d_hist + sqrt(alpha) sigma z_j``.

    ``z`` overrides the draws from ``streams`` (row ``j`` for member ``j``).
    """
    d_hist = np.asarray(d_hist, dtype=np.float64)
    if d_hist.shape != (noise.n_d,):
        raise ValueError(f"d_hist has length {d_hist.size}, noise model expects {noise.n_d}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if z is None:
        if streams is None:
            raise ValueError("either streams or z must be given")
        z = streams.standard_normals(PERTURB_TAG, iteration, n_e, noise.n_d)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (n_e, noise.n_d):
        raise ValueError(f"z must have shape {(n_e, noise.n_d)}, got {z.shape}")
    return d_hist + math.sqrt(alpha) * noise.std * z


def _check_inputs(models: Ensemble, sims: Ensemble, perturbed, noise: NoiseModel, alpha: float):
    perturbed = np.asarray(perturbed, dtype=np.float64)
    if sims.n_e != models.n_e:
        raise ValueError(f"{models.n_e} model members but {sims.n_e} simulated members")
    if perturbed.shape != (models.n_e, noise.n_d):
        raise ValueError(
            f"perturbed observations must have shape {(models.n_e, noise.n_d)}, got {perturbed.shape}"
        )
    if sims.dim != noise.n_d:
        raise ValueError(f"simulated data have {sims.dim} entries, noise model has {noise.n_d}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    return perturbed


def _cho_factor_with_jitter(matrix, noise: NoiseModel):
    try:
        return sla.cho_factor(matrix, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    n_d = matrix.shape[0]
    jitter = JITTER * np.trace(matrix) / n_d
    if jitter > 0.0:
        try:
            return sla.cho_factor(matrix + jitter * np.eye(n_d), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            pass
    offending = np.flatnonzero(noise.std == 0.0)
    if offending.size == 0:
        diag = np.diag(matrix)
        offending = np.flatnonzero(diag <= np.finfo(float).eps * max(diag.max(), 0.0))
    raise SingularSystemError(
        f"alpha*C_D + C_dd is numerically singular; offending data indices {offending.tolist()}",
        offending,
    )


def dense_increments(cov: CrossCovariance, residuals, noise: NoiseModel, alpha: float) -> NDArrayFloat:
    """``C_md (alpha C_D + C_dd)^-1 r_j`` for each row ``r_j`` of ``residuals``; returns ``(N_e, N_m)``."""
    system = cov.cdd + np.diag(alpha * noise.variance)
    factor = _cho_factor_with_jitter(system, noise)
    solved = sla.cho_solve(factor, np.asarray(residuals, dtype=np.float64).T, check_finite=False)
    return (cov.cmd @ solved).T


def analysis_update_dense(
    models: Ensemble, sims: Ensemble, perturbed, noise: NoiseModel, alpha: float
) -> Ensemble:
    """Reference update ``m_j + C_md (alpha C_D + C_dd)^-1 (d_pert_j - d_sim_j)``.

    The covariances are formed explicitly and the system is solved by Cholesky.
    """
    perturbed = _check_inputs(models, sims, perturbed, noise, alpha)
    cov = cross_covariances(models, sims)
    increments = dense_increments(cov, perturbed - sims.members, noise, alpha)
    return Ensemble(models.members + increments, models.iteration + 1)


def truncation_rank(singular_values: NDArrayFloat, energy_fraction: float) -> int:
    """Smallest ``r`` whose leading squared singular values hold ``energy_fraction`` of the total."""
    energy = np.cumsum(singular_values**2)
    if energy.size == 0 or energy[-1] == 0.0:
        return 0
    return int(np.searchsorted(energy, energy_fraction * energy[-1], side="left")) + 1


def analysis_update_subspace(
    models: Ensemble,
    sims: Ensemble,
    perturbed,
    noise: NoiseModel,
    alpha: float,
    choice: SolverChoice = SolverChoice("subspace"),
) -> Ensemble:
    """Ensemble-space update through a truncated SVD of the noise-scaled data anomalies.

    With ``S = diag(sigma)`` and ``S^-1 A_d = U s V^T`` the gain applied to a
    residual ``r`` is ``A_m V diag(s / (alpha + s^2)) U^T S^-1 r``. Products are
    taken right to left so nothing of size N_m x N_d or N_d x N_d is formed.
    """
    perturbed = _check_inputs(models, sims, perturbed, noise, alpha)
    if np.any(noise.std == 0.0):
        zero = np.flatnonzero(noise.std == 0.0)
        raise ValueError(f"subspace solver requires sigma > 0; zero sigma at data indices {zero.tolist()}")
    a_d = anomalies(sims)
    scaled = a_d / noise.std[:, None]
    u, s, vt = np.linalg.svd(scaled, full_matrices=False)
    r = truncation_rank(s, choice.energy_fraction)
    if r == 0:
        return Ensemble(models.members, models.iteration + 1)
    u, s, vt = u[:, :r], s[:r], vt[:r]
    scaled_residuals = (perturbed - sims.members).T / noise.std[:, None]
    coeffs = (s / (alpha + s**2))[:, None] * (u.T @ scaled_residuals)  # r x N_e
    weights = vt.T @ coeffs  # N_e x N_e
    increments = anomalies(models) @ weights
    return Ensemble(models.members + increments.T, models.iteration + 1)


def analysis_update(
    models: Ensemble,
    sims: Ensemble,
    perturbed,
    noise: NoiseModel,
    alpha: float,
    choice: SolverChoice = SolverChoice(),
) -> Ensemble:
    if choice.mode == "dense":
        return analysis_update_dense(models, sims, perturbed, noise, alpha)
    return analysis_update_subspace(models, sims, perturbed, noise, alpha, choice)


def data_mismatch(sims: Ensemble | NDArrayFloat, d_hist, noise: NoiseModel) -> Mismatch:
    """Per-member ``(1/N_d) sum_k ((d_sim - d_hist)/sigma)^2``; data with zero sigma are skipped."""
    values = sims.members if isinstance(sims, Ensemble) else np.atleast_2d(np.asarray(sims, float))
    d_hist = np.asarray(d_hist, dtype=np.float64)
    if values.shape[1] != d_hist.size or d_hist.size != noise.n_d:
        raise ValueError(
            f"dimension mismatch: sims {values.shape[1]}, d_hist {d_hist.size}, noise {noise.n_d}"
        )
    mask = noise.std > 0.0
    phi = _kernels.misfit(np.ascontiguousarray(values), d_hist, noise.std, mask)
    return Mismatch(phi, float(_kernels.row_mean(phi[:, None])[0]), tuple(np.flatnonzero(~mask).tolist()))
