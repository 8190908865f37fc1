"""Ensembles, seeded prior sampling and ensemble sample statistics."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import numpy.typing as npt

from esmda import _kernels

NDArrayFloat = npt.NDArray[np.float64]
PathLike = Union[str, Path]

# Purpose tags keying the random substreams.
PRIOR_TAG = 1
PERTURB_TAG = 2


class NonFiniteError(ValueError, ArithmeticError):
    pass


class RandomStreams:
    """Counter-keyed random substreams derived from one root seed.

    Every draw is made from a generator keyed on ``(tag, iteration, member)``,
    so the numbers a member sees do not depend on evaluation order.
    """

    def __init__(self, seed: int):
        if int(seed) < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def generator(self, tag: int, iteration: int, member: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(tag, iteration, member))
        return np.random.Generator(np.random.PCG64(seq))

    def standard_normals(self, tag: int, iteration: int, n_members: int, dim: int) -> NDArrayFloat:
        """Draw an ``(n_members, dim)`` array, row ``j`` from substream ``(tag, iteration, j)``."""
        out = np.empty((n_members, dim))
        for j in range(n_members):
            out[j] = self.generator(tag, iteration, j).standard_normal(dim)
        return out

    def __repr__(self):
        return f"RandomStreams(seed={self.seed})"


def _frozen(a) -> NDArrayFloat:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ensemble:
    """``N_e`` realizations stored row-wise in an ``(N_e, dim)`` array.

    Used both for model-parameter ensembles and simulated-data ensembles.
    """

    members: NDArrayFloat
    iteration: int = 0

    def __post_init__(self):
        members = _frozen(self.members)
        if members.ndim != 2:
            raise ValueError(f"ensemble members must form a 2-D array, got shape {members.shape}")
        if members.shape[0] < 2:
            raise ValueError(f"an ensemble needs at least 2 members, got {members.shape[0]}")
        if not np.all(np.isfinite(members)):
            bad = np.unique(np.nonzero(~np.isfinite(members))[0])
            raise NonFiniteError(f"non-finite values in ensemble members {bad.tolist()}")
        if self.iteration < 0:
            raise ValueError("iteration index must be >= 0")
        object.__setattr__(self, "members", members)

    @property
    def n_e(self) -> int:
        return self.members.shape[0]

    @property
    def dim(self) -> int:
        return self.members.shape[1]

    def __len__(self):
        return self.n_e

    def __getitem__(self, j) -> NDArrayFloat:
        return self.members[j]

    def __eq__(self, other):
        if not isinstance(other, Ensemble):
            return NotImplemented
        return self.iteration == other.iteration and np.array_equal(self.members, other.members)

    def with_members(self, members, iteration=None) -> "Ensemble":
        return Ensemble(members, self.iteration if iteration is None else iteration)

    def to_csv(self, path: PathLike, prefix: str = "m") -> None:
        write_csv(path, self.members, prefix)

    @classmethod
    def from_csv(cls, path: PathLike, iteration: int = 0) -> "Ensemble":
        return cls(read_csv(path), iteration)


@dataclass(frozen=True, eq=False)
class GaussianPrior:
    """Gaussian prior ``N(mean, L L^T)`` given by a lower-triangular factor ``L``."""

    mean: NDArrayFloat
    factor: NDArrayFloat

    def __post_init__(self):
        mean = _frozen(self.mean)
        factor = _frozen(self.factor)
        n = mean.shape[0]
        if mean.ndim != 1:
            raise ValueError("prior mean must be a vector")
        if factor.shape != (n, n):
            raise ValueError(f"covariance factor must be {n}x{n}, got {factor.shape}")
        if np.any(np.triu(factor, 1) != 0.0):
            raise ValueError("covariance factor must be lower triangular")
        if np.any(np.diag(factor) < 0.0):
            raise ValueError("covariance factor must have a non-negative diagonal")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(factor))):
            raise ValueError("prior contains non-finite values")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "factor", factor)

    @property
    def n_m(self) -> int:
        return self.mean.shape[0]

    @property
    def covariance(self) -> NDArrayFloat:
        return self.factor @ self.factor.T

    @property
    def is_full_rank(self) -> bool:
        return bool(np.all(np.diag(self.factor) > 0.0))

    @classmethod
    def from_covariance(cls, mean, covariance) -> "GaussianPrior":
        """Factor a symmetric positive-definite covariance once (Cholesky)."""
        cov = np.asarray(covariance, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
            raise ValueError("covariance must be symmetric")
        try:
            factor = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not symmetric positive definite") from exc
        return cls(mean, factor)

    @classmethod
    def from_std(cls, mean, std) -> "GaussianPrior":
        return cls(mean, np.diag(np.asarray(std, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class CrossCovariance:
    """Ensemble covariances: ``cmd`` is N_m x N_d, ``cdd`` is N_d x N_d."""

    cmd: NDArrayFloat
    cdd: NDArrayFloat = field(repr=False)


def sample_prior(prior: GaussianPrior, n_e: int, streams: RandomStreams) -> Ensemble:
    """Draw ``n_e`` members ``mean + L z_j``; ``z_j`` comes from the member's own substream."""
    if n_e < 2:
        raise ValueError(f"ensemble size must be >= 2, got {n_e}")
    z = streams.standard_normals(PRIOR_TAG, 0, n_e, prior.n_m)
    members = prior.mean + z @ prior.factor.T
    return Ensemble(members, 0)


def ensemble_mean(e: Ensemble) -> NDArrayFloat:
    return _kernels.row_mean(e.members)


def anomalies(e: Ensemble) -> NDArrayFloat:
    """Return the ``(dim, N_e)`` matrix ``A`` with ``A A^T`` the unbiased sample covariance."""
    return _kernels.anomalies(e.members)


def cross_covariances(models: Ensemble, sims: Ensemble) -> CrossCovariance:
    if models.n_e != sims.n_e:
        raise ValueError(
            f"ensemble sizes differ: {models.n_e} model members vs {sims.n_e} simulated members"
        )
    a_m = anomalies(models)
    a_d = anomalies(sims)
    return CrossCovariance(a_m @ a_d.T, a_d @ a_d.T)


def write_csv(path: PathLike, rows, prefix: str) -> None:
    """Write one row per member with header ``{prefix}_0..``; values use ``repr`` (round-trip exact)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    buf = io.StringIO()
    buf.write(",".join(f"{prefix}_{k}" for k in range(rows.shape[1])) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), newline="\n")


def read_csv(path: PathLike, header: bool = True) -> NDArrayFloat:
    """Read a comma-delimited table of floats, skipping a header row if present."""
    lines = Path(path).read_text().splitlines()
    if header and lines and not _is_numeric_row(lines[0]):
        lines = lines[1:]
    rows = [[float(x) for x in line.split(",")] for line in lines if line.strip()]
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"{path}: ragged CSV rows (widths {sorted(widths)})")
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def _is_numeric_row(line: str) -> bool:
    try:
        [float(x) for x in line.split(",")]
    except ValueError:
        return False
    return True
