"""Forward models and batch evaluation with a run counter."""
from __future__ import annotations

import abc
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from esmda import _kernels
from esmda.ensemble import Ensemble, NDArrayFloat


class ForwardModelError(ArithmeticError):
    def __init__(self, message, member=None):
        super().__init__(message)
        self.member = member


class ForwardModel(abc.ABC):
    """A deterministic, side-effect free map from a model vector to simulated data."""

    n_m: int
    n_d: int

    @abc.abstractmethod
    def evaluate(self, m: NDArrayFloat) -> NDArrayFloat:
        ...

    def __call__(self, m):
        return self.evaluate(np.asarray(m, dtype=np.float64))


class LinearModel(ForwardModel):
    def __init__(self, G, bias=None):
        G = np.array(G, dtype=np.float64, ndmin=2)
        if G.ndim != 2:
            raise ValueError(f"G must be a matrix, got shape {G.shape}")
        bias = np.zeros(G.shape[0]) if bias is None else np.array(bias, dtype=np.float64)
        if bias.shape != (G.shape[0],):
            raise ValueError(f"bias must have length {G.shape[0]} (rows of G), got {bias.size}")
        G.setflags(write=False)
        bias.setflags(write=False)
        self.G = G
        self.bias = bias
        self.n_d, self.n_m = G.shape

    def evaluate(self, m):
        return linear_apply(m, self)

    def __repr__(self):
        return f"LinearModel(n_m={self.n_m}, n_d={self.n_d})"


class DeclineCurveModel(ForwardModel):
    """Exponential rate decline ``q(t) = exp(m_0 - exp(m_1) t)`` in log parameters."""

    n_m = 2

    def __init__(self, times):
        times = np.array(times, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a non-empty vector")
        if np.any(times < 0.0) or np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be non-negative and strictly increasing")
        times.setflags(write=False)
        self.times = times
        self.n_d = times.size

    def evaluate(self, m):
        return decline_apply(m, self)

    def __repr__(self):
        return f"DeclineCurveModel(n_d={self.n_d})"


def linear_apply(m, model: LinearModel) -> NDArrayFloat:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (model.n_m,):
        raise ValueError(f"model vector has length {m.size}, expected {model.n_m}")
    return model.G @ m + model.bias


def decline_apply(m, model: DeclineCurveModel) -> NDArrayFloat:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (2,):
        raise ValueError(f"decline model takes [log q_i, log D], got length {m.size}")
    with np.errstate(over="ignore"):
        q = _kernels.decline(float(m[0]), float(m[1]), model.times)
    if not np.all(np.isfinite(q)):
        raise ForwardModelError(f"decline curve overflowed for m = {m.tolist()}")
    return q


class RunCounter:
    """Monotone count of forward-model evaluations."""

    def __init__(self):
        self._total = 0
        self._lock = threading.Lock()

    @property
    def total(self) -> int:
        return self._total

    def add(self, n: int) -> None:
        if n < 0:
            raise ValueError("run counter cannot decrease")
        with self._lock:
            self._total += n

    def __repr__(self):
        return f"RunCounter(total={self._total})"


@dataclass(frozen=True)
class _Chunk:
    start: int
    stop: int


def _evaluate_range(model: ForwardModel, members, chunk: _Chunk):
    out = []
    for j in range(chunk.start, chunk.stop):
        try:
            d = np.asarray(model.evaluate(members[j]), dtype=np.float64)
        except ForwardModelError as exc:
            raise ForwardModelError(f"member {j}: {exc}", member=j) from exc
        if d.shape != (model.n_d,):
            raise ForwardModelError(
                f"member {j}: forward model returned {d.shape}, expected ({model.n_d},)", member=j
            )
        if not np.all(np.isfinite(d)):
            raise ForwardModelError(f"member {j}: forward model produced non-finite values", member=j)
        out.append(d)
    return out


def evaluate_batch(
    model: ForwardModel, e: Ensemble, parallelism: int = 1, counter: RunCounter | None = None
) -> Ensemble:
    """Evaluate every member; output row ``j`` is ``g(m_j)`` whatever the interleaving."""
    if e.dim != model.n_m:
        raise ValueError(f"ensemble members have length {e.dim}, model expects {model.n_m}")
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    n = e.n_e
    if parallelism == 1:
        rows = _evaluate_range(model, e.members, _Chunk(0, n))
    else:
        bounds = np.linspace(0, n, min(parallelism, n) + 1).astype(int)
        chunks = [_Chunk(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(lambda c: _evaluate_range(model, e.members, c), chunks))
        rows = [d for part in parts for d in part]
    if counter is not None:
        counter.add(n)
    return Ensemble(np.vstack(rows), e.iteration)
