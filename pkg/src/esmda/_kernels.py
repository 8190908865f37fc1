"""Inner-loop kernels with a numba path and a pure-numpy fallback.

Set ``ESMDA_DISABLE_NUMBA=1`` to force the numpy implementations. Both paths
sum over members in ascending index order so results do not depend on
threading or BLAS blocking.
"""
import os

import numpy as np

_DISABLED = os.environ.get("ESMDA_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by ESMDA_DISABLE_NUMBA")
    import numba as nb

    njit = nb.njit(cache=False, nogil=True)
    HAVE_NUMBA = True
except ImportError:
    nb = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --- pure numpy ------------------------------------------------------------


def _row_mean_numpy(X):
    # Shifted accumulation: identical rows give the first row back exactly.
    n = X.shape[0]
    x0 = X[0]
    acc = np.zeros(X.shape[1])
    for j in range(1, n):
        acc += X[j] - x0
    return x0 + acc / n


def _anomalies_numpy(X):
    n = X.shape[0]
    mean = _row_mean_numpy(X)
    return ((X - mean) / np.sqrt(n - 1)).T.copy()


def _misfit_numpy(sims, d_obs, std, mask):
    n_used = int(mask.sum())
    if n_used == 0:
        return np.zeros(sims.shape[0])
    scaled = (sims[:, mask] - d_obs[mask]) / std[mask]
    return np.einsum("jk,jk->j", scaled, scaled) / n_used


def _decline_numpy(log_rate, log_decline, times):
    return np.exp(log_rate - np.exp(log_decline) * times)


# --- numba -----------------------------------------------------------------

if HAVE_NUMBA:

    @njit
    def _row_mean_numba(X):
        n, dim = X.shape
        out = np.empty(dim)
        for k in range(dim):
            out[k] = 0.0
        for j in range(1, n):
            for k in range(dim):
                out[k] += X[j, k] - X[0, k]
        for k in range(dim):
            out[k] = X[0, k] + out[k] / n
        return out

    @njit
    def _anomalies_numba(X):
        n, dim = X.shape
        mean = _row_mean_numba(X)
        scale = np.sqrt(n - 1.0)
        out = np.empty((dim, n))
        for j in range(n):
            for k in range(dim):
                out[k, j] = (X[j, k] - mean[k]) / scale
        return out

    @njit
    def _misfit_numba(sims, d_obs, std, mask):
        n, nd = sims.shape
        out = np.zeros(n)
        n_used = 0
        for k in range(nd):
            if mask[k]:
                n_used += 1
        if n_used == 0:
            return out
        for j in range(n):
            s = 0.0
            for k in range(nd):
                if mask[k]:
                    r = (sims[j, k] - d_obs[k]) / std[k]
                    s += r * r
            out[j] = s / n_used
        return out

    @njit
    def _decline_numba(log_rate, log_decline, times):
        decline = np.exp(log_decline)
        out = np.empty(times.shape[0])
        for k in range(times.shape[0]):
            out[k] = np.exp(log_rate - decline * times[k])
        return out

    row_mean = _row_mean_numba
    anomalies = _anomalies_numba
    misfit = _misfit_numba
    decline = _decline_numba
else:
    row_mean = _row_mean_numpy
    anomalies = _anomalies_numpy
    misfit = _misfit_numpy
    decline = _decline_numpy


def implementations():
    """Return ``{backend: {kernel name: callable}}`` for every available backend."""
    impls = {
        "numpy": {
            "row_mean": _row_mean_numpy,
            "anomalies": _anomalies_numpy,
            "misfit": _misfit_numpy,
            "decline": _decline_numpy,
        }
    }
    if HAVE_NUMBA:
        impls["numba"] = {
            "row_mean": _row_mean_numba,
            "anomalies": _anomalies_numba,
            "misfit": _misfit_numba,
            "decline": _decline_numba,
        }
    return impls
