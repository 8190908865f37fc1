import numpy as np
import pytest

from esmda import _kernels

BACKENDS = _kernels.implementations()


@pytest.fixture(params=sorted(BACKENDS))
def kernels(request):
    return BACKENDS[request.param]


def test_row_mean_is_ascending_shifted_sum(kernels, rng):
    X = rng.standard_normal((37, 5)) * 10 + 3
    expected = X[0].copy()
    acc = np.zeros(5)
    for j in range(1, 37):
        acc += X[j] - X[0]
    expected = X[0] + acc / 37
    np.testing.assert_array_equal(kernels["row_mean"](X), expected)


def test_anomalies_match_across_backends(rng):
    X = rng.standard_normal((20, 4))
    results = [impl["anomalies"](X) for impl in BACKENDS.values()]
    for r in results[1:]:
        np.testing.assert_allclose(r, results[0], rtol=0, atol=1e-15)


def test_misfit_skips_masked_data(kernels):
    sims = np.array([[1.0, 2.0, 100.0], [0.0, 0.0, 0.0]])
    d = np.zeros(3)
    std = np.array([1.0, 1.0, 0.0])
    mask = std > 0
    np.testing.assert_allclose(kernels["misfit"](sims, d, std, mask), [2.5, 0.0])


def test_misfit_no_data_used(kernels):
    out = kernels["misfit"](np.ones((3, 2)), np.zeros(2), np.zeros(2), np.zeros(2, dtype=bool))
    np.testing.assert_array_equal(out, np.zeros(3))


def test_decline_kernel(kernels):
    times = np.array([0.0, 1.0, 2.0])
    out = kernels["decline"](np.log(100.0), np.log(0.5), times)
    np.testing.assert_allclose(out, 100 * np.exp(-0.5 * times), rtol=1e-14)


def test_backend_flag_reported():
    assert _kernels.BACKEND in BACKENDS
