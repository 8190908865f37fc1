import numpy as np
import pytest

from esmda import GaussianPrior, LinearModel, NoiseModel


def linear_problem(seed=7, n_m=3, n_d=4, sigma=0.5):
    """Well-conditioned random linear problem with prior N(0, I)."""
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.standard_normal((n_d, n_d)))
    q2, _ = np.linalg.qr(rng.standard_normal((n_m, n_m)))
    k = min(n_m, n_d)
    svals = np.linspace(2.0, 1.0, k)
    G = q1[:, :k] @ np.diag(svals) @ q2[:, :k].T
    m_true = rng.standard_normal(n_m)
    d_hist = G @ m_true + sigma * rng.standard_normal(n_d)
    prior = GaussianPrior.from_std(np.zeros(n_m), np.ones(n_m))
    return prior, LinearModel(G), d_hist, NoiseModel(np.full(n_d, sigma))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome, props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome, detail in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}  {detail}")
