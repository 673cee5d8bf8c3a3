import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, q, cond=None):
    A = rng.standard_normal((q, q))
    M = A @ A.T + np.eye(q)
    if cond is not None:
        Q, _ = np.linalg.qr(rng.standard_normal((q, q)))
        lam = np.geomspace(cond, 1.0, q)
        M = (Q * lam) @ Q.T
    return (M + M.T) / 2


def random_orthogonal(rng, q):
    Q, R = np.linalg.qr(rng.standard_normal((q, q)))
    return Q * np.sign(np.diag(R))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
