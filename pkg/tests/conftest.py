import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance lines collected by test_acceptance and printed in the terminal summary
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@st.composite
def symmetric_matrices(draw, min_p=1, max_p=6, bound=1.0):
    p = draw(st.integers(min_p, max_p))
    a = draw(arrays(np.float64, (p, p), elements=st.floats(-bound, bound, allow_nan=False)))
    return np.triu(a) + np.triu(a, 1).T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_orthogonal(rng, p):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))
