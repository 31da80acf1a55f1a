"""Shared fixtures and the acceptance summary printed at the end of the run."""

import numpy as np
import pytest

from sinrpd.model import NetworkParams
from sinrpd.sampler import TruncationPolicy, sample_propagation_batch

ACCEPTANCE_RESULTS = {}

# one large W = 0 batch (a = 1, beta = 4) shared by the Monte Carlo tests
BIG_REPLICATES = 100_000
BIG_SEED = 1
BIG_KEEP = 10


@pytest.fixture(scope="session")
def stir_params():
    return NetworkParams.from_a(1.0, 4.0)


@pytest.fixture(scope="session")
def big_batch(stir_params):
    policy = TruncationPolicy(min_points=BIG_KEEP)
    return sample_propagation_batch(stir_params, policy, BIG_REPLICATES, BIG_SEED, keep=BIG_KEEP)


@pytest.fixture
def record_criterion():
    """Record ``(passed, detail)`` for an acceptance criterion; printed in the summary."""

    def record(number, title, passed, detail=""):
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
