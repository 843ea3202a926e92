import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def compositions(min_d=2, max_d=10):
    """Strategy for single compositions with moderately spread parts."""
    return st.integers(min_d, max_d).flatmap(
        lambda d: st.lists(st.floats(-5, 5), min_size=d, max_size=d).map(
            lambda v: np.exp(np.array(v)) / np.exp(np.array(v)).sum()
        )
    )


def composition_pairs(min_d=2, max_d=10):
    def pair(d):
        one = st.lists(st.floats(-5, 5), min_size=d, max_size=d).map(
            lambda v: np.exp(np.array(v)) / np.exp(np.array(v)).sum()
        )
        return st.tuples(one, one)

    return st.integers(min_d, max_d).flatmap(pair)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary
_ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(criterion, ok, detail=""):
        _ACCEPTANCE[criterion] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
