import copy
import time

import pytest

from nonsymkernel import Modulus, ProblemParams, build_counterexample
from nonsymkernel.construction import Counterexample

# Lines appended by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def canonical_params():
    return ProblemParams(alpha=0.5, lam=1.0, Lam=2.0, dim_n=1)


@pytest.fixture(scope="session")
def canonical(canonical_params):
    """The reference run: alpha=1/2, lambda=1, Lambda=2, n=1, eta(s)=s^0.1."""
    t0 = time.perf_counter()
    ce = build_counterexample(canonical_params, Modulus.power(1.0, 0.1))
    TIMINGS["canonical_build"] = time.perf_counter() - t0
    return ce


@pytest.fixture
def canonical_copy(canonical):
    """An independent copy that a test may tamper with."""
    return Counterexample.from_dict(copy.deepcopy(canonical.to_dict()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
