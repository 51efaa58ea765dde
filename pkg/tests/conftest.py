import sys
import numpy as np
import pytest

from exactsv.ggc import DirichletMeanSpec, KernelKind, ScaledBeta


@pytest.fixture
def table_spec():
    def make(delta):
        return DirichletMeanSpec(delta, KernelKind.ONE_MINUS_DECAY, 1.0, 1.0,
                                 ScaledBeta(1.0, 1.0, 1.0))
    return make


def zscore(x, target):
    x = np.asarray(x, dtype=float)
    return (x.mean() - target) / (x.std(ddof=1) / np.sqrt(x.size))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
