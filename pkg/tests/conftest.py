import numpy as np
import pytest

from bootlasso.lasso import standardize
from bootlasso.simulation import TruthRule, build_truth, load_diabetes_quadratic, simulated_replication

SIM_SEED = 1


@pytest.fixture(scope="session")
def diabetes():
    return load_diabetes_quadratic()


@pytest.fixture(scope="session")
def truth(diabetes):
    return build_truth(diabetes, TruthRule("cv", 10, 10, "min"), SIM_SEED)


@pytest.fixture(scope="session")
def simulated(diabetes, truth):
    """One simulated response on the diabetes design."""
    return simulated_replication(diabetes, truth, SIM_SEED, 0)


def random_dataset(rng, n, p, noise=0.5, sparsity=0.5):
    X = rng.normal(size=(n, p))
    beta = rng.normal(size=p) * (rng.random(p) < sparsity)
    y = X @ beta + noise * rng.normal(size=n)
    return standardize(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
