import numpy as np
import pytest

from pseudomarginal.core import Conditioning, ParameterPoint, WeightScheme
from pseudomarginal.estimators import GaussianAuxProposal, IidEstimator, LangevinAuxProposal, LangevinEstimator
from pseudomarginal.targets.toy import ToyTarget

TOY_STEP_VARIANCE = 0.2
TOY_TRUNCATION = 12.0


def make_rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def toy():
    return ToyTarget()


def toy_langevin_estimator(n, s2=TOY_STEP_VARIANCE, eta=TOY_TRUNCATION, use_numba=None):
    t = ToyTarget()
    lp = LangevinAuxProposal.for_target(t, s2, eta, GaussianAuxProposal([3.0, 3.0], np.eye(2)))
    return LangevinEstimator(t, lp, WeightScheme.uniform(n, Conditioning.MARKOV), use_numba=use_numba)


def toy_model1_estimator(n):
    t = ToyTarget()
    return IidEstimator(t, GaussianAuxProposal([0.0], [[1.0]]), WeightScheme.uniform(n))


M1, M2 = ParameterPoint(1), ParameterPoint(2)


ACCEPTANCE_LINES = []


def report(criterion: int, passed: bool, detail: str) -> bool:
    """Record and print one acceptance verdict line."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append((criterion, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
