import numpy as np
import pytest

from fairfront import JointModel


@pytest.fixture
def hand_jm():
    """2 groups x 2 labels x 4 feature values; the Bayes classifier is unfair."""
    mu = np.array([0.3, 0.2, 0.3, 0.2])
    phi = np.array([
        [0.50, 0.30, 0.15, 0.05],
        [0.05, 0.15, 0.30, 0.50],
        [0.30, 0.30, 0.20, 0.20],
        [0.20, 0.20, 0.30, 0.30],
    ])
    return JointModel.from_arrays(mu, phi, 2, 2)


@pytest.fixture
def bayes_example():
    """mu uniform, phi with D = 2, posteriors worked out by hand."""
    mu = np.full(4, 0.25)
    phi = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5], [0.3, 0.7]])
    return JointModel.from_arrays(mu, phi, 2, 2)


def random_stochastic(rng, rows, cols):
    return rng.dirichlet(np.ones(cols), size=rows)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line for the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
