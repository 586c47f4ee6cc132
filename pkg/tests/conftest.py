import numpy as np
import pytest

_ACCEPTANCE_LINES: list[str] = []


def random_sequence(rng, T, m, kind=None):
    """A random nonnegative return matrix with every row nonzero.

    Mixes a few market shapes so that pairs solutions land in the interior,
    on the boundary, and on sequences containing zero returns.
    """
    kind = kind if kind is not None else rng.integers(4)
    if kind == 0:
        x = rng.lognormal(0.0, rng.uniform(0.05, 0.8), size=(T, m))
    elif kind == 1:
        x = rng.uniform(0.0, 2.0, size=(T, m))
    elif kind == 2:
        x = rng.choice([0.5, 1.0, 2.0], size=(T, m))
    else:
        x = rng.lognormal(0.0, 0.3, size=(T, m))
        x[rng.uniform(size=(T, m)) < 0.15] = 0.0
    dead = ~np.any(x > 0, axis=1)
    x[dead, rng.integers(m, size=dead.sum())] = 1.0
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed at the end of the run."""

    def record(number, title, passed, detail=""):
        tag = "PASS" if passed else "FAIL"
        line = f"[{tag}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
