import numpy as np
import pytest

from barcode_grad.complex import build_complex, validate_filter


@pytest.fixture
def segment():
    return build_complex([[0], [1], [0, 1]])


@pytest.fixture
def triangle_boundary():
    return build_complex([[0, 1], [1, 2], [0, 2]])


@pytest.fixture
def full_triangle():
    return build_complex([[0, 1, 2]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def filt(K, values):
    return validate_filter(K, np.asarray(values, dtype=float))


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion; also shown in the terminal summary."""

    def record(number, name, ok, detail=""):
        line = f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
