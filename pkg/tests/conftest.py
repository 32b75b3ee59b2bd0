import itertools

import numpy as np
import pytest


def naive_dft2(plane):
    """Direct quadruple-loop evaluation of the unnormalised 2-D DFT."""
    plane = np.asarray(plane, dtype=float)
    m, n = plane.shape
    out = np.zeros((m, n), dtype=complex)
    for u, v in itertools.product(range(m), range(n)):
        acc = 0j
        for x, y in itertools.product(range(m), range(n)):
            acc += plane[x, y] * np.exp(-2j * np.pi * (u * x / m + v * y / n))
        out[u, v] = acc
    return out


def central_differences(fn, x, step):
    """Central finite-difference gradient of scalar ``fn`` at array ``x``."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + step
        up = fn(x)
        x[idx] = orig - step
        down = fn(x)
        x[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
