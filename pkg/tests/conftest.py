import math

import numpy as np
import pytest

from pluridim import endomorphism as E

LOG2 = math.log(2)


def z2():
    return E.one_d([0, 0, 1])


def quadratic(c):
    return E.one_d([c, 0, 1])


def product_z2():
    return E.product([0, 0, 1], [0, 0, 1])


def skew(c=0.0):
    # (z, w) -> (z^2 + c, w^2 + z); q[i][j] multiplies z^i w^j
    return E.skew2d([c, 0, 1], [[0, 0, 1], [1, 0, 0], [0, 0, 0]])


STOCK = {
    "z2": z2,
    "z2-1": lambda: quadratic(-1),
    "z2-2": lambda: quadratic(-2),
    "z2-6": lambda: quadratic(-6),
    "product": product_z2,
    "skew": skew,
    "skew-1": lambda: skew(-1.0),
}


@pytest.fixture(params=sorted(STOCK))
def stock_map(request):
    return STOCK[request.param]()


def random_ball(g, N, n, radius):
    v = g.normal(size=(N, 2 * n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= radius * g.uniform(size=(N, 1)) ** (1 / (2 * n))
    return v[:, :n] + 1j * v[:, n:]


# --- acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
