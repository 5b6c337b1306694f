import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pluridim import endomorphism as E
from pluridim.greens import (
    EscapeParams, NotRegularError, escape_radius, escape_rate, green_grid, in_filled_julia,
)

from conftest import LOG2, product_z2, quadratic, random_ball, skew, z2


def test_escape_radius_z2():
    R = escape_radius(z2())
    assert 2 <= R <= 4


@pytest.mark.parametrize("make", [lambda: quadratic(-6), product_z2, skew, z2])
def test_doubling_property(make):
    F = make()
    R = escape_radius(F)
    g = np.random.default_rng(0)
    Z = random_ball(g, 10_000, F.n, 1.0)
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    Z *= g.uniform(R, 2 * R, size=(10_000, 1)) * (1 + 1e-12)
    ratio = np.linalg.norm(E.evaluate(F, Z), axis=1) / np.linalg.norm(Z, axis=1)
    assert ratio.min() >= 2


def test_irregular_map_rejected():
    F = E.skew2d([0, 0, 1], [[0, 0, 0], [0, 1, 0], [0, 0, 0]])
    with pytest.raises(NotRegularError):
        escape_radius(F)


def test_examples_z2():
    assert escape_rate(z2(), 2) == pytest.approx(LOG2, abs=1e-6)
    assert escape_rate(z2(), 0.5) == 0.0


def test_long_iteration_oracle_z2_minus_6():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 60
    x = mpmath.mpf(0)
    for _ in range(60):
        x = x * x - 6
    oracle = float(mpmath.log(abs(x)) / mpmath.mpf(2) ** 60)
    assert abs(escape_rate(quadratic(-6), 0) - oracle) < 1e-6


def test_filled_julia_examples():
    assert in_filled_julia(z2(), 0.9)
    assert not in_filled_julia(z2(), 1.1)
    assert not in_filled_julia(quadratic(-6), 0)


def test_params_validation():
    with pytest.raises(ValueError):
        EscapeParams(escape_radius=2.0, max_iter=0)
    with pytest.raises(ValueError):
        EscapeParams(escape_radius=-1.0)


@pytest.mark.parametrize("make", [z2, lambda: quadratic(-1), lambda: quadratic(-6), product_z2, skew])
def test_functional_equation(make):
    F = make()
    p = EscapeParams.for_map(F)
    g = np.random.default_rng(1)
    Z = random_ball(g, 1000, F.n, 2 * p.escape_radius)
    lhs = escape_rate(F, E.evaluate(F, Z), p)
    rhs = F.d * escape_rate(F, Z, p)
    assert np.max(np.abs(lhs - rhs)) < 10 * p.tol


def test_nonnegative_and_zero_on_filled_set():
    F = quadratic(-1)
    g = np.random.default_rng(2)
    Z = random_ball(g, 2000, 1, 3.0)
    G = escape_rate(F, Z)
    inside = in_filled_julia(F, Z)
    assert np.all(G >= 0)
    assert np.all(G[inside] == 0)
    assert inside.any() and (~inside).any()


def test_monotone_truncation():
    F = quadratic(-0.75 + 0.1j)
    g = np.random.default_rng(3)
    Z = random_ball(g, 500, 1, 2.0)
    R = escape_radius(F)
    a = escape_rate(F, Z, EscapeParams(R, max_iter=40))  # d^-40 log R < tol
    b = escape_rate(F, Z, EscapeParams(R, max_iter=1000))
    assert np.all(b - a <= 1e-9)


cplx = st.complex_numbers(min_magnitude=0.01, max_magnitude=6, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(cplx, cplx)
def test_product_is_max_of_factors(z, w):
    G = escape_rate(product_z2(), [z, w])
    g1 = escape_rate(z2(), z)
    g2 = escape_rate(z2(), w)
    assert abs(G - max(g1, g2)) < 1e-8


def test_green_grid_shape():
    pts, vals = green_grid(z2(), (-2, 2), (-1, 1), (5, 3))
    assert pts.shape == (15, 1) and vals.shape == (15,)
    assert np.allclose(vals, np.log(np.maximum(np.abs(pts[:, 0]), 1)), atol=1e-8)


def test_overflow_guard():
    # a point whose orbit exceeds 1e308 within a few steps still gets a finite value
    F = quadratic(-6)
    v = escape_rate(F, 1e150)
    assert math.isfinite(v)
    assert v == pytest.approx(math.log(1e150), rel=1e-9)
