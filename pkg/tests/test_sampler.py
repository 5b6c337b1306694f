import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kstest

from pluridim import endomorphism as E, rng
from pluridim.greens import escape_rate
from pluridim.sampler import (
    backward_orbit, backward_step, energy_test, extend_backward, pushforward_invariance,
    sample_measure,
)

from conftest import product_z2, quadratic, skew, z2


def _freqs(F, target, n=10_000):
    g = rng.generator(11)
    draws = np.array([backward_step(F, target, g) for _ in range(n)])
    fiber = E.preimages(F, target)
    idx = np.argmin(np.linalg.norm(draws[:, None, :] - fiber[None], axis=-1), axis=1)
    return np.bincount(idx, minlength=len(fiber)) / n


def test_backward_step_two_point_fiber():
    f = _freqs(z2(), [4])
    assert np.all(np.abs(f - 0.5) < 0.02)


def test_backward_step_double_root():
    g = rng.generator(0)
    for _ in range(50):
        assert abs(backward_step(z2(), [0], g)[0]) < 1e-7


def test_backward_step_skew_fiber():
    f = _freqs(skew(), [4, 3])
    assert np.all(np.abs(f - 0.25) < 0.02)


def test_circle_sample():
    S = sample_measure(z2(), 5000, 40, seed=3)
    assert np.all(np.abs(np.abs(S.points[:, 0]) - 1) < 1e-3)
    angles = np.mod(np.angle(S.points[:, 0]), 2 * np.pi) / (2 * np.pi)
    assert kstest(angles, "uniform").pvalue > 0.01


def test_torus_sample():
    S = sample_measure(product_z2(), 5000, 40, seed=4)
    assert np.all(np.abs(np.abs(S.points) - 1) < 1e-3)


def test_chebyshev_segment():
    S = sample_measure(quadratic(-2), 5000, 40, seed=5)
    z = S.points[:, 0]
    assert np.all(np.abs(z.imag) < 1e-3)
    assert np.all(np.abs(z.real) <= 2 + 1e-9)


def test_determinism_and_parallel_equivalence():
    F = skew(-1)
    a = sample_measure(F, 3000, 20, seed=9)
    b = sample_measure(F, 3000, 20, seed=9)
    c = sample_measure(F, 3000, 20, seed=9, workers=4)
    assert a.points.tobytes() == b.points.tobytes() == c.points.tobytes()


def test_prefix_stability():
    # orbit i depends only on (seed, i): a smaller sample is a prefix of a larger one
    a = sample_measure(z2(), 100, 20, seed=2)
    b = sample_measure(z2(), 2500, 20, seed=2)
    assert np.array_equal(a.points, b.points[:100])


def test_seeds_differ():
    a = sample_measure(z2(), 200, 20, seed=1).points
    b = sample_measure(z2(), 200, 20, seed=2).points
    assert not np.any(np.isin(np.round(a, 12), np.round(b, 12)))


@pytest.mark.parametrize("make", [z2, lambda: quadratic(-1), product_z2, skew])
def test_support_on_filled_julia_set(make):
    F = make()
    S = sample_measure(F, 2000, 40, seed=6)
    assert np.max(escape_rate(F, S.points)) < 1e-6


def test_dense_maps_unsupported():
    F = E.dense(list(skew().components))
    with pytest.raises(NotImplementedError):
        sample_measure(F, 10)


def test_pushforward_invariance():
    F = skew()
    S = sample_measure(F, 5000, 40, seed=7)
    ref = sample_measure(F, 5000, 40, seed=8)
    _, p = pushforward_invariance(F, S, ref, n_perm=99)
    assert p > 0.01


def test_energy_test_detects_shift():
    g = np.random.default_rng(0)
    X = g.normal(size=(500, 2))
    _, p_same = energy_test(X, g.normal(size=(500, 2)), n_perm=99)
    _, p_diff = energy_test(X, g.normal(size=(500, 2)) + 0.5, n_perm=99)
    assert p_same > 0.01
    assert p_diff <= 0.01


def test_energy_statistic_matches_direct_formula():
    g = np.random.default_rng(1)
    X, Y = g.normal(size=(40, 2)), g.normal(size=(30, 2)) + 0.2
    stat, _ = energy_test(X, Y, n_perm=9, block=7)
    d = lambda A, B: np.linalg.norm(A[:, None] - B[None], axis=-1).mean()
    assert stat == pytest.approx(2 * d(X, Y) - d(X, X) - d(Y, Y), rel=1e-6)


def test_window_on_circle():
    W = backward_orbit(z2(), 3, seed=1)
    assert W.m == 3
    assert np.all(np.abs(np.abs(W.states) - 1) < 1e-6)
    for i in range(3, 0, -1):
        assert np.allclose(W.state(i) ** 2, W.state(i - 1), atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 8))
def test_window_residual_and_critical_distance(seed, m):
    F = skew()
    W = backward_orbit(F, m, seed=seed)
    X = W.states
    assert np.all(np.linalg.norm(E.evaluate(F, X[:-1]) - X[1:], axis=1) < 1e-8)
    assert np.all(np.abs(np.linalg.det(E.jacobian(F, X[:-1]))) > 1e-12)


def test_extend_backward_shape_and_endpoint():
    F = skew(-1)
    S = sample_measure(F, 50, 40, seed=0)
    W = extend_backward(F, S.points, 5, seed=0)
    assert W.shape == (50, 6, 2)
    assert np.array_equal(W[:, -1], S.points)
    assert np.allclose(E.evaluate(F, W[:, :-1].reshape(-1, 2)), W[:, 1:].reshape(-1, 2), atol=1e-8)


def test_real_coords_layout():
    S = sample_measure(product_z2(), 10, 10, seed=0)
    R = S.real_coords()
    assert R.shape == (10, 4)
    assert np.allclose(R[:, 2] + 1j * R[:, 3], S.points[:, 1])


def test_orbit_streams_are_independent_of_batching():
    u1 = rng.orbit_uniforms(5, [3, 4], (2, 2))
    u2 = rng.orbit_uniforms(5, [4], (2, 2))
    assert np.array_equal(u1[1], u2[0])
    assert rng.stream_key(1, 2) != rng.stream_key(2, 1)
    assert math.isfinite(float(rng.generator(2 ** 64 - 1, 0).random()))
