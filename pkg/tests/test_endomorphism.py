import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pluridim import endomorphism as E
from pluridim.roots import RootFindError

from conftest import product_z2, skew, z2


# --- evaluate / jacobian -------------------------------------------------------

def test_evaluate_examples():
    assert E.evaluate(E.one_d([1, 0, 1]), 2) == pytest.approx(5)
    assert np.allclose(E.evaluate(product_z2(), [2, 3]), [4, 9])
    assert np.allclose(E.evaluate(skew(), [1, 2]), [1, 5])


def test_jacobian_examples():
    assert np.allclose(E.jacobian(z2(), 3), [[6]])
    assert np.allclose(E.jacobian(skew(), [1, 2]), [[2, 0], [1, 4]])


def test_batch_evaluation_matches_pointwise():
    F = skew(-1)
    Z = np.array([[0.3 + 0.1j, -1.2j], [2, 1 + 1j]])
    out = E.evaluate(F, Z)
    assert out.shape == (2, 2)
    for i in range(2):
        assert np.allclose(out[i], E.evaluate(F, Z[i]))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        E.evaluate(skew(), [1, 2, 3])


def test_nonfinite_point_rejected():
    with pytest.raises(ValueError):
        E.evaluate(z2(), [np.nan])


cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def _random_map(kind, coeffs):
    c = list(coeffs)
    if kind == "oned":
        return E.one_d([c[0], c[1], 1 + c[2]])
    if kind == "product":
        return E.product([c[0], c[1], 1], [c[2], c[3], 1 + 0.5j])
    if kind == "skew2d":
        return E.skew2d([c[0], 0, 1], [[c[1], c[2], 1], [c[3], c[4], 0], [c[5], 0, 0]])
    P1 = np.zeros((3, 3), complex)
    P2 = np.zeros((3, 3), complex)
    P1[2, 0], P1[0, 1], P1[1, 1] = 1, c[0], c[1]
    P2[0, 2], P2[1, 0], P2[1, 1] = 1, c[2], c[3]
    return E.dense([P1, P2])


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["oned", "product", "skew2d", "dense"]),
       st.lists(cplx, min_size=6, max_size=6), st.lists(cplx, min_size=2, max_size=2))
def test_jacobian_matches_central_differences(kind, coeffs, point):
    F = _random_map(kind, coeffs)
    z = np.array(point[: F.n])
    J = E.jacobian(F, z)
    h = 1e-6
    fd = np.empty((F.n, F.n), complex)
    for a in range(F.n):
        e = np.zeros(F.n)
        e[a] = h
        fd[:, a] = (E.evaluate(F, z + e) - E.evaluate(F, z - e)) / (2 * h)
    assert np.max(np.abs(J - fd)) <= 1e-6 * max(1.0, np.max(np.abs(J)))


def test_compensated_path_matches_exact():
    F = E.one_d([-6e9, 0, 1e-1])
    assert F.compensated
    assert E.evaluate(F, 3.0) == pytest.approx(-6e9 + 0.9, rel=1e-15)


# --- construction, specs ------------------------------------------------------

def test_degree_below_two_rejected():
    with pytest.raises(ValueError, match="degree must be >= 2"):
        E.one_d([0, 1])


def test_product_requires_equal_degrees():
    with pytest.raises(ValueError):
        E.product([0, 0, 1], [0, 0, 0, 1])


def test_skew_total_degree_enforced():
    with pytest.raises(ValueError):
        E.skew2d([0, 0, 1], [[0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])


@pytest.mark.parametrize("make", [z2, product_z2, skew,
                                  lambda: _random_map("dense", [0.5, 1j, -1, 0.25, 0, 0])])
def test_spec_round_trip(make):
    F = make()
    G = E.from_spec(E.to_spec(F))
    assert G.map_id == F.map_id
    z = np.array([0.3 - 0.2j, 1.1 + 0.4j])[: F.n]
    assert np.allclose(E.evaluate(F, z), E.evaluate(G, z))


def test_spec_degree_mismatch():
    spec = E.to_spec(z2())
    spec["degree"] = 3
    with pytest.raises(ValueError):
        E.from_spec(spec)


# --- regularity ---------------------------------------------------------------

def test_regularity_examples():
    assert E.is_regular(E.skew2d([0, 0, 1], [[0, 0, 1], [0, 1, 0], [0, 0, 0]]))
    assert not E.is_regular(E.skew2d([0, 0, 1], [[0, 0, 0], [0, 1, 0], [0, 0, 0]]))
    for c in (0, -2, 0.3 + 0.5j, -6):
        assert E.is_regular(E.one_d([c, 0, 1]))
    assert E.is_regular(product_z2())


def _as_dense(F):
    return E.dense(list(F.components))


@pytest.mark.parametrize("q", [
    [[0, 0, 1], [0, 1, 0], [0, 0, 0]],      # w^2 + zw: regular
    [[0, 0, 0], [0, 1, 0], [0, 0, 0]],      # zw: not regular
    [[0, 0, 0], [0, 0, 0], [1, 0, 0]],      # z^2: not regular
    [[0, 0, 2j], [0, 0, 0], [1, 0, 0]],     # 2i w^2 + z^2: regular
])
def test_skew_criterion_matches_sphere_sampling(q):
    F = E.skew2d([0, 0, 1], q)
    dense = E.check_regularity(_as_dense(F))
    assert dense.sampled
    assert dense.regular == E.is_regular(F)


def test_leading_form_min_product_exact():
    value, sampled = E.leading_form_min(product_z2())
    assert not sampled
    assert value == pytest.approx(1 / math.sqrt(2))


# --- preimages ----------------------------------------------------------------

def test_preimage_examples():
    assert np.allclose(np.sort_complex(E.preimages(z2(), [4]).ravel()), [-2, 2])
    roots = E.preimages(E.one_d([1, 0, 1]), [0]).ravel()
    assert np.allclose(roots[np.argsort(roots.imag)], [-1j, 1j])
    X = E.preimages(skew(), [4, 3])
    expected = {(2, 1), (2, -1), (-2, math.sqrt(5)), (-2, -math.sqrt(5))}
    got = {tuple(np.round(x.real, 10)) for x in X}
    assert np.allclose(X.imag, 0, atol=1e-12)
    assert got == {tuple(np.round(e, 10)) for e in expected}
    assert np.allclose(E.evaluate(skew(), X), [4, 3])


def test_preimages_of_critical_value_have_multiplicity():
    X = E.preimages(z2(), [0])
    assert X.shape == (2, 1)
    assert np.allclose(X, 0, atol=1e-7)


def test_dense_has_no_inverse():
    F = _as_dense(skew())
    with pytest.raises(NotImplementedError):
        E.preimages(F, [1, 1])


def test_irregular_skew_has_no_inverse():
    F = E.skew2d([0, 0, 1], [[0, 0, 0], [0, 1, 0], [0, 0, 0]])
    with pytest.raises(ValueError):
        E.preimages(F, [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["oned", "product", "skew2d"]),
       st.lists(cplx, min_size=6, max_size=6), st.lists(cplx, min_size=2, max_size=2))
def test_fiber_contains_point_and_evaluates_back(kind, coeffs, point):
    F = _random_map(kind, coeffs)
    z = np.array(point[: F.n])
    t = E.evaluate(F, z)
    try:
        X = E.preimages(F, t)
    except RootFindError:
        pytest.skip("ill-conditioned fiber")
    assert X.shape == (F.d ** F.n, F.n)
    assert np.all(np.linalg.norm(E.evaluate(F, X) - t, axis=1) < 1e-8 * (1 + np.linalg.norm(t)))
    # z itself is in the fiber (double roots only resolve to ~sqrt(eps))
    nearest = np.min(np.linalg.norm(X - z, axis=1))
    det = abs(np.linalg.det(E.jacobian(F, z)))
    assert nearest < (1e-8 if det > 1e-3 else 1e-5)
