import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid
from scipy.special import eval_legendre

from spharlasso.exceptions import DomainError
from spharlasso.legendre import gauss_legendre_nodes, legendre_eval, legendre_table


@pytest.mark.parametrize("degree, z, expected", [(0, 0.37, 1.0), (2, 0.5, -0.125), (5, 1.0, 1.0)])
def test_legendre_eval_examples(degree, z, expected):
    assert legendre_eval(degree, z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("degree, z", [(-1, 0.0), (2, 1.5), (3, -1.01)])
def test_legendre_eval_domain(degree, z):
    with pytest.raises(DomainError):
        legendre_eval(degree, z)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 80), st.floats(-1.0, 1.0))
def test_legendre_matches_scipy(degree, z):
    assert legendre_eval(degree, z) == pytest.approx(eval_legendre(degree, z), abs=1e-12)


def test_table_small_examples():
    t = legendre_table(1, [-1, 0, 1])
    np.testing.assert_array_equal(t.values, [[1, 1, 1], [-1, 0, 1]])
    t = legendre_table(2, [0])
    np.testing.assert_allclose(t.values[:, 0], [1, 0, -0.5], atol=1e-15)


def test_table_is_read_only():
    t = legendre_table(3, [0.1, 0.2])
    with pytest.raises(ValueError):
        t.values[0, 0] = 2.0


def test_table_trapezoid_self_products():
    z = np.linspace(-1, 1, 2000)
    h = z[1] - z[0]
    t = legendre_table(50, z)
    for ell in range(51):
        trap = trapezoid(t.values[ell] ** 2, z)
        exact = 2 / (2 * ell + 1)
        assert trap == pytest.approx(exact, rel=0.03)
        # first Euler-Maclaurin correction: h^2/12 * (f'(1) - f'(-1)) with f = P_ell^2
        corrected = trap - h * h / 12 * 2 * ell * (ell + 1)
        assert corrected == pytest.approx(exact, abs=5e-5)


def test_gauss_legendre_small_rules():
    x, w = gauss_legendre_nodes(1)
    np.testing.assert_allclose(x, [0.0])
    np.testing.assert_allclose(w, [2.0])
    x, w = gauss_legendre_nodes(2)
    np.testing.assert_allclose(x, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(w, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("order", [3, 7, 20, 51, 100])
def test_gauss_legendre_matches_numpy(order):
    x, w = gauss_legendre_nodes(order)
    xr, wr = np.polynomial.legendre.leggauss(order)
    np.testing.assert_allclose(x, xr, atol=1e-14)
    np.testing.assert_allclose(w, wr, atol=1e-14)
    assert np.all(w > 0)
    np.testing.assert_array_equal(x, -x[::-1])


@pytest.mark.parametrize("order", [1, 2, 5, 12])
def test_gauss_legendre_exact_monomials(order):
    x, w = gauss_legendre_nodes(order)
    for k in range(2 * order):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.sum(w * x**k) == pytest.approx(exact, abs=1e-13)


def test_gauss_legendre_p50_squared():
    x, w = gauss_legendre_nodes(51)
    P = legendre_table(50, x).values
    assert abs(np.sum(w * P[50] ** 2) - 2 / 101) < 1e-12


def test_orthogonality_to_degree_50():
    x, w = gauss_legendre_nodes(51)
    P = legendre_table(50, x).values
    gram = (P * w) @ P.T
    expected = np.diag(2.0 / (2 * np.arange(51) + 1))
    assert np.max(np.abs(gram - expected)) < 1e-10


def test_bound_and_endpoints():
    z = np.linspace(-1, 1, 10_000)
    P = legendre_table(50, z).values
    assert np.max(np.abs(P)) <= 1 + 1e-12
    ends = legendre_table(50, [-1.0, 1.0]).values
    ell = np.arange(51)
    np.testing.assert_allclose(ends[:, 1], 1.0, atol=1e-12)
    np.testing.assert_allclose(ends[:, 0], (-1.0) ** ell, atol=1e-12)
