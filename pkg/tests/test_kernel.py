import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import eval_legendre

from spharlasso.exceptions import DomainError
from spharlasso.kernel import (
    KernelEstimate,
    MseAccumulator,
    equispaced_grid,
    kernel_eval,
    l2_distance_sq,
    linf_distance,
    linf_per_kernel,
    mse,
    squared_error_on_grid,
    write_kernel_curves,
)


def oracle_values(phi, z):
    phi = np.asarray(phi, dtype=float)
    ell = np.arange(phi.shape[0])
    P = np.array([eval_legendre(l, z) for l in ell])  # (L, len(z))
    return (P.T * (2 * ell + 1) / (4 * math.pi)) @ phi


def tables(max_L=12, max_p=3):
    return st.tuples(st.integers(1, max_L), st.integers(1, max_p)).flatmap(
        lambda s: arrays(float, s, elements=st.floats(-1, 1)))


def test_constant_kernel():
    k = KernelEstimate([[1.0]])
    assert kernel_eval(k, 1, 0.3) == pytest.approx(1 / (4 * math.pi))
    assert kernel_eval(k, 1, 0.3) == pytest.approx(0.0795775, abs=1e-7)
    assert l2_distance_sq(k, KernelEstimate([[0.0]])) == pytest.approx(1 / (8 * math.pi**2))
    assert l2_distance_sq(k, KernelEstimate([[0.0]])) == pytest.approx(0.01266515, abs=1e-8)


def test_kernel_values_match_scipy():
    rng = np.random.default_rng(0)
    phi = rng.standard_normal((30, 2))
    z = np.linspace(-1, 1, 77)
    np.testing.assert_allclose(KernelEstimate(phi).values(z), oracle_values(phi, z), atol=1e-11)
    np.testing.assert_allclose(kernel_eval(KernelEstimate(phi), 2, z), oracle_values(phi, z)[:, 1], atol=1e-11)


def test_grid_values_match_pointwise():
    rng = np.random.default_rng(1)
    k = KernelEstimate(rng.standard_normal((20, 3)))
    np.testing.assert_allclose(k.grid_values(101), k.values(equispaced_grid(101)), atol=1e-13)


def test_kernel_errors():
    k = KernelEstimate([[1.0, 2.0]])
    with pytest.raises(IndexError):
        kernel_eval(k, 3, 0.0)
    with pytest.raises(IndexError):
        kernel_eval(k, 0, 0.0)
    with pytest.raises(DomainError):
        kernel_eval(k, 1, 1.5)
    with pytest.raises(ValueError):
        l2_distance_sq(k, KernelEstimate([[1.0]]))


def test_grid_endpoints():
    g = equispaced_grid(2000)
    assert g[0] == -1.0 and g[-1] == 1.0 and g.size == 2000


def test_zero_padding_for_different_truncations():
    a = KernelEstimate([[1.0], [2.0], [3.0]])
    b = KernelEstimate([[1.0], [2.0]])
    assert l2_distance_sq(a, b) == pytest.approx(9 * 5 / (8 * math.pi**2))
    assert linf_distance(a, b) == pytest.approx(3 * 5 / (4 * math.pi), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(tables(), st.data())
def test_parseval_against_quadrature(phi, data):
    other = data.draw(arrays(float, phi.shape, elements=st.floats(-1, 1)))
    a, b = KernelEstimate(phi), KernelEstimate(other)
    x, w = np.polynomial.legendre.leggauss(phi.shape[0] + 1)
    diff = oracle_values(phi, x) - oracle_values(other, x)
    quad = float(np.sum(w[:, None] * diff**2))
    assert l2_distance_sq(a, b) == pytest.approx(quad, rel=1e-10, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(tables(max_L=10), st.data())
def test_metric_axioms(phi, data):
    shape = phi.shape
    b = KernelEstimate(data.draw(arrays(float, shape, elements=st.floats(-1, 1))))
    c = KernelEstimate(data.draw(arrays(float, shape, elements=st.floats(-1, 1))))
    a = KernelEstimate(phi)
    assert l2_distance_sq(a, a) == 0.0 and linf_distance(a, a) == 0.0
    assert l2_distance_sq(a, b) == pytest.approx(l2_distance_sq(b, a))
    assert linf_distance(a, b) == pytest.approx(linf_distance(b, a), rel=1e-9)
    tol = 1e-9
    assert math.sqrt(l2_distance_sq(a, c)) <= math.sqrt(l2_distance_sq(a, b)) + math.sqrt(l2_distance_sq(b, c)) + tol
    assert linf_distance(a, c) <= linf_distance(a, b) + linf_distance(b, c) + tol
    # ||f||_2^2 <= 2 ||f||_inf^2 on [-1, 1]
    assert l2_distance_sq(a, b) <= 2 * linf_distance(a, b) ** 2 + tol


@settings(max_examples=30, deadline=None)
@given(tables(max_L=15))
def test_linf_matches_dense_grid(phi):
    a, zero = KernelEstimate(phi), KernelEstimate(np.zeros_like(phi))
    z = np.linspace(-1, 1, 200_001)
    dense = float(np.max(np.linalg.norm(oracle_values(phi, z), axis=1)))
    got = linf_distance(a, zero)
    assert got >= dense * (1 - 1e-12)
    assert got == pytest.approx(dense, rel=1e-6, abs=1e-300)


def test_linf_per_kernel():
    phi = np.array([[0.0, 1.0], [1.0, 0.0]])
    per = linf_per_kernel(KernelEstimate(phi), KernelEstimate(np.zeros((2, 2))))
    np.testing.assert_allclose(per, [3 / (4 * math.pi), 1 / (4 * math.pi)])


def test_squared_error_matches_manual_grid():
    rng = np.random.default_rng(2)
    truth = KernelEstimate(rng.standard_normal((8, 2)))
    est = KernelEstimate(rng.standard_normal((5, 2)))
    z = np.linspace(-1, 1, 2000)
    manual = np.mean((oracle_values(np.vstack([est.phi, np.zeros((3, 2))]), z) - oracle_values(truth.phi, z)) ** 2,
                     axis=0)
    np.testing.assert_allclose(squared_error_on_grid(est, truth), manual, rtol=1e-10)


def test_mse_averages_replications_and_sums_kernels():
    rng = np.random.default_rng(3)
    truth = KernelEstimate(rng.standard_normal((6, 2)))
    ests = [KernelEstimate(truth.phi + 0.1 * rng.standard_normal((6, 2))) for _ in range(4)]
    per = np.mean([squared_error_on_grid(e, truth) for e in ests], axis=0)
    assert mse(ests, truth) == pytest.approx(per.sum(), rel=1e-12)
    acc = MseAccumulator(truth)
    with pytest.raises(ValueError):
        acc.value
    for e in ests:
        acc.add(e)
    np.testing.assert_allclose(acc.per_kernel, per, rtol=1e-12)


def test_mse_tracks_l2_on_fine_grid():
    # the grid mean approximates half the L2 integral
    rng = np.random.default_rng(4)
    truth = KernelEstimate(rng.standard_normal((10, 2)))
    est = KernelEstimate(rng.standard_normal((10, 2)))
    assert mse([est], truth) == pytest.approx(l2_distance_sq(est, truth) / 2, rel=0.01)


def test_kernel_curves_csv(tmp_path):
    truth = KernelEstimate([[1.0, 0.0], [0.0, 1.0]])
    est = KernelEstimate([[0.5, 0.0], [0.0, 0.5]])
    path = tmp_path / "curves.csv"
    write_kernel_curves(path, truth, est, grid_size=5)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["z", "k1_true", "k1_hat", "k2_true", "k2_hat"]
    assert len(rows) == 6
    first = [float(v) for v in rows[1]]
    assert first[0] == -1.0
    assert first[1] == pytest.approx(1 / (4 * math.pi))
    assert first[3] == pytest.approx(-3 / (4 * math.pi))
    assert first[4] == pytest.approx(-1.5 / (4 * math.pi))


def test_worked_kernel_values():
    assert np.all(KernelEstimate(np.zeros((5, 2))).values(np.linspace(-1, 1, 9)) == 0)
    np.testing.assert_allclose(KernelEstimate([[4 * math.pi]]).values([-1, 0.2, 1])[:, 0], 1.0)
    t1 = np.zeros((50, 2))
    t1[2, 0], t1[3, 1] = -0.7, 0.5
    assert kernel_eval(KernelEstimate(t1), 2, 1.0) == pytest.approx(3.5 / (4 * math.pi))
    assert kernel_eval(KernelEstimate(t1), 2, 1.0) == pytest.approx(0.27852, abs=1e-5)


def test_single_gap_l2():
    a = np.zeros((50, 2))
    b = a.copy()
    b[2, 0] = 0.7
    assert l2_distance_sq(KernelEstimate(a), KernelEstimate(b)) == pytest.approx(0.49 * 5 / (8 * math.pi**2))
    assert l2_distance_sq(KernelEstimate(a), KernelEstimate(b)) == pytest.approx(0.0310296, abs=1e-7)


@pytest.mark.parametrize("ell, c", [(0, 2.0), (3, -0.4), (17, 1.3)])
def test_single_term_linf_attained_at_one(ell, c):
    d = np.zeros((20, 1))
    d[ell, 0] = c
    got = linf_distance(KernelEstimate(d), KernelEstimate(np.zeros((20, 1))))
    assert got == pytest.approx(abs(c) * (2 * ell + 1) / (4 * math.pi), rel=1e-12)


def test_mse_worked_examples():
    truth = KernelEstimate(np.zeros((3, 2)))
    assert mse([truth, truth], truth) == 0.0
    const = np.zeros((3, 2))
    const[0, 0] = 4 * math.pi
    assert mse([KernelEstimate(const)], truth) == pytest.approx(1.0)
    term = np.zeros((5, 1))
    term[4, 0] = 0.3
    z = np.linspace(-1, 1, 2000)
    direct = sum((0.3 * 9 / (4 * math.pi) * eval_legendre(4, zg)) ** 2 for zg in z) / 2000
    assert mse([KernelEstimate(term)], KernelEstimate(np.zeros((5, 1)))) == pytest.approx(direct, rel=1e-12)
