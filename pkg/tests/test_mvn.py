import math

import numpy as np
import pytest
from scipy.integrate import dblquad
from scipy.stats import multivariate_normal, norm

from cbond.errors import DimensionError, DomainError
from cbond.mvn import (CorrMatrix, MvnProblem, chain_cdf, chain_slices, flip_last_sign,
                       mvn_boundary_slice, mvn_cdf, nested_corr)


def _random_corr(rng, m):
    A = rng.normal(size=(m, m + 2))
    S = A @ A.T
    d = np.sqrt(np.diag(S))
    return S / np.outer(d, d)


def _nested(rng, m):
    times = np.cumsum(rng.uniform(0.2, 1.0, m))
    return nested_corr(0.0, times, lambda t, T: 0.09 * (T - t))


def test_trivial_values():
    assert mvn_cdf(MvnProblem.from_arrays([0.0], [[1.0]])).value == pytest.approx(0.5, abs=1e-15)
    assert mvn_cdf(MvnProblem.from_arrays([0.0, 0.0], np.eye(2))).value == pytest.approx(0.25, abs=1e-12)
    full = MvnProblem.from_arrays([np.inf] * 3, _random_corr(np.random.default_rng(0), 3))
    assert mvn_cdf(full).value == 1.0


def test_orthant_rho_half():
    r = [[1.0, 0.5], [0.5, 1.0]]
    assert mvn_cdf(MvnProblem.from_arrays([0.0, 0.0], r)).value == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_bivariate_against_quadrature():
    rho, a, b = -0.4, 0.3, -0.7
    cov = np.array([[1.0, rho], [rho, 1.0]])
    dens = multivariate_normal(mean=[0, 0], cov=cov).pdf
    ref, _ = dblquad(lambda y, x: dens([x, y]), -10.0, a, -10.0, b, epsabs=1e-12)
    got = mvn_cdf(MvnProblem.from_arrays([a, b], cov)).value
    assert got == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_nested_against_scipy(m):
    rng = np.random.default_rng(m)
    for _ in range(5):
        c = _nested(rng, m)
        a = rng.normal(size=m)
        ref = multivariate_normal.cdf(a, cov=c.entries, abseps=1e-10, releps=0, maxpts=2_000_000)
        assert mvn_cdf(MvnProblem(a, c)).value == pytest.approx(ref, abs=2e-6)


@pytest.mark.parametrize("m", [3, 4])
def test_generic_matrix_qmc(m):
    rng = np.random.default_rng(40 + m)
    R = _random_corr(rng, m)
    a = rng.normal(size=m)
    res = mvn_cdf(MvnProblem.from_arrays(a, R), tol=1e-6)
    ref = multivariate_normal.cdf(a, cov=R, abseps=1e-9, releps=0, maxpts=2_000_000)
    assert res.value == pytest.approx(ref, abs=1e-5)
    assert res.error <= 1e-5


def test_deterministic():
    rng = np.random.default_rng(3)
    R = _random_corr(rng, 4)
    p = MvnProblem.from_arrays(rng.normal(size=4), R)
    assert mvn_cdf(p).value == mvn_cdf(p).value


def test_infinite_and_negative_infinite_limits():
    c = _nested(np.random.default_rng(1), 3)
    a = np.array([0.2, np.inf, -0.1])
    got = mvn_cdf(MvnProblem(a, c)).value
    ref = mvn_cdf(MvnProblem([0.2, -0.1], CorrMatrix(c.entries[np.ix_([0, 2], [0, 2])]))).value
    assert got == pytest.approx(ref, abs=1e-12)
    assert mvn_cdf(MvnProblem([0.2, -np.inf, 1.0], c)).value == 0.0


def test_errors():
    with pytest.raises(DomainError):
        CorrMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(DomainError):
        CorrMatrix(np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]]))
    with pytest.raises(DomainError):
        MvnProblem.from_arrays([0.0], np.eye(2))
    with pytest.raises(DomainError):
        mvn_cdf(MvnProblem.from_arrays([0.0], [[1.0]]), tol=0.0)
    with pytest.raises(DimensionError):
        mvn_cdf(MvnProblem.from_arrays(np.zeros(13), np.eye(13)))


def test_dimension_cap_env(monkeypatch):
    monkeypatch.setenv("CBOND_MAX_MVN_DIM", "2")
    with pytest.raises(DimensionError):
        mvn_cdf(MvnProblem.from_arrays(np.zeros(3), np.eye(3)))


def test_nested_corr_values():
    c = nested_corr(0.0, [1.0, 2.0], lambda t, T: T - t)
    assert c.entries[0, 1] == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert nested_corr(0.0, [1.0], lambda t, T: T - t).entries.tolist() == [[1.0]]
    with pytest.raises(DomainError):
        nested_corr(0.0, [2.0, 1.0], lambda t, T: T - t)


def test_nested_corr_two_factor_variances():
    from scipy.integrate import quad

    from cbond.term_structure import VasicekMarket, accumulated_variance, sx_squared
    m = VasicekMarket(a1=0.01, a2=0.2, s_r=0.02, rho=-0.4, s_V=0.3, b=0.0)
    times = [0.5, 1.2, 2.0]
    c = nested_corr(0.1, times, lambda t, T: accumulated_variance(m, t, T, 2.0))
    nu = [quad(lambda u: sx_squared(m, u, 2.0), 0.1, T, epsabs=1e-14)[0] for T in times]
    assert c.entries[0, 2] == pytest.approx(math.sqrt(nu[0] / nu[2]), rel=1e-10)


def test_flip_last_sign():
    c = CorrMatrix(np.array([[1.0, 0.6], [0.6, 1.0]]))
    f = flip_last_sign(c)
    assert f.entries[0, 1] == pytest.approx(-0.6)
    assert np.array_equal(flip_last_sign(f).entries, c.entries)
    one = CorrMatrix(np.eye(1))
    assert np.array_equal(flip_last_sign(one).entries, one.entries)
    big = _nested(np.random.default_rng(5), 5)
    np.linalg.cholesky(flip_last_sign(big).entries)


def test_boundary_slice_values():
    assert mvn_boundary_slice(MvnProblem.from_arrays([0.0], [[1.0]]), 0) == pytest.approx(0.3989422804, abs=1e-9)
    p = MvnProblem.from_arrays([0.0, 0.0], np.eye(2))
    assert mvn_boundary_slice(p, 0) == pytest.approx(0.1994711402, abs=1e-9)
    with pytest.raises(DomainError):
        mvn_boundary_slice(MvnProblem.from_arrays([np.inf, 0.0], np.eye(2)), 0)
    with pytest.raises(DomainError):
        mvn_boundary_slice(p, 2)


@pytest.mark.parametrize("seed", range(6))
def test_boundary_slice_matches_finite_difference(seed):
    rng = np.random.default_rng(100 + seed)
    m = int(rng.integers(2, 5))
    c = _nested(rng, m) if seed % 2 == 0 else CorrMatrix(_random_corr(rng, m))
    a = rng.normal(size=m)
    h = 1e-4
    for i in range(m):
        up, dn = a.copy(), a.copy()
        up[i] += h
        dn[i] -= h
        fd = (mvn_cdf(MvnProblem(up, c), tol=1e-10).value - mvn_cdf(MvnProblem(dn, c), tol=1e-10).value) / (2 * h)
        assert mvn_boundary_slice(MvnProblem(a, c), i) == pytest.approx(fd, abs=1e-5)


def test_monotone_in_each_limit():
    rng = np.random.default_rng(9)
    for _ in range(10):
        m = int(rng.integers(2, 5))
        c = _nested(rng, m)
        a = rng.normal(size=m)
        b = a.copy()
        b[rng.integers(m)] += rng.uniform(0.01, 1.0)
        assert mvn_cdf(MvnProblem(b, c)).value >= mvn_cdf(MvnProblem(a, c)).value


def test_chain_slices_are_last_derivatives():
    prefix = [0.3, -0.2]
    links = [0.7]
    a_last = np.array([0.1, 0.5])
    rho_last = np.array([0.8, -0.6])
    vals, slices = chain_slices(prefix, links, a_last, rho_last)
    h = 1e-5
    for k in range(2):
        ref = chain_cdf(prefix + [a_last[k]], links + [rho_last[k]])
        assert vals[k] == pytest.approx(ref, abs=1e-12)
        up = chain_cdf(prefix + [a_last[k] + h], links + [rho_last[k]])
        dn = chain_cdf(prefix + [a_last[k] - h], links + [rho_last[k]])
        assert slices[k, -1] == pytest.approx((up - dn) / (2 * h), abs=1e-7)


def test_summation_identity_small():
    rng = np.random.default_rng(2)
    c = _nested(rng, 3)
    d = rng.normal(size=3)
    lhs = 1.0 - mvn_cdf(MvnProblem(d, c)).value
    rhs = norm.cdf(-d[0])
    for m in range(1, 3):
        sub = CorrMatrix(c.entries[: m + 1, : m + 1])
        lim = np.concatenate([d[:m], [-d[m]]])
        rhs += mvn_cdf(MvnProblem(lim, flip_last_sign(sub))).value
    assert lhs == pytest.approx(rhs, abs=1e-8)
