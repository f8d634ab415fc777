"""Multivariate standard-normal CDF and its boundary derivatives.

Every closed form in this package reduces to orthant-type probabilities
``P(Y_1 <= a_1, ..., Y_m <= a_m)`` where ``Y`` is a standardised Gaussian
vector whose correlation has the nested form ``r_ij = sqrt(nu_i / nu_j)``
(``i <= j``), possibly with the sign of the last coordinate flipped.  Such a
vector is a Gaussian Markov chain, so the probability can be computed by a
forward recursion of one-dimensional integrals.  That recursion is the fast,
deterministic path used by the pricers.

General correlation matrices fall back to Genz's separation-of-variables
transform integrated with randomised lattice rules.

Notes
-----
Chain recursion.  Write ``Y_{k+1} = rho_k Y_k + s_k eps`` with
``s_k = sqrt(1 - rho_k**2)``.  The restricted law of ``Y_k`` on the event that
the earlier constraints hold is carried on composite Gauss-Legendre nodes
whose spacing resolves both the density and the next transition kernel.  The
last link is integrated in the innovation variable ``z``:

    P = int phi(z) Q(min(a_{m-1}, (a_m - s z) / rho)) dz,

with ``Q`` the restricted CDF of ``Y_{m-1}``.  This keeps the integrand smooth
even when ``rho`` is close to one, which happens for the unexpected-default
integrals as the default time approaches the previous coupon date.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionError, DomainError

__all__ = [
    "CorrMatrix",
    "MvnProblem",
    "MvnResult",
    "ChainPrefix",
    "chain_cdf",
    "chain_slices",
    "max_dimension",
    "mvn_cdf",
    "nested_corr",
    "flip_last_sign",
    "mvn_boundary_slice",
]

MAX_DIM_ENV = "CBOND_MAX_MVN_DIM"
DEFAULT_MAX_DIM = 12

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TAIL = 9.0  # standard deviations kept on each side
_PANEL = 2.0  # panel width in units of the local smoothness scale
_NODES = 12
_FINE_NODES = 20
_PRUNE = 1e-24
_CHAIN_TOL = 1e-10
_CHUNK = 2_000_000


def max_dimension() -> int:
    """Dimension cap, overridable through ``CBOND_MAX_MVN_DIM``."""
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"{MAX_DIM_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise DomainError(f"{MAX_DIM_ENV} must be positive, got {value}")
    return value


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _composite(lo: float, hi: float, width: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi] with panels no wider than ``width``."""
    npan = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, npan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x, w = _legendre(n)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class CorrMatrix:
    """Validated correlation matrix (symmetric, unit diagonal, positive definite)."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.entries, dtype=float, copy=True)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 1:
            raise DomainError("correlation matrix must be square and non-empty")
        if not np.all(np.isfinite(r)):
            raise DomainError("correlation matrix has non-finite entries")
        if not np.allclose(r, r.T, atol=1e-12, rtol=0.0):
            raise DomainError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(r), 1.0, atol=1e-12, rtol=0.0):
            raise DomainError("correlation matrix must have a unit diagonal")
        off = r[~np.eye(r.shape[0], dtype=bool)]
        if off.size and np.max(np.abs(off)) >= 1.0:
            raise DomainError("off-diagonal correlations must lie strictly inside (-1, 1)")
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError as exc:
            raise DomainError("correlation matrix is not positive definite") from exc
        r = 0.5 * (r + r.T)
        np.fill_diagonal(r, 1.0)
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class MvnProblem:
    """Upper limits (``+inf`` allowed) together with a correlation matrix."""

    limits: np.ndarray
    corr: CorrMatrix

    def __post_init__(self) -> None:
        a = np.array(self.limits, dtype=float, copy=True).ravel()
        if a.shape[0] != self.corr.dim:
            raise DomainError("limits length must equal the correlation dimension")
        if np.any(np.isnan(a)):
            raise DomainError("limits must not be NaN")
        a.setflags(write=False)
        object.__setattr__(self, "limits", a)

    @classmethod
    def from_arrays(cls, limits: Sequence[float], corr) -> "MvnProblem":
        c = corr if isinstance(corr, CorrMatrix) else CorrMatrix(np.asarray(corr, dtype=float))
        return cls(np.asarray(limits, dtype=float), c)


@dataclass(frozen=True)
class MvnResult:
    value: float
    error: float

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# Gaussian Markov chain kernel


class ChainPrefix:
    """Restricted law of the last coordinate of a Gaussian Markov chain.

    The chain has unit variances, ``corr(Y_k, Y_{k+1}) = links[k]`` and the
    constraints ``Y_k <= limits[k]``.  The object is built once and can then
    append a final coordinate for many different (limit, link) pairs at once,
    which is what the time integrals of the bond formulas need.
    """

    def __init__(self, limits: Sequence[float], links: Sequence[float], nodes: int = _NODES):
        self.limits = np.asarray(limits, dtype=float).ravel()
        self.links = np.asarray(links, dtype=float).ravel()
        p = self.limits.shape[0]
        if p and self.links.shape[0] != p - 1:
            raise DomainError("a chain of length p needs p - 1 links")
        if np.any(np.abs(self.links) >= 1.0):
            raise DomainError("chain links must lie strictly inside (-1, 1)")
        self.p = p
        self.nodes = nodes
        self.zero = bool(p and np.any(self.limits == -np.inf))
        self.scale = 1.0  # smoothness scale of Q in its argument
        self._y = np.empty(0)
        self._w = np.empty(0)
        self._rho = 0.0
        self._s = 1.0
        if self.zero or p < 2:
            return
        y = w = None
        prev_rho = prev_s = 0.0
        scale = 1.0
        for k in range(p - 1):
            rho = float(self.links[k])
            s = math.sqrt(1.0 - rho * rho)
            hi = min(float(self.limits[k]), _TAIL)
            lo = -_TAIL
            if hi <= lo:
                self.zero = True
                return
            kernel = s / abs(rho) if rho != 0.0 else math.inf
            nd, wt = _composite(lo, hi, _PANEL * min(scale, kernel), nodes)
            if k == 0:
                dens = _phi(nd)
            else:
                dens = _phi((nd[:, None] - prev_rho * y[None, :]) / prev_s) @ w / prev_s
            w = wt * dens
            keep = w > _PRUNE
            if not np.any(keep):
                self.zero = True
                return
            y, w = nd[keep], w[keep]
            prev_rho, prev_s = rho, s
            scale = s
        self._y, self._w = y, w
        self._rho, self._s = prev_rho, prev_s
        self.scale = scale

    # Q(y) = P(prefix constraints except the last, Y_p <= y)
    def cdf_last(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.p == 0:
            raise DomainError("empty chain has no last coordinate")
        if self.zero:
            return np.zeros_like(y)
        if self.p == 1:
            return ndtr(y)
        return self._mix(y, ndtr, 1.0)

    def pdf_last(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.zero:
            return np.zeros_like(y)
        if self.p == 1:
            return _phi(y)
        return self._mix(y, _phi, 1.0 / self._s)

    def _mix(self, y: np.ndarray, f: Callable, factor: float) -> np.ndarray:
        flat = y.ravel()
        out = np.empty_like(flat)
        step = max(1, _CHUNK // max(1, self._y.size))
        for i in range(0, flat.size, step):
            blk = flat[i:i + step]
            arg = (blk[:, None] - self._rho * self._y[None, :]) / self._s
            with np.errstate(invalid="ignore"):
                vals = f(arg)
            vals = np.where(np.isnan(vals), 0.0, vals)
            out[i:i + step] = vals @ self._w * factor
        return out.reshape(y.shape)

    def probability(self) -> float:
        if self.p == 0:
            return 1.0
        if self.zero:
            return 0.0
        return float(self.cdf_last(np.array(self.limits[-1])))

    def _plan(self, a: np.ndarray, rho: np.ndarray, density: bool):
        """Per-element integration ranges in the innovation variable z."""
        s = np.sqrt(1.0 - rho * rho)
        A = float(self.limits[-1])
        with np.errstate(divide="ignore", invalid="ignore"):
            z_hi = np.where(np.isinf(A), np.where(rho > 0, -np.inf, np.inf), (a - rho * A) / s)
            z_cut = (a + rho * _TAIL) / s
        lo = np.where(rho > 0, np.maximum(z_hi, -_TAIL), np.maximum(z_cut, -_TAIL))
        hi = np.where(rho > 0, np.minimum(z_cut, _TAIL), np.minimum(z_hi, _TAIL))
        with np.errstate(divide="ignore"):
            width = _PANEL * np.minimum(1.0, self.scale * np.abs(rho) / s)
        return s, z_hi, z_cut, lo, hi, width

    def _integrate(self, a, rho, s, lo, hi, width, integrand):
        """Sum of per-element composite rules of ``phi(z) * integrand(y(z))``."""
        out = np.zeros(a.shape[0])
        valid = np.flatnonzero(hi > lo)
        if valid.size == 0:
            return out
        x, w = _legendre(self.nodes)
        npan = np.maximum(1, np.ceil((hi[valid] - lo[valid]) / width[valid]).astype(int))
        total = int(npan.sum())
        owner = np.repeat(valid, npan)
        start = np.cumsum(npan) - npan
        panel_idx = np.arange(total) - np.repeat(start, npan)
        plen = (hi[owner] - lo[owner]) / npan[np.searchsorted(valid, owner)]
        left = lo[owner] + panel_idx * plen
        z = (left[:, None] + 0.5 * plen[:, None] * (x[None, :] + 1.0)).ravel()
        wz = (0.5 * plen[:, None] * w[None, :]).ravel()
        own = np.repeat(owner, x.size)
        y = (a[own] - s[own] * z) / rho[own]
        vals = _phi(z) * integrand(y) * wz
        np.add.at(out, own, vals)
        return out

    def extend(self, a_last, rho_last) -> np.ndarray:
        """P(prefix constraints, Y_{p+1} <= a_last) with corr(Y_p, Y_{p+1}) = rho_last."""
        a, rho = np.broadcast_arrays(np.asarray(a_last, dtype=float), np.asarray(rho_last, dtype=float))
        shape = a.shape
        a = a.ravel().copy()
        rho = rho.ravel().copy()
        if self.p == 0:
            return ndtr(a).reshape(shape)
        if np.any(np.abs(rho) >= 1.0):
            raise DomainError("chain links must lie strictly inside (-1, 1)")
        out = np.zeros(a.shape[0])
        if self.zero:
            return out.reshape(shape)
        total = self.probability()
        qa = total
        top = a == np.inf
        out[top] = total
        indep = (rho == 0.0) & np.isfinite(a)
        out[indep] = total * ndtr(a[indep])
        idx = np.flatnonzero(np.isfinite(a) & (rho != 0.0))
        if idx.size == 0:
            return out.reshape(shape)
        aa, rr = a[idx], rho[idx]
        s, z_hi, z_cut, lo, hi, width = self._plan(aa, rr, density=False)
        pos = rr > 0
        res = np.zeros(idx.size)
        if np.any(pos):
            sel = np.flatnonzero(pos)
            res[sel] = qa * ndtr(z_hi[sel]) + self._integrate(
                aa[sel], rr[sel], s[sel], lo[sel], hi[sel], width[sel], self.cdf_last)
        if np.any(~pos):
            sel = np.flatnonzero(~pos)
            head = qa * ndtr(np.minimum(z_cut[sel], z_hi[sel]))
            res[sel] = head + self._integrate(
                aa[sel], rr[sel], s[sel], lo[sel], hi[sel], width[sel],
                lambda y: qa - self.cdf_last(y))
        out[idx] = res
        return np.clip(out, 0.0, 1.0).reshape(shape)

    def extend_density(self, a_last, rho_last) -> np.ndarray:
        """Derivative of :meth:`extend` with respect to ``a_last``."""
        a, rho = np.broadcast_arrays(np.asarray(a_last, dtype=float), np.asarray(rho_last, dtype=float))
        shape = a.shape
        a = a.ravel().copy()
        rho = rho.ravel().copy()
        if self.p == 0:
            return _phi(np.where(np.isfinite(a), a, np.inf)).reshape(shape)
        out = np.zeros(a.shape[0])
        if self.zero:
            return out.reshape(shape)
        indep = (rho == 0.0) & np.isfinite(a)
        out[indep] = self.probability() * _phi(a[indep])
        idx = np.flatnonzero(np.isfinite(a) & (rho != 0.0))
        if idx.size == 0:
            return out.reshape(shape)
        aa, rr = a[idx], rho[idx]
        s, _, _, lo, hi, width = self._plan(aa, rr, density=True)
        res = self._integrate(aa, rr, s, lo, hi, width, self.pdf_last) / np.abs(rr)
        out[idx] = res
        return out.reshape(shape)


def chain_cdf(limits: Sequence[float], links: Sequence[float], nodes: int = _NODES) -> float:
    """P(Y_k <= limits[k] for all k) for a unit-variance Gaussian Markov chain."""
    a = np.asarray(limits, dtype=float).ravel()
    if a.size == 0:
        return 1.0
    links = np.asarray(links, dtype=float).ravel()
    pre = ChainPrefix(a[:-1], links[:-1], nodes=nodes)
    if a.size == 1:
        return float(ndtr(a[0]))
    return float(pre.extend(a[-1], links[-1]))


def _condition_chain(limits: np.ndarray, links: np.ndarray, i: int):
    """Split a chain conditioned on ``Y_i = a_i`` into independent left/right chains."""
    m = limits.size
    ai = limits[i]
    r_left = np.ones(i + 1)  # corr(Y_j, Y_i), j <= i
    for j in range(i - 1, -1, -1):
        r_left[j] = links[j] * r_left[j + 1]
    left_lim = [(limits[j] - r_left[j] * ai) / math.sqrt(1.0 - r_left[j] ** 2) for j in range(i)]
    left_links = [links[j] * math.sqrt(1.0 - r_left[j + 1] ** 2) / math.sqrt(1.0 - r_left[j] ** 2)
                  for j in range(i - 1)]
    r_right = np.ones(m - i)  # corr(Y_i, Y_j), j >= i
    for j in range(i + 1, m):
        r_right[j - i] = r_right[j - i - 1] * links[j - 1]
    right_lim = [(limits[j] - r_right[j - i] * ai) / math.sqrt(1.0 - r_right[j - i] ** 2)
                 for j in range(i + 1, m)]
    right_links = [links[j] * math.sqrt(1.0 - r_right[j - i] ** 2) / math.sqrt(1.0 - r_right[j - i + 1] ** 2)
                   for j in range(i + 1, m - 1)]
    return np.array(left_lim), np.array(left_links), np.array(right_lim), np.array(right_links)


def chain_slices(prefix_limits: Sequence[float], prefix_links: Sequence[float],
                 a_last, rho_last, nodes: int = _NODES) -> tuple[np.ndarray, np.ndarray]:
    """Probability and boundary slices of a chain whose last coordinate varies.

    Returns ``(values, slices)`` where ``slices[:, k]`` is the partial
    derivative of the probability with respect to the k-th limit
    (``k = p`` being the varying last coordinate).
    """
    pl = np.asarray(prefix_limits, dtype=float).ravel()
    pk = np.asarray(prefix_links, dtype=float).ravel()
    a, rho = np.broadcast_arrays(np.asarray(a_last, dtype=float).ravel(),
                                 np.asarray(rho_last, dtype=float).ravel())
    p = pl.size
    base = ChainPrefix(pl, pk, nodes=nodes)
    values = base.extend(a, rho)
    slices = np.zeros((a.size, p + 1))
    slices[:, p] = base.extend_density(a, rho)
    for i in range(p):
        ai = pl[i]
        if not np.isfinite(ai):
            continue
        ll, lk, rl, rk = _condition_chain(pl, pk, i)
        left = chain_cdf(ll, lk, nodes=nodes)
        if left == 0.0:
            continue
        r_prev = float(np.prod(pk[i:]))  # corr(Y_i, Y_{p-1})
        r_last = r_prev * rho
        sd_last = np.sqrt(1.0 - r_last * r_last)
        lim_last = np.where(np.isinf(a), a, (a - r_last * ai) / sd_last)
        if rl.size:
            link_last = rho * math.sqrt(1.0 - r_prev * r_prev) / sd_last
            right = ChainPrefix(rl, rk, nodes=nodes).extend(lim_last, link_last)
        else:
            right = ndtr(lim_last)
        slices[:, i] = float(_phi(ai)) * left * right
    return values, slices


# ---------------------------------------------------------------------------
# Generic fallback: Genz separation of variables with randomised lattices


_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73)


def _reordered_cholesky(a: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factor with Genz-Bretz variable prioritisation."""
    m = a.size
    a = a.copy()
    r = r.copy()
    c = np.zeros((m, m))
    y = np.zeros(m)
    for i in range(m):
        best, best_j, best_val = math.inf, i, 0.0
        for j in range(i, m):
            var = r[j, j] - float(np.dot(c[j, :i], c[j, :i]))
            sd = math.sqrt(max(var, 1e-300))
            lim = (a[j] - float(np.dot(c[j, :i], y[:i]))) / sd
            prob = float(ndtr(lim))
            if prob < best:
                best, best_j, best_val = prob, j, lim
        if best_j != i:
            a[[i, best_j]] = a[[best_j, i]]
            r[[i, best_j], :] = r[[best_j, i], :]
            r[:, [i, best_j]] = r[:, [best_j, i]]
            c[[i, best_j], :] = c[[best_j, i], :]
        var = r[i, i] - float(np.dot(c[i, :i], c[i, :i]))
        if var <= 1e-14:
            raise DomainError("correlation matrix is numerically singular")
        c[i, i] = math.sqrt(var)
        for j in range(i + 1, m):
            c[j, i] = (r[j, i] - float(np.dot(c[j, :i], c[i, :i]))) / c[i, i]
        lim = best_val
        pr = float(ndtr(lim))
        y[i] = -float(_phi(lim)) / pr if pr > 1e-300 else lim
    return a, c


def _genz_qmc(a: np.ndarray, r: np.ndarray, tol: float, max_points: int = 1 << 18) -> MvnResult:
    a, c = _reordered_cholesky(a, r)
    m = a.size
    alpha = np.sqrt(np.array(_PRIMES[: m - 1], dtype=float)) % 1.0
    rng = np.random.default_rng(20240917)
    shifts = 12
    n = 1 << 10
    while True:
        shift = rng.random((shifts, m - 1))
        k = np.arange(1, n + 1, dtype=float)[:, None]
        base = (k * alpha[None, :]) % 1.0
        estimates = np.empty(shifts)
        for s in range(shifts):
            w = np.abs(2.0 * ((base + shift[s]) % 1.0) - 1.0)
            e = np.full(n, float(ndtr(a[0] / c[0, 0])))
            f = e.copy()
            ys = np.zeros((n, m))
            for i in range(1, m):
                u = np.clip(w[:, i - 1] * e, 1e-300, 1.0 - 1e-16)
                ys[:, i - 1] = ndtri(u)
                e = ndtr((a[i] - ys[:, :i] @ c[i, :i]) / c[i, i])
                f *= e
            estimates[s] = f.mean()
        value = float(estimates.mean())
        err = 3.0 * float(estimates.std(ddof=1)) / math.sqrt(shifts)
        if err <= tol or n >= max_points:
            return MvnResult(min(max(value, 0.0), 1.0), err)
        n *= 2


# ---------------------------------------------------------------------------
# Public operations


def _chain_links(r: np.ndarray) -> np.ndarray | None:
    """Links of ``r`` if it is the correlation of a Gaussian Markov chain."""
    m = r.shape[0]
    links = np.array([r[k, k + 1] for k in range(m - 1)])
    for j in range(m):
        prod = 1.0
        for l in range(j + 1, m):
            prod *= links[l - 1]
            if abs(r[j, l] - prod) > _CHAIN_TOL:
                return None
    return links


def _reduce(problem: MvnProblem) -> tuple[np.ndarray, np.ndarray] | None:
    """Drop +inf limits; return None when some limit is -inf (probability zero)."""
    a = problem.limits
    if np.any(a == -np.inf):
        return None
    keep = np.flatnonzero(a != np.inf)
    return a[keep], problem.corr.entries[np.ix_(keep, keep)]


def mvn_cdf(problem: MvnProblem, tol: float = 1e-8) -> MvnResult:
    """P(Y <= limits) for a standard Gaussian vector with the given correlation.

    Nested (Markov chain) correlations use the deterministic recursion and
    report the difference between two quadrature resolutions as the error.
    Other matrices use randomised lattice QMC with a 3-sigma error estimate.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    m = problem.corr.dim
    if m > max_dimension():
        raise DimensionError(f"dimension {m} exceeds the cap {max_dimension()}")
    reduced = _reduce(problem)
    if reduced is None:
        return MvnResult(0.0, 0.0)
    a, r = reduced
    if a.size == 0:
        return MvnResult(1.0, 0.0)
    if a.size == 1:
        return MvnResult(float(ndtr(a[0])), 0.0)
    links = _chain_links(r)
    if links is not None:
        coarse = chain_cdf(a, links, nodes=_NODES)
        fine = chain_cdf(a, links, nodes=_FINE_NODES)
        return MvnResult(min(max(fine, 0.0), 1.0), abs(fine - coarse))
    return _genz_qmc(a, r, tol)


def nested_corr(t: float, obs_times: Sequence[float],
                variance_fn: Callable[[float, float], float]) -> CorrMatrix:
    """Correlation ``sqrt(nu_i / nu_j)`` of a time-changed Brownian motion.

    ``variance_fn(t, T)`` returns the variance accumulated from ``t`` to ``T``.
    """
    times = np.asarray(obs_times, dtype=float).ravel()
    if times.size == 0:
        raise DomainError("at least one observation time is required")
    if np.any(np.diff(times) <= 0.0):
        raise DomainError("observation times must be strictly ascending")
    if times[0] <= t:
        raise DomainError("observation times must lie after t")
    nu = np.array([float(variance_fn(t, T)) for T in times])
    if np.any(nu <= 0.0) or np.any(np.diff(nu) <= 0.0):
        raise DomainError("accumulated variance must be positive and strictly increasing")
    lo = np.minimum.outer(nu, nu)
    hi = np.maximum.outer(nu, nu)
    return CorrMatrix(np.sqrt(lo / hi))


def flip_last_sign(corr: CorrMatrix) -> CorrMatrix:
    """Negate the off-diagonal entries of the last row and column."""
    r = np.array(corr.entries, dtype=float, copy=True)
    if r.shape[0] > 1:
        r[-1, :-1] *= -1.0
        r[:-1, -1] *= -1.0
    return CorrMatrix(r)


def mvn_boundary_slice(problem: MvnProblem, i: int) -> float:
    """Partial derivative of the CDF with respect to limit ``i`` (0-based).

    Computed as ``phi(a_i) * N_{m-1}(conditional limits; conditional corr)``.
    """
    m = problem.corr.dim
    if not 0 <= i < m:
        raise DomainError(f"index {i} out of range for dimension {m}")
    a = problem.limits
    if not np.isfinite(a[i]):
        raise DomainError("boundary slice needs a finite limit at the pinned index")
    if m > max_dimension():
        raise DimensionError(f"dimension {m} exceeds the cap {max_dimension()}")
    dens = float(_phi(a[i]))
    if m == 1:
        return dens
    r = problem.corr.entries
    others = [j for j in range(m) if j != i]
    ri = r[others, i]
    sd = np.sqrt(1.0 - ri * ri)
    cond_lim = (a[others] - ri * a[i]) / sd
    cond = (r[np.ix_(others, others)] - np.outer(ri, ri)) / np.outer(sd, sd)
    np.fill_diagonal(cond, 1.0)
    cond = 0.5 * (cond + cond.T)
    sub = MvnProblem(cond_lim, CorrMatrix(cond))
    return dens * mvn_cdf(sub).value
