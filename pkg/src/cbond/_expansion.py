"""Binary-option expansion shared by the one- and two-factor pricers.

Both models reduce to the same bookkeeping over an underlying ``x`` that
follows a lognormal law described by a :class:`DiffusionSpec`:

* equity on ``(T_i, T_{i+1}]`` is an order-(N-i) asset binary minus the
  survival-weighted bond binaries paying ``cbar_n``;
* the bond adds expected-default asset binaries with a flipped last sign and
  time integrals of order-(m+1) binaries whose last barrier is
  ``M_m(tau) = Phi_m(tau) / delta``.

Every quantity is returned with its sensitivities to ``ln x``, the short rate
and the log barriers, which the duration code needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .binaries import ASSET, BOND, DiffusionSpec, binary_batch
from .errors import NumericalError
from .mvn import _legendre

_BASE_NODES = 32
_MAX_NODES = 1024
_QUAD_RTOL = 1e-9


@dataclass
class Acc:
    """A value with its ln x, r and ln K sensitivities."""

    n: int
    value: float = 0.0
    d_lnx: float = 0.0
    d_r: float = 0.0
    d_lnK: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.d_lnK is None:
            self.d_lnK = np.zeros(self.n)

    def add(self, other: "Acc", w: float = 1.0) -> "Acc":
        self.value += w * other.value
        self.d_lnx += w * other.d_lnx
        self.d_r += w * other.d_r
        self.d_lnK = self.d_lnK + w * other.d_lnK
        return self


class Expansion:
    """Closed-form pricer over the binary expansion.

    ``phi(m, tau)`` returns ``(Phi_m(tau), d ln Phi_m / d r)`` for the
    unexpected-default-without-loss branch on interval m.
    """

    def __init__(self, dates, K, cbar, lam, delta: float, F: float,
                 spec: DiffusionSpec, phi: Callable):
        self.T = np.asarray(dates, dtype=float)
        self.K = np.asarray(K, dtype=float)
        self.cbar = np.asarray(cbar, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        self.delta = float(delta)
        self.F = float(F)
        self.spec = spec
        self.phi = phi
        self.N = self.T.size
        self.edges = np.concatenate([[0.0], self.T])
        self.H = np.concatenate([[0.0], np.cumsum(self.lam * np.diff(self.edges))])

    # cumulative hazard and survival
    def hazard(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        k = np.clip(np.searchsorted(self.edges, T, side="right") - 1, 0, self.N - 1)
        return self.H[k] + self.lam[k] * (T - self.edges[k])

    def survival(self, t: float, T) -> np.ndarray:
        return np.exp(-(self.hazard(T) - self.hazard(t)))

    def _batch(self, kind, x, t, lo, hi, last_sign, last_K, last_T, grad):
        """Binaries observing K_{lo+1}..K_hi (1-based) then the given last legs."""
        return binary_batch(kind, self.spec, x, t, self.K[lo:hi], self.T[lo:hi],
                            np.ones(hi - lo, dtype=int), last_K, last_T, last_sign, grad=grad)

    def _acc(self, res, weights, lo, hi, last_idx=None, last_dr=None, grad=False) -> Acc:
        """Weighted sum of a batch into an accumulator."""
        a = Acc(self.N)
        a.value = float(np.dot(weights, res.value))
        if grad:
            a.d_lnx = float(np.dot(weights, res.d_lnx))
            a.d_r = float(np.dot(weights, res.d_r))
            a.d_lnK[lo:hi] += weights @ res.d_lnK_prefix
            if last_idx is not None:
                a.d_lnK[last_idx] += float(np.dot(weights, res.d_lnK_last))
            if last_dr is not None:
                a.d_r += float(np.dot(weights * last_dr, res.d_lnK_last))
        return a

    # ------------------------------------------------------------------
    def equity(self, x: float, t: float, i: int, grad: bool = False) -> dict:
        """Equity on interval i split into the asset leg and the payment legs."""
        N = self.N
        S_N = float(self.survival(t, self.T[-1]))
        res = self._batch(ASSET, x, t, i, N - 1, 1, [self.K[-1]], [self.T[-1]], grad)
        asset = self._acc(res, np.array([S_N]), i, N - 1, N - 1, grad=grad)
        pay = Acc(N)
        for n in range(i + 1, N + 1):
            S_n = float(self.survival(t, self.T[n - 1]))
            res = self._batch(BOND, x, t, i, n - 1, 1, [self.K[n - 1]], [self.T[n - 1]], grad)
            pay.add(self._acc(res, np.array([self.cbar[n - 1] * S_n]), i, n - 1, n - 1, grad=grad))
        total = Acc(N).add(asset).add(pay, -1.0)
        return {"total": total, "asset": asset, "payments": pay}

    def bond(self, x: float, t: float, i: int, grad: bool = False) -> dict:
        """Bond on interval i split into its economic components."""
        N = self.N
        face = Acc(N)
        coupon = Acc(N)
        expected = Acc(N)
        for n in range(i + 1, N + 1):
            S_n = float(self.survival(t, self.T[n - 1]))
            Kn, Tn = [self.K[n - 1]], [self.T[n - 1]]
            res = self._batch(BOND, x, t, i, n - 1, 1, Kn, Tn, grad)
            if n == N:
                face.add(self._acc(res, np.array([self.F * S_n]), i, n - 1, n - 1, grad=grad))
                c = self.cbar[n - 1] - self.F
            else:
                c = self.cbar[n - 1]
            coupon.add(self._acc(res, np.array([c * S_n]), i, n - 1, n - 1, grad=grad))
            if self.delta > 0.0:
                res = self._batch(ASSET, x, t, i, n - 1, -1, Kn, Tn, grad)
                expected.add(self._acc(res, np.array([self.delta * S_n]), i, n - 1, n - 1, grad=grad))
        ub = Acc(N)
        ua = Acc(N)
        if self.delta > 0.0:
            for m in range(i, N):
                if self.lam[m] == 0.0:
                    continue
                lo_t = max(t, self.edges[m])
                hi_t = self.edges[m + 1]
                if hi_t <= lo_t:
                    continue
                b, a = self._integral(x, t, i, m, lo_t, hi_t, grad)
                ub.add(b)
                ua.add(a)
        unexpected = Acc(N).add(ub).add(ua)
        total = Acc(N).add(face).add(coupon).add(expected).add(unexpected)
        return {"total": total, "face": face, "coupon": coupon, "expected": expected,
                "unexpected": unexpected, "unexpected_bond": ub, "unexpected_asset": ua}

    def _integral(self, x, t, i, m, lo_t, hi_t, grad):
        """``lambda_m int S(t,tau) [Phi B + delta A] dtau`` over [lo_t, hi_t]."""
        n = _BASE_NODES
        prev = self._integral_n(x, t, i, m, lo_t, hi_t, n, False)
        while True:
            n *= 2
            cur = self._integral_n(x, t, i, m, lo_t, hi_t, n, False)
            tot_p = prev[0].value + prev[1].value
            tot_c = cur[0].value + cur[1].value
            if abs(tot_c - tot_p) <= _QUAD_RTOL * max(abs(tot_c), 1e-300) or abs(tot_c - tot_p) < 1e-15:
                break
            if n >= _MAX_NODES:
                if abs(tot_c - tot_p) > 1e-6 * max(abs(tot_c), 1e-12):
                    raise NumericalError(f"time integral on interval {m} did not converge")
                break
            prev = cur
        if grad:
            cur = self._integral_n(x, t, i, m, lo_t, hi_t, n, True)
        return cur

    def _integral_n(self, x, t, i, m, lo_t, hi_t, n, grad):
        u, w = _legendre(n)
        u = 0.5 * (u + 1.0)
        # tau = lo + (hi - lo) u^2 absorbs the square-root behaviour at lo
        tau = lo_t + (hi_t - lo_t) * u * u
        wt = 0.5 * w * 2.0 * (hi_t - lo_t) * u
        phi, dlnphi = self.phi(m, tau)
        base = self.lam[m] * self.survival(t, tau) * wt
        M = phi / self.delta
        res_b = self._batch(BOND, x, t, i, m, 1, M, tau, grad)
        b = self._acc(res_b, base * phi, i, m, last_dr=dlnphi if grad else None, grad=grad)
        if grad:
            b.d_r += float(np.dot(base * phi * dlnphi, res_b.value))
        res_a = self._batch(ASSET, x, t, i, m, -1, M, tau, grad)
        a = self._acc(res_a, base * self.delta, i, m, last_dr=dlnphi if grad else None, grad=grad)
        return b, a
