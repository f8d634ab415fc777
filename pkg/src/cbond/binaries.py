"""Higher-order asset and bond binaries.

An order-m binary observes the underlying at ``T_1 < ... < T_m`` and pays
at ``T_m`` either one unit of cash (bond kind) or the underlying (asset kind)
provided ``s_j (X_{T_j} - K_j) >= 0`` for every j.  With
``d_j = [ln(x/K_j) + (r - q)(T_j - t) +/- nu_j / 2] / sqrt(nu_j)`` the price is

    bond:  e^{-r(T_m - t)} N_m(s_1 d_1^-, ..., s_m d_m^-; A^s)
    asset: x e^{-q(T_m - t)} N_m(s_1 d_1^+, ..., s_m d_m^+; A^s)

where ``A^s`` has entries ``s_i s_j sqrt(nu_i / nu_j)`` for i <= j.  The
correlation is that of a Gaussian Markov chain, so the chain kernel in
:mod:`cbond.mvn` evaluates it directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .mvn import ChainPrefix, chain_cdf, chain_slices

__all__ = [
    "BinaryOrder",
    "DiffusionSpec",
    "BatchResult",
    "binary_price",
    "binary_price_grad",
    "binary_batch",
]

ASSET = "asset"
BOND = "bond"


@dataclass(frozen=True)
class DiffusionSpec:
    """Underlying dynamics for the binaries.

    ``constant``: lognormal with rate ``r``, payout ``q`` and volatility ``sigma``.
    ``deterministic``: zero rate, payout ``q`` and a time-dependent volatility
    whose accumulated variance is ``variance_fn(t, T)`` (vectorised in ``T``).
    """

    mode: str
    q: float
    r: float = 0.0
    sigma: float = 0.0
    variance_fn: Optional[Callable] = None

    def __post_init__(self) -> None:
        if self.mode == "constant":
            if not self.sigma > 0.0:
                raise DomainError("constant mode needs sigma > 0")
        elif self.mode == "deterministic":
            if self.variance_fn is None:
                raise DomainError("deterministic mode needs variance_fn")
            if self.r != 0.0:
                raise DomainError("deterministic mode runs at zero rate")
        else:
            raise DomainError(f"unknown diffusion mode {self.mode!r}")

    @classmethod
    def constant(cls, r: float, q: float, sigma: float) -> "DiffusionSpec":
        return cls("constant", q=q, r=r, sigma=sigma)

    @classmethod
    def deterministic(cls, q: float, variance_fn: Callable) -> "DiffusionSpec":
        return cls("deterministic", q=q, variance_fn=variance_fn)

    def variance(self, t: float, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        if self.mode == "constant":
            return self.sigma ** 2 * (T - t)
        return np.asarray(self.variance_fn(t, T), dtype=float).reshape(T.shape)


@dataclass(frozen=True)
class BinaryOrder:
    kind: str
    signs: tuple
    barriers: tuple
    obs_times: tuple

    def __post_init__(self) -> None:
        if self.kind not in (ASSET, BOND):
            raise DomainError("kind must be 'asset' or 'bond'")
        m = len(self.obs_times)
        if m == 0 or len(self.signs) != m or len(self.barriers) != m:
            raise DomainError("signs, barriers and obs_times need one entry per observation")
        if any(s not in (1, -1) for s in self.signs):
            raise DomainError("signs must be +1 or -1")
        if any(not (k >= 0.0) for k in self.barriers):
            raise DomainError("barriers must be non-negative")
        if any(b <= a for a, b in zip(self.obs_times[:-1], self.obs_times[1:])):
            raise DomainError("obs_times must be strictly ascending")

    @classmethod
    def make(cls, kind: str, signs: Sequence, barriers: Sequence[float],
             obs_times: Sequence[float]) -> "BinaryOrder":
        sg = tuple(1 if s in (1, "+") else -1 if s in (-1, "-") else s for s in signs)
        return cls(kind, sg, tuple(float(k) for k in barriers), tuple(float(x) for x in obs_times))


@dataclass
class BatchResult:
    """Prices of binaries sharing a prefix and differing in the last leg.

    Gradients are with respect to ``ln x``, the rate ``r`` (constant mode only;
    zero otherwise), the log prefix barriers and the log last barrier.
    """

    value: np.ndarray
    d_lnx: Optional[np.ndarray] = None
    d_r: Optional[np.ndarray] = None
    d_lnK_prefix: Optional[np.ndarray] = None
    d_lnK_last: Optional[np.ndarray] = None


def _d(x, K, drift_tau, nu, plus):
    with np.errstate(divide="ignore"):
        return (np.log(x / K) + drift_tau + (0.5 if plus else -0.5) * nu) / np.sqrt(nu)


def binary_batch(kind: str, spec: DiffusionSpec, x: float, t: float,
                 prefix_K: Sequence[float], prefix_T: Sequence[float], prefix_s: Sequence[int],
                 last_K, last_T, last_s: int, grad: bool = False) -> BatchResult:
    """Order-(p+1) binaries with a common prefix and a batch of last legs."""
    if not x > 0.0:
        raise DomainError("underlying level must be positive")
    pK = np.asarray(prefix_K, dtype=float).ravel()
    pT = np.asarray(prefix_T, dtype=float).ravel()
    ps = np.asarray(prefix_s, dtype=int).ravel()
    lK, lT = np.broadcast_arrays(np.asarray(last_K, dtype=float).ravel(),
                                 np.asarray(last_T, dtype=float).ravel())
    nb = lK.size
    p = pK.size
    if (p and pT[0] <= t) or np.any(lT <= t):
        raise DomainError("observation times must lie after the valuation time")
    if p and np.any(lT <= pT[-1]):
        raise DomainError("last observation must follow the prefix")
    plus = kind == ASSET
    rate = spec.r if spec.mode == "constant" else 0.0
    const = spec.mode == "constant"
    # payoff prefactor at the payment date
    if plus:
        pref = x * np.exp(-spec.q * (lT - t))
    else:
        pref = np.exp(-rate * (lT - t))
    out = BatchResult(np.zeros(nb))
    if grad:
        out.d_lnx = np.zeros(nb)
        out.d_r = np.zeros(nb)
        out.d_lnK_prefix = np.zeros((nb, p))
        out.d_lnK_last = np.zeros(nb)

    # prefix: drop certain legs, detect impossible ones
    keep = []
    for j in range(p):
        k, s = pK[j], ps[j]
        if (k == 0.0 and s < 0) or (k == np.inf and s > 0):
            return out
        if (k == 0.0 and s > 0) or (k == np.inf and s < 0):
            continue
        keep.append(j)
    keep = np.asarray(keep, dtype=int)
    kT = pT[keep]
    nu_p = spec.variance(t, kT) if keep.size else np.zeros(0)
    if np.any(nu_p <= 0.0):
        raise DomainError("accumulated variance must be positive")
    sq_p = np.sqrt(nu_p)
    d_p = _d(x, pK[keep], (rate - spec.q) * (kT - t), nu_p, plus)
    lim_p = ps[keep] * d_p
    links_p = ps[keep][:-1] * ps[keep][1:] * np.sqrt(nu_p[:-1] / nu_p[1:]) if keep.size > 1 else np.zeros(0)

    # last legs
    dead = ((lK == 0.0) & (last_s < 0)) | ((lK == np.inf) & (last_s > 0))
    sure = ((lK == 0.0) & (last_s > 0)) | ((lK == np.inf) & (last_s < 0))
    live = np.flatnonzero(~dead & ~sure)
    if np.any(sure):
        sel = np.flatnonzero(sure)
        val, slc = _prefix_only(lim_p, links_p, grad)
        out.value[sel] = pref[sel] * val
        if grad:
            _fill_grad(out, sel, pref[sel], val, slc, ps[keep], sq_p, kT - t, keep,
                       None, None, None, plus, const, lT[sel] - t)
    if live.size:
        nu_l = spec.variance(t, lT[live])
        if np.any(nu_l <= 0.0):
            raise DomainError("accumulated variance must be positive")
        d_l = _d(x, lK[live], (rate - spec.q) * (lT[live] - t), nu_l, plus)
        lim_l = last_s * d_l
        if keep.size:
            link_l = ps[keep][-1] * last_s * np.sqrt(nu_p[-1] / nu_l)
        else:
            link_l = np.zeros(live.size)
        if grad:
            val, slc = chain_slices(lim_p, links_p, lim_l, link_l)
        else:
            val = ChainPrefix(lim_p, links_p).extend(lim_l, link_l) if keep.size else ndtr(lim_l)
            slc = None
        out.value[live] = pref[live] * val
        if grad:
            _fill_grad(out, live, pref[live], val, slc, ps[keep], sq_p, kT - t, keep,
                       last_s, np.sqrt(nu_l), lT[live] - t, plus, const, lT[live] - t)
    return out


def _prefix_only(lim_p, links_p, grad):
    """Chain probability (and slices) when the last leg is certain."""
    n = lim_p.size
    if n == 0:
        return 1.0, np.zeros((1, 0))
    if not grad:
        return chain_cdf(lim_p, links_p), None
    val, slc = chain_slices(lim_p[:-1], links_p[:-1], lim_p[-1:],
                            links_p[-1:] if n > 1 else np.zeros(1))
    return float(val[0]), slc


def _fill_grad(out, sel, pref, val, slc, signs, sq_p, tau_p, keep,
               last_s, sq_l, tau_l, plus, const, tau_pay):
    """Chain rule from limit slices to (ln x, r, ln K) sensitivities."""
    n_p = keep.size
    val = np.broadcast_to(np.asarray(val, dtype=float), (len(sel),))
    slc = np.broadcast_to(slc, (len(sel), slc.shape[1]))
    # d limit_j / d ln x = s_j / sqrt(nu_j); d limit_j / d ln K_j = -s_j / sqrt(nu_j)
    gp = slc[:, :n_p] * (signs / sq_p)[None, :] if n_p else np.zeros((len(sel), 0))
    dlnx = gp.sum(axis=1)
    dr = (gp * tau_p[None, :]).sum(axis=1) if n_p else np.zeros(len(sel))
    if last_s is not None:
        gl = slc[:, n_p] * last_s / sq_l
        dlnx = dlnx + gl
        dr = dr + gl * tau_l
        out.d_lnK_last[sel] = -pref * gl
    out.d_lnK_prefix[np.ix_(sel, keep)] = -pref[:, None] * gp
    out.d_lnx[sel] = pref * (dlnx + (val if plus else 0.0))
    if const:
        out.d_r[sel] = pref * (dr - (0.0 if plus else tau_pay * val))


def _split(order: BinaryOrder):
    return (order.barriers[:-1], order.obs_times[:-1], order.signs[:-1],
            order.barriers[-1], order.obs_times[-1], order.signs[-1])


def binary_price(order: BinaryOrder, spec: DiffusionSpec, x: float, t: float) -> float:
    """Price of a single higher-order binary."""
    pk, pt, ps, lk, lt, ls = _split(order)
    res = binary_batch(order.kind, spec, x, t, pk, pt, ps, [lk], [lt], ls)
    return float(res.value[0])


def binary_price_grad(order: BinaryOrder, spec: DiffusionSpec, x: float, t: float) -> dict:
    """Price with sensitivities to ``ln x``, ``r`` and each ``ln K_j``."""
    pk, pt, ps, lk, lt, ls = _split(order)
    res = binary_batch(order.kind, spec, x, t, pk, pt, ps, [lk], [lt], ls, grad=True)
    lnK = np.concatenate([res.d_lnK_prefix[0], res.d_lnK_last[:1]])
    return {
        "value": float(res.value[0]),
        "d_lnx": float(res.d_lnx[0]),
        "d_r": float(res.d_r[0]),
        "d_lnK": lnK,
    }
