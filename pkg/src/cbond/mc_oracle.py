"""Monte Carlo pricer applying the contract's payoff rules path by path.

Both models are sampled exactly between event dates: the firm value is
lognormal, and in the Vasicek model the triple (short rate, integrated rate,
log firm value) is jointly Gaussian over each step.  The unexpected default
time is drawn by inversion of the piecewise-exponential survival law.

Paths are generated in fixed-size blocks, each with its own
``SeedSequence(seed, spawn_key=(block,))`` stream, and block sums are combined
in block order, so results depend only on ``(seed, n_paths)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .contract import BarrierSchedule, CouponBondSpec
from .errors import DomainError
from .term_structure import OneFactorMarket, VasicekMarket, vasicek_integrals

__all__ = [
    "SimConfig",
    "McEstimate",
    "mc_price_one_factor",
    "mc_price_two_factor",
    "mc_equity",
    "mc_bond_and_equity",
    "mc_zcb",
]

BLOCK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 1_000_000
    seed: int = 20240601
    substeps_per_interval: int = 0  # 0 selects exact sampling; >0 an Euler scheme
    workers: int = 1

    def __post_init__(self) -> None:
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be at least 1")
        if int(self.substeps_per_interval) < 0:
            raise DomainError("substeps_per_interval must be non-negative")
        if int(self.workers) < 1:
            raise DomainError("workers must be at least 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(block,))))


def _blocks(n_paths: int):
    return [(b, min(BLOCK, n_paths - b * BLOCK)) for b in range((n_paths + BLOCK - 1) // BLOCK)]


def _run(config: SimConfig, block_fn) -> dict:
    """Drive ``block_fn(rng, n) -> {name: payoffs}`` and reduce to estimates."""
    blocks = _blocks(int(config.n_paths))

    def one(bn):
        b, n = bn
        out = block_fn(_rng(config.seed, b), n)
        return {k: (float(v.sum()), float(np.dot(v, v))) for k, v in out.items()}

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            parts = list(ex.map(one, blocks))
    else:
        parts = [one(bn) for bn in blocks]
    n = int(config.n_paths)
    res = {}
    for k in parts[0]:
        s = sum(p[k][0] for p in parts)
        s2 = sum(p[k][1] for p in parts)
        mean = s / n
        var = max(s2 / n - mean * mean, 0.0) * n / (n - 1) if n > 1 else 0.0
        res[k] = McEstimate(mean, math.sqrt(var / n), n)
    return res


def _check(spec: CouponBondSpec, barriers: BarrierSchedule, V0: float) -> np.ndarray:
    if not V0 > 0.0:
        raise DomainError("V0 must be positive")
    K = barriers.as_array()
    if K.size != spec.N:
        raise DomainError("barrier schedule length does not match the bond")
    return K


# ---------------------------------------------------------------------------
# one factor


def _block_one_factor(spec, market: OneFactorMarket, K, V0, tax, rng, n):
    T = spec.dates_array
    edges = np.concatenate([[0.0], T])
    cbar = spec.cbar(tax)
    C = spec.coupons_array
    lam = spec.lambdas
    r, b, s = market.r, market.b, market.s_V
    mu = r - b - 0.5 * s * s
    lnV = np.full(n, math.log(V0))
    alive = np.ones(n, dtype=bool)
    bond = np.zeros(n)
    eq = np.zeros(n)
    for k in range(spec.N):
        t0, t1 = edges[k], edges[k + 1]
        dt = t1 - t0
        e = rng.standard_exponential(n)
        z = rng.standard_normal(n)
        with np.errstate(divide="ignore"):
            wait = e / lam[k] if lam[k] > 0.0 else np.full(n, np.inf)
        hit = alive & (wait < dt)
        if np.any(hit):
            h = wait[hit]
            Vt = np.exp(lnV[hit] + mu * h + s * np.sqrt(h) * z[hit])
            tau = t0 + h
            phi = (cbar[k:][None, :] * np.exp(-r * (T[k:][None, :] - tau[:, None]))).sum(axis=1)
            bond[hit] += np.minimum(spec.delta * Vt, phi) * np.exp(-r * tau)
            alive &= ~hit
        lnV = lnV + mu * dt + s * math.sqrt(dt) * z
        V = np.exp(lnV)
        disc = math.exp(-r * t1)
        ok = alive & (V >= K[k])
        bad = alive & ~ok
        bond[bad] += spec.delta * V[bad] * disc
        bond[ok] += cbar[k] * disc
        if k == spec.N - 1:
            eq[ok] += (V[ok] - spec.F - C[k]) * disc
        else:
            eq[ok] -= C[k] * disc
        alive = ok
    return {"bond": bond, "equity": eq}


# ---------------------------------------------------------------------------
# two factor


def _chol3(c11, c12, c13, c22, c23, c33):
    """Batched Cholesky of 3x3 covariances tolerating rank deficiency."""
    def sdiv(a, b):
        return np.where(b > 0.0, a / np.where(b > 0.0, b, 1.0), 0.0)

    l11 = np.sqrt(np.maximum(c11, 0.0))
    l21 = sdiv(c12, l11)
    l31 = sdiv(c13, l11)
    l22 = np.sqrt(np.maximum(c22 - l21 * l21, 0.0))
    l32 = sdiv(c23 - l31 * l21, l22)
    l33 = np.sqrt(np.maximum(c33 - l31 * l31 - l32 * l32, 0.0))
    return l11, l21, l31, l22, l32, l33


def _advance_exact(m: VasicekMarket, r, lnV, h, sV, rng):
    """Exact joint step of (r, int r, ln V) over per-path horizons ``h``."""
    v = vasicek_integrals(m.a2, h)
    sr = m.s_r
    c11 = sr * sr * v["I4"]
    c12 = sr * sr * v["I3"]
    c22 = sr * sr * v["I2"]
    c13 = m.rho * sr * sV * v["B"]
    c23 = m.rho * sr * sV * v["I1"]
    c33 = sV * sV * h
    l11, l21, l31, l22, l32, l33 = _chol3(c11, c12, c13, c22, c23, c33)
    z = rng.standard_normal((3, r.size))
    x1 = l11 * z[0]
    x2 = l21 * z[0] + l22 * z[1]
    x3 = l31 * z[0] + l32 * z[1] + l33 * z[2]
    decay = 1.0 - m.a2 * v["B"]  # e^{-a2 h}
    r_new = r * decay + m.a1 * v["B"] + x1
    integral = r * v["B"] + m.a1 * v["I1"] + x2
    lnV_new = lnV + integral - (m.b + 0.5 * sV * sV) * h + x3
    return r_new, integral, lnV_new


def _advance_euler(m: VasicekMarket, r, lnV, h, sV, rng, steps: int):
    """Euler scheme with trapezoidal rate integral; validation fallback."""
    dt = h / steps
    sq = np.sqrt(dt)
    integral = np.zeros_like(r)
    cor = math.sqrt(max(1.0 - m.rho * m.rho, 0.0))
    for _ in range(steps):
        z1 = rng.standard_normal(r.size)
        z2 = rng.standard_normal(r.size)
        r_new = r + (m.a1 - m.a2 * r) * dt + m.s_r * sq * z1
        integral += 0.5 * (r + r_new) * dt
        lnV = lnV + (r - m.b - 0.5 * sV * sV) * dt + sV * sq * (m.rho * z1 + cor * z2)
        r = r_new
    return r, integral, lnV


def _block_two_factor(spec, m: VasicekMarket, K, V0, r0, tax, substeps, rng, n):
    T = spec.dates_array
    TN = T[-1]
    edges = np.concatenate([[0.0], T])
    cbar = spec.cbar(tax)
    C = spec.coupons_array
    lam = spec.lambdas
    r = np.full(n, float(r0))
    lnV = np.full(n, math.log(V0))
    disc_log = np.zeros(n)  # int_0^t r du
    alive = np.ones(n, dtype=bool)
    bond = np.zeros(n)
    eq = np.zeros(n)

    def advance(r, lnV, h, sV):
        if substeps:
            return _advance_euler(m, r, lnV, h, sV, rng, substeps)
        return _advance_exact(m, r, lnV, h, sV, rng)

    for k in range(spec.N):
        t0, t1 = edges[k], edges[k + 1]
        e = rng.standard_exponential(n)
        with np.errstate(divide="ignore"):
            tau = t0 + (e / lam[k] if lam[k] > 0.0 else np.full(n, np.inf))
        phi_k = float(cbar[k:].sum())
        for a, b_, sV in m.pieces(t0, t1):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            stop = tau[idx] < b_
            h = np.where(stop, tau[idx] - a, b_ - a)
            h = np.maximum(h, 0.0)
            r_i, I_i, lnV_i = advance(r[idx], lnV[idx], h, sV)
            r[idx], lnV[idx] = r_i, lnV_i
            disc_log[idx] += I_i
            if np.any(stop):
                d = idx[stop]
                tt = tau[d]
                Zt = _zcb(m, r[d], tt, TN)
                pay = np.minimum(spec.delta * np.exp(lnV[d]), phi_k * Zt)
                bond[d] += pay * np.exp(-disc_log[d])
                alive[d] = False
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        V = np.exp(lnV[idx])
        df = np.exp(-disc_log[idx])
        if k == spec.N - 1:
            ok = V >= K[k]
            bond[idx] += np.where(ok, cbar[k], spec.delta * V) * df
            eq[idx] += np.where(ok, V - spec.F - C[k], 0.0) * df
        else:
            Z = _zcb(m, r[idx], t1, TN)
            ok = V >= K[k] * Z
            bond[idx] += np.where(ok, cbar[k] * Z, spec.delta * V) * df
            eq[idx] -= np.where(ok, C[k] * Z, 0.0) * df
            alive[idx[~ok]] = False
    return {"bond": bond, "equity": eq}


def _zcb(m: VasicekMarket, r, t, T):
    """Vectorised ``Z(r, t; T)`` for path-dependent ``t``."""
    v = vasicek_integrals(m.a2, T - t)
    A = -m.a1 * v["I1"] + 0.5 * m.s_r ** 2 * v["I2"]
    return np.exp(A - v["B"] * r)


# ---------------------------------------------------------------------------
# public entry points


def mc_bond_and_equity(spec: CouponBondSpec, market, barriers: BarrierSchedule, V0: float,
                       config: SimConfig, r0: float | None = None, tax: float = 0.0) -> dict:
    """Bond and equity estimates from one set of paths."""
    K = _check(spec, barriers, V0)
    if isinstance(market, OneFactorMarket):
        def fn(rng, n):
            return _block_one_factor(spec, market, K, V0, tax, rng, n)
    elif isinstance(market, VasicekMarket):
        if r0 is None:
            raise DomainError("the Vasicek model needs r0")

        def fn(rng, n):
            return _block_two_factor(spec, market, K, V0, r0, tax, int(config.substeps_per_interval), rng, n)
    else:
        raise DomainError("unsupported market type")
    return _run(config, fn)


def mc_price_one_factor(spec: CouponBondSpec, market: OneFactorMarket, barriers: BarrierSchedule,
                        V0: float, config: SimConfig, tax: float = 0.0) -> McEstimate:
    return mc_bond_and_equity(spec, market, barriers, V0, config, tax=tax)["bond"]


def mc_price_two_factor(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                        V0: float, r0: float, config: SimConfig, tax: float = 0.0) -> McEstimate:
    return mc_bond_and_equity(spec, market, barriers, V0, config, r0=r0, tax=tax)["bond"]


def mc_equity(spec: CouponBondSpec, market, barriers: BarrierSchedule, V0: float,
              config: SimConfig, r0: float | None = None) -> McEstimate:
    return mc_bond_and_equity(spec, market, barriers, V0, config, r0=r0)["equity"]


def mc_zcb(market: VasicekMarket, r0: float, T: float, config: SimConfig) -> McEstimate:
    """Estimate ``E[exp(-int_0^T r du)]`` with the exact rate sampler."""
    if not T > 0.0:
        raise DomainError("T must be positive")

    def fn(rng, n):
        r = np.full(n, float(r0))
        lnV = np.zeros(n)
        _, integral, _ = _advance_exact(market, r, lnV, np.full(n, T), float(market.s_V_values[0]), rng)
        return {"zcb": np.exp(-integral)}

    return _run(config, fn)["zcb"]
