"""Equity, barriers, bond, bankruptcy cost, taxes and duration at a constant short rate."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from ._expansion import Expansion
from .binaries import DiffusionSpec
from .contract import BarrierSchedule, CouponBondSpec, PriceBreakdown, interval_index
from .errors import DomainError, NumericalError
from .term_structure import OneFactorMarket

__all__ = [
    "equity_price",
    "solve_barriers",
    "bond_price",
    "bond_initial_breakdown",
    "bankruptcy_cost",
    "taxed_bond_price",
    "duration",
    "default_free_duration",
]


def _phi_fn(spec: CouponBondSpec, r: float, cbar: np.ndarray):
    T = spec.dates_array

    def phi(m: int, tau: np.ndarray):
        dt = T[m:][None, :] - tau[:, None]
        pv = cbar[m:][None, :] * np.exp(-r * dt)
        val = pv.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            dln = np.where(val > 0.0, -(pv * dt).sum(axis=1) / val, 0.0)
        return val, dln

    return phi


def _engine(spec: CouponBondSpec, market: OneFactorMarket, K, tax: float = 0.0) -> Expansion:
    cbar = spec.cbar(tax)
    diff = DiffusionSpec.constant(market.r, market.b, market.s_V)
    return Expansion(spec.dates, K, cbar, spec.intensities, spec.delta, spec.F, diff,
                     _phi_fn(spec, market.r, cbar))


def _check_state(spec: CouponBondSpec, V: float, t: float) -> None:
    if not (V > 0.0 and math.isfinite(V)):
        raise DomainError("firm value V must be positive and finite")
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError("valuation time must be non-negative")


def _check_barriers(spec: CouponBondSpec, barriers: BarrierSchedule) -> np.ndarray:
    K = barriers.as_array()
    if K.size != spec.N:
        raise DomainError(f"expected {spec.N} barriers, got {K.size}")
    return K


def equity_price(spec: CouponBondSpec, market: OneFactorMarket, barriers: BarrierSchedule,
                 V: float, t: float = 0.0) -> float:
    """Equity value; at or after maturity the terminal payoff ``(V - F - C_N)^+``."""
    _check_state(spec, V, t)
    K = _check_barriers(spec, barriers)
    if t >= spec.maturity:
        return max(V - spec.F - spec.coupons[-1], 0.0)
    i = interval_index(spec.dates, t)
    return _engine(spec, market, K).equity(V, t, i)["total"].value


def _solve_barriers(spec: CouponBondSpec, equity_at) -> BarrierSchedule:
    """Backward recursion ``E_i(K_i, T_i) = C_i`` shared by both models.

    ``equity_at(K, i, x)`` evaluates the interval-i equity at ``t = T_i``
    given the barriers found so far.
    """
    N = spec.N
    K = np.zeros(N)
    K[-1] = spec.F + spec.coupons[-1]
    scale = max(spec.F + sum(spec.coupons), 1e-300)
    for i in range(N - 1, 0, -1):
        C = spec.coupons[i - 1]
        if C == 0.0:
            K[i - 1] = 0.0
            continue

        def f(x, i=i, C=C):
            return equity_at(K, i, x) - C

        lo = 1e-12 * scale
        if f(lo) >= 0.0:
            raise NumericalError(f"barrier {i}: equity already covers the coupon at the lower bracket")
        hi = scale
        for _ in range(200):
            if f(hi) > 0.0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise NumericalError(f"barrier {i}: could not bracket the root")
        K[i - 1] = brentq(f, lo, hi, xtol=1e-14 * hi, rtol=1e-14, maxiter=500)
    return BarrierSchedule(tuple(K))


def solve_barriers(spec: CouponBondSpec, market: OneFactorMarket) -> BarrierSchedule:
    """Expected-default barriers ``K_1..K_N`` in currency."""

    def equity_at(K, i, x):
        return _engine(spec, market, K).equity(x, spec.dates[i - 1], i)["total"].value

    return _solve_barriers(spec, equity_at)


def _terminal_bond(spec: CouponBondSpec, V: float, tax: float) -> float:
    KN = spec.F + spec.coupons[-1]
    return float(spec.cbar(tax)[-1]) if V >= KN else spec.delta * V


def _bond(spec, market, barriers, V, t, tax) -> float:
    _check_state(spec, V, t)
    K = _check_barriers(spec, barriers)
    if t >= spec.maturity:
        return _terminal_bond(spec, V, tax)
    i = interval_index(spec.dates, t)
    return _engine(spec, market, K, tax).bond(V, t, i)["total"].value


def bond_price(spec: CouponBondSpec, market: OneFactorMarket, barriers: BarrierSchedule,
               V: float, t: float = 0.0) -> float:
    """Defaultable coupon bond value, ignoring taxes."""
    return _bond(spec, market, barriers, V, t, 0.0)


def taxed_bond_price(spec: CouponBondSpec, market: OneFactorMarket, barriers: BarrierSchedule,
                     V: float, t: float = 0.0) -> float:
    """Bond value with coupon income taxed at ``spec.tax``.

    ``barriers`` must be the untaxed schedule; taxes change the bondholder
    payoff, not the equity that sets the default thresholds.
    """
    spec.require_case_one()
    return _bond(spec, market, barriers, V, t, spec.tax)


def _breakdown(parts: dict, scale: float = 1.0) -> PriceBreakdown:
    comps = [scale * parts[k].value for k in ("face", "coupon", "expected", "unexpected")]
    return PriceBreakdown(total=float(sum(comps)), survival_pv=comps[0], coupon_pv=comps[1],
                          expected_default_pv=comps[2], unexpected_default_pv=comps[3])


def bond_initial_breakdown(spec: CouponBondSpec, market: OneFactorMarket,
                           barriers: BarrierSchedule, V0: float, tax: float = 0.0) -> PriceBreakdown:
    """Initial bond value split into face, coupons, expected and unexpected default legs."""
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    return _breakdown(_engine(spec, market, K, tax).bond(V0, 0.0, 0))


def _cost(eq: dict, bd: dict, V0: float) -> float:
    # V0 minus the firm value reaching equity at maturity, the recovered
    # value, and the value paid out on unexpected default without loss
    return V0 - eq["asset"].value - bd["expected"].value - bd["unexpected"].value


def bankruptcy_cost(spec: CouponBondSpec, market: OneFactorMarket,
                    barriers: BarrierSchedule, V0: float) -> float:
    """Present value of the firm value lost to default."""
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    eng = _engine(spec, market, K)
    return _cost(eng.equity(V0, 0.0, 0), eng.bond(V0, 0.0, 0), V0)


def barrier_rate_sensitivity(spec: CouponBondSpec, market: OneFactorMarket,
                             barriers: BarrierSchedule) -> np.ndarray:
    """``d ln K_j / d r`` by implicit differentiation of ``E_j(K_j, T_j) = C_j``."""
    K = _check_barriers(spec, barriers)
    eng = _engine(spec, market, K)
    N = spec.N
    kappa = np.zeros(N)
    for j in range(N - 1, 0, -1):
        if K[j - 1] == 0.0:
            continue
        g = eng.equity(K[j - 1], spec.dates[j - 1], j, grad=True)["total"]
        if not g.d_lnx > 0.0:
            raise NumericalError(f"equity slope at barrier {j} is not positive")
        kappa[j - 1] = -(g.d_r + float(np.dot(g.d_lnK[j:], kappa[j:]))) / g.d_lnx
    return kappa


def duration(spec: CouponBondSpec, market: OneFactorMarket, barriers: BarrierSchedule,
             V0: float, barriers_move: bool = True) -> float:
    """Analytic rate duration ``-dB_0/dr / B_0`` at time 0.

    With ``barriers_move`` the barriers follow the rate through their defining
    equations (the quantity a bump-and-resolve finite difference measures);
    otherwise they are held fixed.
    """
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    g = _engine(spec, market, K).bond(V0, 0.0, 0, grad=True)["total"]
    if not g.value > 0.0:
        raise DomainError("duration needs a positive bond price")
    dB = g.d_r
    if barriers_move:
        dB += float(np.dot(g.d_lnK, barrier_rate_sensitivity(spec, market, barriers)))
    return -dB / g.value


def default_free_duration(spec: CouponBondSpec, r: float, t: float = 0.0) -> float:
    """PV-weighted average time to the remaining payments of the riskless bond."""
    T = spec.dates_array
    if not t < T[0]:
        raise DomainError("default_free_duration needs t < T_1")
    pv = spec.cbar() * np.exp(-r * (T - t))
    tot = pv.sum()
    if not tot > 0.0:
        raise DomainError("bond has no payments")
    return float(np.dot(pv, T - t) / tot)
