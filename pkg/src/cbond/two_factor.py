"""Vasicek-rate pricing through the maturity bond as numeraire.

All closed forms live in relative-price space ``x = V / Z(r, t; T_N)``, where
the underlying has zero rate, payout ``b`` and the deterministic volatility
``S_x``.  Barriers are therefore in relative-price units and do not depend on
the current short rate.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._expansion import Expansion
from .binaries import DiffusionSpec
from .contract import BarrierSchedule, CouponBondSpec, PriceBreakdown, interval_index
from .errors import DomainError, NumericalError
from .one_factor import _breakdown, _check_barriers, _check_state, _cost, _solve_barriers, _terminal_bond
from .term_structure import VasicekMarket, accumulated_variance, zcb_coeffs, zcb_price

__all__ = [
    "Duration2F",
    "equity_price_2f",
    "solve_barriers_2f",
    "bond_price_2f",
    "bond_initial_breakdown_2f",
    "bankruptcy_cost_2f",
    "taxed_bond_price_2f",
    "duration_2f",
    "relative_equity",
    "relative_bond",
]


class Duration2F(NamedTuple):
    duration: float
    prop1_flag: bool
    zcb_duration: float


def _engine(spec: CouponBondSpec, market: VasicekMarket, K, tax: float = 0.0) -> Expansion:
    cbar = spec.cbar(tax)
    TN = spec.maturity

    def var(t, T):
        return accumulated_variance(market, t, T, TN)

    def phi(m: int, tau: np.ndarray):
        return np.full(tau.shape, float(cbar[m:].sum())), np.zeros(tau.shape)

    diff = DiffusionSpec.deterministic(market.b, var)
    return Expansion(spec.dates, K, cbar, spec.intensities, spec.delta, spec.F, diff, phi)


def _numeraire(spec: CouponBondSpec, market: VasicekMarket, r: float, t: float) -> float:
    if not math.isfinite(r):
        raise DomainError("short rate must be finite")
    return zcb_price(market, r, min(t, spec.maturity), spec.maturity)


def relative_equity(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                    x: float, t: float) -> float:
    """Equity in units of the maturity bond as a function of the relative price."""
    _check_state(spec, x, t)
    K = _check_barriers(spec, barriers)
    if t >= spec.maturity:
        return max(x - spec.F - spec.coupons[-1], 0.0)
    i = interval_index(spec.dates, t)
    return _engine(spec, market, K).equity(x, t, i)["total"].value


def relative_bond(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                  x: float, t: float, tax: float = 0.0) -> float:
    """Bond in units of the maturity bond as a function of the relative price."""
    _check_state(spec, x, t)
    K = _check_barriers(spec, barriers)
    if t >= spec.maturity:
        return _terminal_bond(spec, x, tax)
    i = interval_index(spec.dates, t)
    return _engine(spec, market, K, tax).bond(x, t, i)["total"].value


def equity_price_2f(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                    V: float, r: float, t: float = 0.0) -> float:
    Z = _numeraire(spec, market, r, t)
    _check_state(spec, V, t)
    return Z * relative_equity(spec, market, barriers, V / Z, t)


def solve_barriers_2f(spec: CouponBondSpec, market: VasicekMarket) -> BarrierSchedule:
    """Barriers in relative-price units: default at T_i when ``V < K_i Z(r, T_i; T_N)``."""

    def equity_at(K, i, x):
        return _engine(spec, market, K).equity(x, spec.dates[i - 1], i)["total"].value

    return _solve_barriers(spec, equity_at)


def bond_price_2f(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                  V: float, r: float, t: float = 0.0) -> float:
    Z = _numeraire(spec, market, r, t)
    _check_state(spec, V, t)
    return Z * relative_bond(spec, market, barriers, V / Z, t)


def taxed_bond_price_2f(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                        V: float, r: float, t: float = 0.0) -> float:
    """Bond value with coupon income taxed at ``spec.tax`` (untaxed barriers)."""
    spec.require_case_one()
    Z = _numeraire(spec, market, r, t)
    _check_state(spec, V, t)
    return Z * relative_bond(spec, market, barriers, V / Z, t, spec.tax)


def bond_initial_breakdown_2f(spec: CouponBondSpec, market: VasicekMarket,
                              barriers: BarrierSchedule, V0: float, r0: float,
                              tax: float = 0.0) -> PriceBreakdown:
    Z0 = _numeraire(spec, market, r0, 0.0)
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    return _breakdown(_engine(spec, market, K, tax).bond(V0 / Z0, 0.0, 0), Z0)


def bankruptcy_cost_2f(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                       V0: float, r0: float) -> float:
    Z0 = _numeraire(spec, market, r0, 0.0)
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    eng = _engine(spec, market, K)
    x0 = V0 / Z0
    return Z0 * _cost(eng.equity(x0, 0.0, 0), eng.bond(x0, 0.0, 0), x0)


def duration_2f(spec: CouponBondSpec, market: VasicekMarket, barriers: BarrierSchedule,
                V0: float, r0: float) -> Duration2F:
    """Rate duration at time 0 and the sufficient condition for ``D <= B(0, T)``.

    With ``B_0 = Z_0 f_1 + delta V_0 f_2`` and ``f~`` the ``ln x`` derivatives
    of the normal-probability parts, ``D = B(0,T) (Z_0 f_1 - Z_0 f~_1 -
    delta V_0 f~_2) / B_0``.  Barriers are rate-free in relative units.
    """
    Z0 = _numeraire(spec, market, r0, 0.0)
    _check_state(spec, V0, 0.0)
    K = _check_barriers(spec, barriers)
    Bz = zcb_coeffs(market, 0.0, spec.maturity)[1]
    x0 = V0 / Z0
    parts = _engine(spec, market, K).bond(x0, 0.0, 0, grad=True)
    pay = [parts[k] for k in ("face", "coupon", "unexpected_bond")]
    f1 = sum(p.value for p in pay)
    ft1 = sum(p.d_lnx for p in pay)
    asset = [parts["expected"], parts["unexpected_asset"]]
    dv = spec.delta * V0
    if dv > 0.0:
        # asset legs are delta * x * f_2 in relative units
        f2 = sum(a.value for a in asset) / (spec.delta * x0)
        ft2 = sum(a.d_lnx for a in asset) / (spec.delta * x0) - f2
    else:
        f2 = ft2 = 0.0
    B0 = Z0 * f1 + dv * f2
    if not B0 > 0.0:
        raise DomainError("duration needs a positive bond price")
    D = Bz * (Z0 * f1 - Z0 * ft1 - dv * ft2) / B0
    flag = dv * ft2 + Z0 * ft1 + dv * f2 >= 0.0
    if flag and D > Bz * (1.0 + 1e-9) + 1e-12:
        raise NumericalError("duration exceeds the zero-coupon duration although the bound applies")
    return Duration2F(float(D), bool(flag), float(Bz))
