import math

import numpy as np
import pytest
from scipy.integrate import quad

from cbond.contract import CouponBondSpec
from cbond.errors import DomainError
from cbond.term_structure import (OneFactorMarket, VasicekMarket, accumulated_variance,
                                  default_free_pv, sx_squared, vasicek_integrals, zcb_coeffs,
                                  zcb_duration, zcb_price)

GEN = VasicekMarket(a1=0.006, a2=0.15, s_r=0.015, rho=-0.35, s_V=0.28, b=0.01)
PW = VasicekMarket(a1=0.006, a2=0.15, s_r=0.015, rho=0.4, s_V=[0.3, 0.2, 0.35], b=0.0,
                   s_V_breaks=[0.7, 1.6])


def test_market_validation():
    with pytest.raises(DomainError):
        OneFactorMarket(r=0.05, b=0.0, s_V=0.0)
    with pytest.raises(DomainError):
        OneFactorMarket(r=0.05, b=-0.1, s_V=0.2)
    with pytest.raises(DomainError):
        VasicekMarket(a1=0.0, a2=-0.1, s_r=0.01, rho=0.0, s_V=0.2, b=0.0)
    with pytest.raises(DomainError):
        VasicekMarket(a1=0.0, a2=0.1, s_r=0.01, rho=1.5, s_V=0.2, b=0.0)
    with pytest.raises(DomainError):
        VasicekMarket(a1=0.0, a2=0.1, s_r=0.01, rho=0.0, s_V=[0.2, 0.3], b=0.0)
    with pytest.raises(DomainError):
        VasicekMarket(a1=0.0, a2=0.1, s_r=0.01, rho=0.0, s_V=[0.2, 0.3], b=0.0, s_V_breaks=[-1.0])


def test_zcb_basic_values():
    assert zcb_coeffs(GEN, 1.3, 1.3) == (0.0, 0.0)
    assert zcb_price(GEN, 0.04, 2.0, 2.0) == 1.0
    m = VasicekMarket(a1=0.0, a2=0.1, s_r=0.0, rho=0.0, s_V=0.2, b=0.0)
    assert zcb_coeffs(m, 0.0, 1.0)[1] == pytest.approx(0.9516258196, abs=1e-10)
    flat = VasicekMarket(a1=0.0, a2=0.0, s_r=0.0, rho=0.0, s_V=0.2, b=0.0)
    assert zcb_price(flat, 0.05, 0.0, 2.0) == pytest.approx(math.exp(-0.1), rel=1e-14)
    tiny = VasicekMarket(a1=0.0, a2=1e-9, s_r=0.0, rho=0.0, s_V=0.2, b=0.0)
    assert zcb_coeffs(tiny, 0.0, 3.0)[1] == pytest.approx(3.0, abs=1e-8)
    assert zcb_coeffs(flat, 0.0, 3.0)[1] == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(DomainError):
        zcb_coeffs(GEN, 2.0, 1.0)


def test_series_branch_is_continuous():
    for a2 in (1e-7, 1e-4, 1e-3, 0.05, 0.3, 0.499, 0.501, 0.8, 2.0):
        v = vasicek_integrals(a2, 1.0)
        Bq = quad(lambda u: -math.expm1(-a2 * u) / a2, 0, 1, epsabs=1e-15)[0]
        B2 = quad(lambda u: (-math.expm1(-a2 * u) / a2) ** 2, 0, 1, epsabs=1e-15)[0]
        assert v["I1"] == pytest.approx(Bq, rel=1e-12)
        assert v["I2"] == pytest.approx(B2, rel=1e-12)


def test_A_against_quadrature():
    A, B = zcb_coeffs(GEN, 0.3, 2.5)

    def Bu(u):
        return (1 - math.exp(-GEN.a2 * (2.5 - u))) / GEN.a2

    ref = -quad(lambda u: GEN.a1 * Bu(u) - 0.5 * GEN.s_r ** 2 * Bu(u) ** 2, 0.3, 2.5, epsabs=1e-15)[0]
    assert A == pytest.approx(ref, rel=1e-12)
    assert B == pytest.approx(Bu(0.3), rel=1e-14)


def test_zcb_pde_residual():
    # dZ/dt + s_r^2/2 Z_rr + (a1 - a2 r) Z_r - r Z = 0
    T = 3.0
    h_t, h_r = 1e-4, 1e-3
    for t in (0.0, 0.8, 2.1):
        for r in (-0.01, 0.03, 0.08):
            Z = zcb_price(GEN, r, t, T)
            Zt = (zcb_price(GEN, r, t + h_t, T) - zcb_price(GEN, r, t - h_t, T)) / (2 * h_t) if t > 0 else \
                (zcb_price(GEN, r, t + h_t, T) - Z) / h_t
            Zr = (zcb_price(GEN, r + h_r, t, T) - zcb_price(GEN, r - h_r, t, T)) / (2 * h_r)
            Zrr = (zcb_price(GEN, r + h_r, t, T) - 2 * Z + zcb_price(GEN, r - h_r, t, T)) / h_r ** 2
            res = Zt + 0.5 * GEN.s_r ** 2 * Zrr + (GEN.a1 - GEN.a2 * r) * Zr - r * Z
            assert abs(res) < 1e-6


def test_zcb_properties():
    rs = np.linspace(0.0, 0.1, 11)
    prices = [zcb_price(GEN, r, 0.0, 4.0) for r in rs]
    assert all(0.0 < p <= 1.0 for p in prices)
    assert np.all(np.diff(prices) < 0.0)
    h = 1e-6
    fd = -(zcb_price(GEN, 0.03 + h, 0.5, 4.0) - zcb_price(GEN, 0.03 - h, 0.5, 4.0)) / (2 * h)
    assert fd / zcb_price(GEN, 0.03, 0.5, 4.0) == pytest.approx(zcb_duration(GEN, 0.5, 4.0), rel=1e-8)


def test_sx_squared():
    m0 = VasicekMarket(a1=0.0, a2=0.1, s_r=0.0, rho=0.3, s_V=0.25, b=0.0)
    assert sx_squared(m0, 0.5, 2.0) == pytest.approx(0.0625, abs=1e-15)
    assert sx_squared(GEN, 2.0, 2.0) == pytest.approx(0.28 ** 2, abs=1e-15)
    B = zcb_coeffs(GEN, 0.0, 2.0)[1]
    hedge = VasicekMarket(a1=0.0, a2=GEN.a2, s_r=0.2, rho=-1.0, s_V=0.2 * B, b=0.0)
    assert sx_squared(hedge, 0.0, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert np.all(sx_squared(GEN, np.linspace(0, 2, 9), 2.0) >= 0.0)


@pytest.mark.parametrize("market", [GEN, PW])
def test_accumulated_variance(market):
    T_ref = 2.5
    for t1, t2 in ((0.0, 2.5), (0.3, 1.1), (0.65, 1.7)):
        ref = quad(lambda u: sx_squared(market, u, T_ref), t1, t2, epsabs=1e-15,
                   points=[p for p in market.breaks if t1 < p < t2] or None, limit=200)[0]
        assert accumulated_variance(market, t1, t2, T_ref) == pytest.approx(ref, rel=1e-10)
    a = accumulated_variance(market, 0.2, 0.9, T_ref)
    b = accumulated_variance(market, 0.9, 2.0, T_ref)
    c = accumulated_variance(market, 0.2, 2.0, T_ref)
    assert a + b == pytest.approx(c, abs=1e-12)
    assert accumulated_variance(market, 1.0, 1.0, T_ref) == 0.0
    vec = accumulated_variance(market, 0.1, np.array([0.5, 1.0, 2.0]), T_ref)
    assert vec[1] == accumulated_variance(market, 0.1, 1.0, T_ref)
    with pytest.raises(DomainError):
        accumulated_variance(market, 1.0, 0.5, T_ref)


def test_accumulated_variance_deterministic_rate():
    m = VasicekMarket(a1=0.0, a2=0.3, s_r=0.0, rho=0.0, s_V=0.2, b=0.0)
    assert accumulated_variance(m, 0.5, 1.5, 2.0) == pytest.approx(0.04, abs=1e-15)


def test_default_free_pv():
    zero = CouponBondSpec(F=100.0, coupons=(0.0,), dates=(1.0,), delta=0.5, intensities=(0.0,))
    assert default_free_pv(zero, OneFactorMarket(0.0, 0.0, 0.2), 0.0, 0) == 100.0
    spec = CouponBondSpec(F=100.0, coupons=(5.0, 5.0), dates=(1.0, 2.0), delta=0.5, intensities=(0.0, 0.0))
    ref = 5 * math.exp(-0.05) + 105 * math.exp(-0.1)
    assert default_free_pv(spec, OneFactorMarket(0.05, 0.0, 0.2), 0.0, 0) == pytest.approx(ref, rel=1e-14)
    assert default_free_pv(spec, GEN, 0.0, 0) == 110.0
    assert default_free_pv(spec, GEN, 1.2, 1) == 105.0
    assert default_free_pv(spec, GEN, 0.0, 0, tax=0.2) == 108.0
    with pytest.raises(DomainError):
        default_free_pv(spec, GEN, 0.0, 3)


def test_integrals_at_zero_speed():
    v = vasicek_integrals(0.0, 2.0)
    assert v["B"] == 2.0 and v["I4"] == 2.0
    assert v["I1"] == pytest.approx(2.0, abs=1e-15)
    assert v["I2"] == pytest.approx(8.0 / 3.0, abs=1e-15)
    assert v["I3"] == pytest.approx(2.0, abs=1e-15)
