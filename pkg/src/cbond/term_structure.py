"""Discounting: constant short rate and the Vasicek zero-coupon bond.

Also hosts the relative-price volatility ``S_x`` of the firm value measured
in units of the maturity zero-coupon bond, and its accumulated variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError

__all__ = [
    "OneFactorMarket",
    "VasicekMarket",
    "zcb_coeffs",
    "zcb_price",
    "zcb_duration",
    "sx_squared",
    "accumulated_variance",
    "default_free_pv",
    "vasicek_integrals",
]

_SERIES = 0.5
_SERIES_TERMS = 40


@dataclass(frozen=True)
class OneFactorMarket:
    """Constant short rate ``r``, payout rate ``b`` and firm volatility ``s_V``."""

    r: float
    b: float
    s_V: float

    def __post_init__(self) -> None:
        for name in ("r", "b", "s_V"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.s_V <= 0.0:
            raise DomainError("s_V must be positive")
        if self.b < 0.0:
            raise DomainError("b must be non-negative")

    def discount(self, t: float, T) -> np.ndarray:
        return np.exp(-self.r * (np.asarray(T, dtype=float) - t))

    def with_rate(self, r: float) -> "OneFactorMarket":
        return OneFactorMarket(r=r, b=self.b, s_V=self.s_V)


@dataclass(frozen=True)
class VasicekMarket:
    """Vasicek short rate ``dr = (a1 - a2 r) dt + s_r dW_1`` and firm dynamics.

    ``s_V`` is either a constant or a sequence of piece values; with
    ``s_V_breaks = (t_1, ..., t_k)`` the value ``s_V[j]`` applies on
    ``[t_j, t_{j+1})`` with ``t_0 = 0`` and ``t_{k+1} = inf``.
    """

    a1: float
    a2: float
    s_r: float
    rho: float
    s_V: Union[float, Sequence[float]]
    b: float
    s_V_breaks: Sequence[float] = field(default=())

    def __post_init__(self) -> None:
        vals = np.atleast_1d(np.asarray(self.s_V, dtype=float)).copy()
        breaks = np.asarray(self.s_V_breaks, dtype=float).ravel().copy()
        if vals.size != breaks.size + 1:
            raise DomainError("s_V needs exactly one more value than s_V_breaks")
        if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
            raise DomainError("s_V must be positive and finite")
        if breaks.size and (np.any(np.diff(breaks) <= 0.0) or breaks[0] <= 0.0):
            raise DomainError("s_V_breaks must be positive and strictly ascending")
        for name in ("a1", "a2", "s_r", "rho", "b"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.s_r < 0.0:
            raise DomainError("s_r must be non-negative")
        if self.a2 < 0.0:
            raise DomainError("a2 must be non-negative")
        if abs(self.rho) > 1.0:
            raise DomainError("rho must lie in [-1, 1]")
        if self.b < 0.0:
            raise DomainError("b must be non-negative")
        vals.setflags(write=False)
        breaks.setflags(write=False)
        object.__setattr__(self, "_vals", vals)
        object.__setattr__(self, "_breaks", breaks)

    @property
    def s_V_values(self) -> np.ndarray:
        return self._vals

    @property
    def breaks(self) -> np.ndarray:
        return self._breaks

    def s_V_at(self, t):
        idx = np.searchsorted(self._breaks, np.asarray(t, dtype=float), side="right")
        return self._vals[idx]

    def pieces(self, t1: float, t2: float) -> list[tuple[float, float, float]]:
        """Split [t1, t2] at the volatility breakpoints: (start, end, s_V)."""
        cuts = [t1] + [float(c) for c in self._breaks if t1 < c < t2] + [t2]
        return [(lo, hi, float(self.s_V_at(lo))) for lo, hi in zip(cuts[:-1], cuts[1:])]


def vasicek_integrals(a2: float, s) -> dict[str, np.ndarray]:
    """Integrals of ``B(v) = (1 - e^{-a2 v}) / a2`` over ``[0, s]``.

    Returns ``B``, ``I1 = int B``, ``I2 = int B^2``, ``I3 = int e^{-a2 v} B``
    and ``I4 = int e^{-2 a2 v}``, with a series branch for small ``a2 s``.
    """
    s = np.asarray(s, dtype=float)
    x = a2 * s
    small = x < _SERIES
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        b1 = -np.expm1(-x) / a2
        b2 = -np.expm1(-2.0 * x) / (2.0 * a2)
        closed = {"B": b1, "I1": (s - b1) / a2, "I2": (s - 2.0 * b1 + b2) / a2 ** 2,
                  "I3": (b1 - b2) / a2, "I4": b2}
    if not np.any(small):
        return closed
    # Taylor sums in x = a2 s; the closed forms cancel badly for small x
    xs = np.where(small, x, 0.0)
    ser = {k: np.zeros_like(xs) for k in closed}
    for k in range(1, _SERIES_TERMS):
        term = (-1.0) ** (k + 1) / math.factorial(k)
        ser["B"] += term * xs ** (k - 1)
        ser["I4"] += term * 2.0 ** (k - 1) * xs ** (k - 1)
        if k >= 2:
            ser["I1"] -= term * xs ** (k - 2)
            ser["I3"] += term * (1.0 - 2.0 ** (k - 1)) * xs ** (k - 2)
        if k >= 3:
            ser["I2"] += term * (2.0 ** (k - 1) - 2.0) * xs ** (k - 3)
    power = {"B": 1, "I4": 1, "I1": 2, "I3": 2, "I2": 3}
    return {k: np.where(small, ser[k] * s ** power[k], closed[k]) for k in closed}


def zcb_coeffs(market: VasicekMarket, t: float, T: float) -> tuple[float, float]:
    """``(A, B)`` with ``Z = exp(A - B r)``.

    ``A = -int_t^T [a1 B(u,T) - s_r^2 B(u,T)^2 / 2] du``.
    """
    if t > T:
        raise DomainError("zcb_coeffs needs t <= T")
    v = vasicek_integrals(market.a2, T - t)
    A = -market.a1 * v["I1"] + 0.5 * market.s_r ** 2 * v["I2"]
    return float(A), float(v["B"])


def zcb_price(market: VasicekMarket, r: float, t: float, T: float) -> float:
    A, B = zcb_coeffs(market, t, T)
    return math.exp(A - B * r)


def zcb_duration(market: VasicekMarket, t: float, T: float) -> float:
    """``-dZ/dr / Z``, which is ``B(t, T)``."""
    return zcb_coeffs(market, t, T)[1]


def sx_squared(market: VasicekMarket, t, T_ref: float):
    """Instantaneous variance rate of ``V / Z(r, t; T_ref)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t > T_ref):
        raise DomainError("sx_squared needs t <= T_ref")
    B = vasicek_integrals(market.a2, T_ref - t)["B"]
    sv = market.s_V_at(t)
    out = sv ** 2 + 2.0 * market.rho * sv * market.s_r * B + (market.s_r * B) ** 2
    return np.maximum(out, 0.0) if out.ndim else max(float(out), 0.0)


def accumulated_variance(market: VasicekMarket, t1: float, t2, T_ref: float):
    """``int_{t1}^{t2} S_x^2(u) du`` in closed form (vectorised over ``t2``)."""
    t2a = np.atleast_1d(np.asarray(t2, dtype=float))
    if np.any(t2a < t1) or np.any(t2a > T_ref + 1e-12):
        raise DomainError("accumulated_variance needs t1 <= t2 <= T_ref")
    out = np.zeros_like(t2a)
    cuts = np.concatenate([[t1], market.breaks[(market.breaks > t1)], [np.inf]])
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sv = float(market.s_V_at(lo))
        end = np.minimum(t2a, hi)
        act = end > lo
        if not np.any(act):
            break
        vl = vasicek_integrals(market.a2, T_ref - lo)
        ve = vasicek_integrals(market.a2, np.maximum(T_ref - end, 0.0))
        piece = (sv ** 2 * (end - lo)
                 + 2.0 * market.rho * sv * market.s_r * (vl["I1"] - ve["I1"])
                 + market.s_r ** 2 * (vl["I2"] - ve["I2"]))
        out += np.where(act, piece, 0.0)
    out = np.maximum(out, 0.0)
    return out if np.ndim(t2) else float(out[0])


def default_free_pv(spec, market, t: float, i: int, tax: float | None = None) -> float:
    """Value of the coupons after index ``i`` plus the face value.

    One-factor market: ``sum_{k>i} cbar_k exp(-r (T_k - t))`` in currency.
    Vasicek market: the scalar ``F + sum_{k>i} C_k`` in maturity-bond units.
    ``tax`` overrides the contract's tax rate.
    """
    n = spec.N
    if not 0 <= i <= n:
        raise DomainError(f"index {i} out of range 0..{n}")
    cbar = spec.cbar(spec.tax if tax is None else tax)
    if isinstance(market, OneFactorMarket):
        dates = spec.dates_array
        if i < n and t > dates[i] + 1e-15:
            raise DomainError("default_free_pv needs t <= T_{i+1}")
        return float(np.sum(cbar[i:] * market.discount(t, dates[i:])))
    if isinstance(market, VasicekMarket):
        return float(np.sum(cbar[i:]))
    raise DomainError("unsupported market type")
