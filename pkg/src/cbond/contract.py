"""Bond contract, barrier schedule and price breakdown types."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, UnsupportedCaseError

__all__ = ["CouponBondSpec", "BarrierSchedule", "PriceBreakdown", "interval_index"]


@dataclass(frozen=True)
class CouponBondSpec:
    """Discrete-coupon bond.

    ``coupons[k]`` is paid at ``dates[k]``; the face value ``F`` is paid with the
    last coupon.  ``intensities[i]`` is the default intensity on
    ``(T_i, T_{i+1}]`` with ``T_0 = 0``.  ``tax`` is the rate on coupon income.
    """

    F: float
    coupons: tuple
    dates: tuple
    delta: float
    intensities: tuple
    tax: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "coupons", tuple(float(c) for c in self.coupons))
        object.__setattr__(self, "dates", tuple(float(d) for d in self.dates))
        object.__setattr__(self, "intensities", tuple(float(v) for v in self.intensities))
        n = len(self.dates)
        if n == 0:
            raise DomainError("at least one coupon date is required")
        if len(self.coupons) != n:
            raise DomainError("coupons and dates must have the same length")
        if len(self.intensities) != n:
            raise DomainError("one intensity per coupon interval is required")
        if not (math.isfinite(self.F) and self.F >= 0.0):
            raise DomainError("F must be finite and non-negative")
        if any(not (math.isfinite(c) and c >= 0.0) for c in self.coupons):
            raise DomainError("coupons must be finite and non-negative")
        if self.dates[0] <= 0.0 or any(b <= a for a, b in zip(self.dates[:-1], self.dates[1:])):
            raise DomainError("dates must be positive and strictly ascending")
        if any(not (math.isfinite(v) and v >= 0.0) for v in self.intensities):
            raise DomainError("intensities must be finite and non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError("delta must lie in [0, 1]")
        if not 0.0 <= self.tax < 1.0:
            raise DomainError("tax must lie in [0, 1)")

    @property
    def N(self) -> int:
        return len(self.dates)

    @property
    def maturity(self) -> float:
        return self.dates[-1]

    @property
    def dates_array(self) -> np.ndarray:
        return np.asarray(self.dates)

    @property
    def coupons_array(self) -> np.ndarray:
        return np.asarray(self.coupons)

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.intensities)

    def cbar(self, tax: float = 0.0) -> np.ndarray:
        """Payment at each date on the no-default branch, after tax on coupons."""
        c = (1.0 - tax) * self.coupons_array
        c[-1] += self.F
        return c

    def leverage(self, V0: float) -> float:
        return self.F / V0

    def coupon_rates(self) -> np.ndarray:
        if self.F <= 0.0:
            raise DomainError("coupon rates need F > 0")
        return self.coupons_array / self.F

    def case_one(self) -> bool:
        """Recovery at maturity never tops principal: ``delta (F + C_N) <= F``."""
        return self.delta * (self.F + self.coupons[-1]) <= self.F * (1.0 + 1e-14)

    def require_case_one(self) -> None:
        if not self.case_one():
            raise UnsupportedCaseError(
                "taxed pricing supports case I only: delta <= 1 / (1 + C_N / F) "
                f"(got delta={self.delta}, C_N/F={self.coupons[-1] / self.F if self.F else math.inf})")

    def replace(self, **kw) -> "CouponBondSpec":
        args = dict(F=self.F, coupons=self.coupons, dates=self.dates, delta=self.delta,
                    intensities=self.intensities, tax=self.tax)
        args.update(kw)
        return CouponBondSpec(**args)

    def cumulative_hazard(self, T) -> np.ndarray:
        """``int_0^T lambda(u) du`` for the piecewise-constant intensity."""
        T = np.asarray(T, dtype=float)
        edges = np.concatenate([[0.0], self.dates_array])
        lam = self.lambdas
        seg = np.clip(T[..., None] - edges[None, :-1] if T.ndim else T - edges[:-1], 0.0, None)
        seg = np.minimum(seg, np.diff(edges))
        return (seg * lam).sum(axis=-1)


@dataclass(frozen=True)
class BarrierSchedule:
    """Expected-default thresholds ``K_1..K_N``."""

    K: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "K", tuple(float(k) for k in self.K))
        if any(not (k >= 0.0 and math.isfinite(k)) for k in self.K):
            raise DomainError("barriers must be finite and non-negative")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.K)

    def __len__(self) -> int:
        return len(self.K)


@dataclass(frozen=True)
class PriceBreakdown:
    total: float
    survival_pv: float
    coupon_pv: float
    expected_default_pv: float
    unexpected_default_pv: float

    def components(self) -> dict:
        return {
            "survival_pv": self.survival_pv,
            "coupon_pv": self.coupon_pv,
            "expected_default_pv": self.expected_default_pv,
            "unexpected_default_pv": self.unexpected_default_pv,
        }


def interval_index(dates: Sequence[float], t: float) -> int:
    """Index i with ``T_i <= t < T_{i+1}``: a coupon date counts as paid."""
    return int(np.searchsorted(np.asarray(dates), t, side="right"))
