"""Shared fixtures: benchmark contracts and a random valid-spec generator."""

from __future__ import annotations

import numpy as np
import pytest

from cbond.contract import CouponBondSpec
from cbond.term_structure import OneFactorMarket, VasicekMarket

BENCH_SPEC = CouponBondSpec(F=100.0, coupons=(3.0, 3.0, 3.0, 3.0), dates=(0.5, 1.0, 1.5, 2.0),
                            delta=0.5, intensities=(0.02, 0.02, 0.03, 0.03))
BENCH_1F = OneFactorMarket(r=0.05, b=0.01, s_V=0.25)
BENCH_2F = VasicekMarket(a1=0.005, a2=0.1, s_r=0.01, rho=-0.3, s_V=0.25, b=0.01)
BENCH_V0 = 150.0
BENCH_R0 = 0.05


def random_spec(rng: np.random.Generator, n_max: int = 4, **over) -> CouponBondSpec:
    n = int(rng.integers(1, n_max + 1))
    dates = np.cumsum(rng.uniform(0.25, 1.0, n))
    F = float(rng.uniform(50.0, 150.0))
    coupons = rng.uniform(0.0, 0.08, n) * F
    coupons[rng.random(n) < 0.15] = 0.0
    args = dict(F=F, coupons=tuple(coupons), dates=tuple(dates), delta=float(rng.uniform(0.0, 1.0)),
                intensities=tuple(rng.uniform(0.0, 0.06, n)))
    args.update(over)
    return CouponBondSpec(**args)


def random_one_factor(rng: np.random.Generator, **over) -> OneFactorMarket:
    args = dict(r=float(rng.uniform(0.0, 0.08)), b=float(rng.uniform(0.0, 0.03)),
                s_V=float(rng.uniform(0.12, 0.4)))
    args.update(over)
    return OneFactorMarket(**args)


def random_vasicek(rng: np.random.Generator, **over) -> VasicekMarket:
    args = dict(a1=float(rng.uniform(0.0, 0.01)), a2=float(rng.uniform(0.02, 0.5)),
                s_r=float(rng.uniform(0.002, 0.02)), rho=float(rng.uniform(-0.6, 0.6)),
                s_V=float(rng.uniform(0.12, 0.4)), b=float(rng.uniform(0.0, 0.03)))
    args.update(over)
    return VasicekMarket(**args)


def random_V0(rng: np.random.Generator, spec: CouponBondSpec) -> float:
    return float(spec.F + sum(spec.coupons)) * float(rng.uniform(1.05, 2.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
