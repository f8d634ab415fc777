"""Command line front end: JSON valuation config in, summary table and CSV out.

Exit codes: 0 success, 2 bad config, 3 numerical failure, 4 unsupported tax case.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import one_factor as of
from . import two_factor as tf
from .contract import CouponBondSpec
from .errors import CbondError, ConfigError, DomainError, NumericalError, UnsupportedCaseError
from .mc_oracle import SimConfig, mc_bond_and_equity
from .term_structure import OneFactorMarket, VasicekMarket

MODELS = ("one_factor", "two_factor")
OUTPUTS = ("barriers", "equity", "bond", "breakdown", "bankruptcy_cost", "duration", "taxed_bond")
CSV_HEADER = ("name", "value", "units", "component")
CASE_ONE = "case I requires delta <= 1 / (1 + C_N / F), i.e. delta * (F + C_N) <= F"


@dataclass
class RunConfig:
    model: str
    spec: CouponBondSpec
    market: object
    V0: float
    r0: Optional[float]
    t: float
    outputs: tuple
    mc: SimConfig


@dataclass
class Row:
    name: str
    value: float
    units: str
    component: str


@dataclass
class Report:
    rows: list = field(default_factory=list)

    def add(self, name: str, value, units: str, component: str) -> None:
        self.rows.append(Row(name, float(value), units, component))


# ---------------------------------------------------------------------------
# config parsing


def _get(d: dict, key: str, path: str, default=KeyError):
    if not isinstance(d, dict):
        raise ConfigError(path, f"section '{path}' must be an object")
    if key not in d:
        if default is KeyError:
            raise ConfigError(f"{path}.{key}")
        return default
    return d[key]


def _num(d: dict, key: str, path: str, default=KeyError) -> float:
    v = _get(d, key, path, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", f"field {path}.{key} must be a finite number")
    return float(v)


def _nums(d: dict, key: str, path: str, default=KeyError) -> list:
    v = _get(d, key, path, default)
    if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"{path}.{key}", f"field {path}.{key} must be a list of numbers")
    return [float(x) for x in v]


def _build(section: str, fn):
    try:
        return fn()
    except DomainError as exc:
        raise ConfigError(section, f"invalid {section}: {exc}") from exc


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    model = _get(raw, "model", "<root>")
    if model not in MODELS:
        raise ConfigError("model", f"field model must be one of {', '.join(MODELS)}")
    b = _get(raw, "bond", "<root>")
    coupons = _nums(b, "coupons", "bond")
    intens = _nums(b, "intensities", "bond")
    spec = _build("bond", lambda: CouponBondSpec(
        F=_num(b, "F", "bond"), coupons=tuple(coupons), dates=tuple(_nums(b, "dates", "bond")),
        delta=_num(b, "delta", "bond"), intensities=tuple(intens), tax=_num(b, "tax", "bond", 0.0)))
    m = _get(raw, "market", "<root>")
    val = _get(raw, "valuation", "<root>")
    if model == "one_factor":
        market = _build("market", lambda: OneFactorMarket(
            r=_num(m, "r", "market"), b=_num(m, "b", "market"), s_V=_num(m, "s_V", "market")))
        r0 = None
    else:
        sv = _get(m, "s_V", "market")
        sv = _nums(m, "s_V", "market") if isinstance(sv, list) else _num(m, "s_V", "market")
        market = _build("market", lambda: VasicekMarket(
            a1=_num(m, "a1", "market"), a2=_num(m, "a2", "market"), s_r=_num(m, "s_r", "market"),
            rho=_num(m, "rho", "market"), s_V=sv, b=_num(m, "b", "market"),
            s_V_breaks=tuple(_nums(m, "s_V_breaks", "market", []))))
        r0 = _num(val, "r0", "valuation")
    V0 = _num(val, "V0", "valuation")
    if not V0 > 0.0:
        raise ConfigError("valuation.V0", "field valuation.V0 must be positive")
    t = _num(val, "t", "valuation", 0.0)
    if t < 0.0:
        raise ConfigError("valuation.t", "field valuation.t must be non-negative")
    outs = _get(raw, "outputs", "<root>", list(OUTPUTS))
    if not isinstance(outs, list) or any(o not in OUTPUTS for o in outs):
        raise ConfigError("outputs", f"field outputs must list items from {', '.join(OUTPUTS)}")
    mc_raw = _get(raw, "mc", "<root>", {})
    mc = _build("mc", lambda: SimConfig(
        n_paths=int(_num(mc_raw, "n_paths", "mc", 1_000_000)),
        seed=int(_num(mc_raw, "seed", "mc", 20240601)),
        substeps_per_interval=int(_num(mc_raw, "substeps_per_interval", "mc", 0)),
        workers=int(_num(mc_raw, "workers", "mc", 1))))
    return RunConfig(model, spec, market, V0, r0, t, tuple(outs), mc)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# computation


def compute(cfg: RunConfig, wanted: set, mc_check: bool, tax: Optional[float]) -> Report:
    rep = Report()
    two = cfg.model == "two_factor"
    spec = cfg.spec if tax is None else cfg.spec.replace(tax=tax)
    m = cfg.market
    V, t = cfg.V0, cfg.t
    at_zero = t == 0.0
    cur = "currency"
    K = tf.solve_barriers_2f(spec, m) if two else of.solve_barriers(spec, m)
    if "barriers" in wanted:
        for j, k in enumerate(K.K, 1):
            rep.add(f"K_{j}", k, "relative" if two else cur, "barrier")
    E = B = None
    if "equity" in wanted or mc_check:
        E = tf.equity_price_2f(spec, m, K, V, cfg.r0, t) if two else of.equity_price(spec, m, K, V, t)
        rep.add("E_0", E, cur, "equity")
    if "bond" in wanted or mc_check:
        B = tf.bond_price_2f(spec, m, K, V, cfg.r0, t) if two else of.bond_price(spec, m, K, V, t)
        rep.add("B_0", B, cur, "bond")
    if "breakdown" in wanted and at_zero:
        bd = tf.bond_initial_breakdown_2f(spec, m, K, V, cfg.r0) if two else \
            of.bond_initial_breakdown(spec, m, K, V)
        for name, value in bd.components().items():
            rep.add(name, value, cur, "breakdown")
    if "bankruptcy_cost" in wanted and at_zero:
        bc = tf.bankruptcy_cost_2f(spec, m, K, V, cfg.r0) if two else of.bankruptcy_cost(spec, m, K, V)
        rep.add("bankruptcy_cost", bc, cur, "cost")
    if "duration" in wanted and at_zero:
        if two:
            d = tf.duration_2f(spec, m, K, V, cfg.r0)
            rep.add("duration", d.duration, "years", "duration")
            rep.add("zcb_duration", d.zcb_duration, "years", "duration")
            rep.add("prop1_flag", 1.0 if d.prop1_flag else 0.0, "flag", "duration")
        else:
            rep.add("duration", of.duration(spec, m, K, V), "years", "duration")
            rep.add("default_free_duration", of.default_free_duration(spec, m.r), "years", "duration")
    if "taxed_bond" in wanted and (spec.tax > 0.0 or tax is not None):
        Bt = tf.taxed_bond_price_2f(spec, m, K, V, cfg.r0, t) if two else \
            of.taxed_bond_price(spec, m, K, V, t)
        rep.add("tax_rate", spec.tax, "fraction", "tax")
        rep.add("B_0_taxed", Bt, cur, "tax")
    if mc_check:
        if not at_zero:
            raise ConfigError("valuation.t", "the Monte Carlo check runs at t = 0 only")
        est = mc_bond_and_equity(spec, m, K, V, cfg.mc, r0=cfg.r0)
        rep.add("mc_n_paths", cfg.mc.n_paths, "count", "mc")
        rep.add("mc_seed", cfg.mc.seed, "count", "mc")
        for name, closed in (("bond", B), ("equity", E)):
            e = est[name]
            ratio = abs(closed - e.mean) / e.std_error if e.std_error > 0 else (
                0.0 if closed == e.mean else math.inf)
            rep.add(f"mc_{name}_mean", e.mean, cur, "mc")
            rep.add(f"mc_{name}_std_error", e.std_error, cur, "mc")
            rep.add(f"mc_{name}_ratio", ratio, "std_errors", "mc")
    return rep


# ---------------------------------------------------------------------------
# rendering


def render_table(rep: Report) -> str:
    w = max([len(r.name) for r in rep.rows] + [4])
    lines = [f"{'name':<{w}}  {'value':>18}  {'units':<10}  component"]
    for r in rep.rows:
        lines.append(f"{r.name:<{w}}  {r.value:>18.10g}  {r.units:<10}  {r.component}")
    return "\n".join(lines)


def write_csv(rep: Report, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rep.rows:
            w.writerow((r.name, repr(r.value), r.units, r.component))


SUBCOMMANDS = {
    "price": {"barriers", "equity", "bond", "breakdown", "bankruptcy_cost", "taxed_bond"},
    "barriers": {"barriers"},
    "duration": {"barriers", "duration"},
    "mc-check": {"barriers"},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbond", description="Defaultable discrete-coupon bond pricer")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name, hlp in (("price", "equity, bond, breakdown, bankruptcy cost, taxed price"),
                      ("barriers", "expected-default barriers"),
                      ("duration", "analytic rate duration"),
                      ("mc-check", "closed forms against the Monte Carlo oracle"),
                      ("run", "quantities listed under 'outputs' in the config")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", required=True, help="JSON valuation config")
        sp.add_argument("--csv", help="write a CSV report to this path")
        sp.add_argument("--mc-check", action="store_true", help="append Monte Carlo estimates")
        sp.add_argument("--seed", type=int, help="override mc.seed")
        sp.add_argument("--paths", type=int, help="override mc.n_paths")
        sp.add_argument("--tax", type=float, help="override bond.tax and report the taxed price")
        if name == "run":
            sp.add_argument("--all", action="store_true", help="compute every quantity")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None or args.paths is not None:
            cfg.mc = _build("mc", lambda: SimConfig(
                n_paths=args.paths if args.paths is not None else cfg.mc.n_paths,
                seed=args.seed if args.seed is not None else cfg.mc.seed,
                substeps_per_interval=cfg.mc.substeps_per_interval, workers=cfg.mc.workers))
        if args.tax is not None and not 0.0 <= args.tax < 1.0:
            raise ConfigError("--tax", "--tax must lie in [0, 1)")
        if args.cmd == "run":
            wanted = set(OUTPUTS) if args.all else set(cfg.outputs)
        else:
            wanted = set(SUBCOMMANDS[args.cmd])
        mc = args.mc_check or args.cmd == "mc-check"
        rep = compute(cfg, wanted, mc, args.tax)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnsupportedCaseError as exc:
        print(f"unsupported case: {exc}", file=sys.stderr)
        print(CASE_ONE, file=sys.stderr)
        return 4
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CbondError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(render_table(rep))
    if args.csv:
        write_csv(rep, args.csv)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
