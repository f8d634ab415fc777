import csv
import json
from pathlib import Path

import pytest

from cbond import cli
from cbond.errors import NumericalError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _load(name):
    return json.loads((CONFIGS / name).read_text())


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_price_one_factor_csv(tmp_path, capsys):
    out = tmp_path / "out.csv"
    rc = cli.main(["run", "--all", "--config", str(CONFIGS / "one_factor_benchmark.json"), "--csv", str(out)])
    assert rc == 0
    rows = _rows(out)
    names = [r["name"] for r in rows]
    for need in ("K_1", "K_2", "K_3", "K_4", "E_0", "B_0", "bankruptcy_cost", "duration"):
        assert need in names
    assert list(rows[0].keys()) == ["name", "value", "units", "component"]
    vals = {r["name"]: float(r["value"]) for r in rows}
    assert vals["K_4"] == 103.0
    assert vals["E_0"] + vals["B_0"] + vals["bankruptcy_cost"] == pytest.approx(150.0, rel=1e-12)
    # table and CSV render the same numbers
    table = capsys.readouterr().out.splitlines()[1:]
    for line, r in zip(table, rows):
        name, value = line.split()[:2]
        assert name == r["name"]
        assert value == f"{float(r['value']):.10g}"


def test_csv_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = str(CONFIGS / "one_factor_benchmark.json")
    assert cli.main(["price", "--config", cfg, "--csv", str(a), "--mc-check", "--paths", "70000"]) == 0
    assert cli.main(["price", "--config", cfg, "--csv", str(b), "--mc-check", "--paths", "70000"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_two_factor_subcommands(tmp_path):
    cfg = str(CONFIGS / "two_factor_benchmark.json")
    out = tmp_path / "d.csv"
    assert cli.main(["duration", "--config", cfg, "--csv", str(out)]) == 0
    names = [r["name"] for r in _rows(out)]
    assert names[:4] == ["K_1", "K_2", "K_3", "K_4"]
    assert {"duration", "zcb_duration", "prop1_flag"} <= set(names)
    assert cli.main(["barriers", "--config", cfg, "--csv", str(out)]) == 0
    assert [r["name"] for r in _rows(out)] == ["K_1", "K_2", "K_3", "K_4"]


def test_mc_check_ratio(tmp_path):
    out = tmp_path / "mc.csv"
    rc = cli.main(["mc-check", "--config", str(CONFIGS / "one_factor_benchmark.json"), "--csv", str(out),
                   "--paths", "200000", "--seed", "3"])
    assert rc == 0
    vals = {r["name"]: float(r["value"]) for r in _rows(out)}
    assert vals["mc_n_paths"] == 200000 and vals["mc_seed"] == 3
    assert vals["mc_bond_ratio"] < 3.0 and vals["mc_equity_ratio"] < 3.0


def test_tax_flag(tmp_path):
    out = tmp_path / "t.csv"
    rc = cli.main(["price", "--config", str(CONFIGS / "one_factor_benchmark.json"), "--tax", "0.3",
                   "--csv", str(out)])
    assert rc == 0
    vals = {r["name"]: float(r["value"]) for r in _rows(out)}
    assert vals["B_0_taxed"] < vals["B_0"]


def test_missing_field_exit_2(tmp_path, capsys):
    cfg = _load("one_factor_benchmark.json")
    del cfg["market"]["s_V"]
    assert cli.main(["price", "--config", _write(tmp_path, cfg)]) == 2
    assert "market.s_V" in capsys.readouterr().err


@pytest.mark.parametrize("mutate,field", [
    (lambda c: c.pop("model"), "model"),
    (lambda c: c.update(model="three_factor"), "model"),
    (lambda c: c["bond"].update(delta=2.0), "bond"),
    (lambda c: c["bond"].update(coupons="3"), "bond.coupons"),
    (lambda c: c["valuation"].pop("V0"), "valuation.V0"),
    (lambda c: c.update(outputs=["price_everything"]), "outputs"),
])
def test_bad_fields_exit_2(tmp_path, capsys, mutate, field):
    cfg = _load("one_factor_benchmark.json")
    mutate(cfg)
    assert cli.main(["price", "--config", _write(tmp_path, cfg)]) == 2
    assert field in capsys.readouterr().err


def test_two_factor_needs_r0(tmp_path, capsys):
    cfg = _load("two_factor_benchmark.json")
    del cfg["valuation"]["r0"]
    assert cli.main(["price", "--config", _write(tmp_path, cfg)]) == 2
    assert "valuation.r0" in capsys.readouterr().err


def test_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["price", "--config", str(bad)]) == 2
    assert cli.main(["price", "--config", str(tmp_path / "absent.json")]) == 2


def test_case_two_exit_4(tmp_path, capsys):
    cfg = _load("one_factor_benchmark.json")
    cfg["bond"]["delta"] = 1.0
    assert cli.main(["price", "--config", _write(tmp_path, cfg), "--tax", "0.1"]) == 4
    assert "delta <= 1 / (1 + C_N / F)" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("could not bracket the root")

    monkeypatch.setattr(cli.of, "solve_barriers", boom)
    assert cli.main(["barriers", "--config", str(CONFIGS / "one_factor_benchmark.json")]) == 3


def test_run_uses_outputs_list(tmp_path):
    cfg = _load("one_factor_benchmark.json")
    cfg["outputs"] = ["bond"]
    out = tmp_path / "o.csv"
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--csv", str(out)]) == 0
    assert [r["name"] for r in _rows(out)] == ["B_0"]


def test_breakdown_skipped_after_time_zero(tmp_path):
    cfg = _load("one_factor_benchmark.json")
    cfg["valuation"]["t"] = 0.75
    out = tmp_path / "late.csv"
    assert cli.main(["run", "--all", "--config", _write(tmp_path, cfg), "--csv", str(out)]) == 0
    names = {r["name"] for r in _rows(out)}
    assert {"E_0", "B_0"} <= names and "duration" not in names and "survival_pv" not in names
