import csv
import io

import pytest

from layerreg import cli
from layerreg.experiments import DEFAULT_H, EXTENDED_H


def parse(argv):
    return cli.spec_from_args(cli.build_parser().parse_args(argv))


def test_parse_helpers():
    assert cli.parse_number("5/7") == pytest.approx(5 / 7)
    assert cli.parse_number(" 0.25 ") == 0.25
    assert cli.parse_h_list("1/16, 1/32;1/64") == (1 / 16, 1 / 32, 1 / 64)


def test_defaults_per_experiment():
    s = parse(["sphere-sl"])
    assert (s.cfg.p, s.cfg.q, s.cfg.kappa0) == (7, 1.0, 4.0) and s.h_list == DEFAULT_H
    g = parse(["grid-harmonic"])
    assert g.cfg.delta(1 / 64) == pytest.approx((1 / 64) ** (5 / 7))
    m = parse(["molecular", "--extended"])
    assert m.h_list == EXTENDED_H


def test_flags_override_config(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# demo\norder = 5\nq = 4/5\nkappa0=3\nh-list = 1/8,1/16\nrate = 40\n")
    s = parse(["molecular", "--config", str(conf), "--kappa0", "2.5", "--set", "eps=0.1"])
    assert s.cfg.p == 5 and s.cfg.q == pytest.approx(0.8) and s.cfg.kappa0 == 2.5
    assert s.h_list == (1 / 8, 1 / 16)
    assert s.options == {"rate": "40", "eps": "0.1"}
    e = parse(["molecular", "--config", str(conf), "--extended"])
    assert e.h_list == (1 / 8, 1 / 16, 1 / 32)


def test_bad_config_returns_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n")
    assert cli.main(["sphere-sl", "--config", str(bad)]) == 2
    assert "expected key=value" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["sphere-sl", "--order", "4"])


def test_fast_run_writes_table(tmp_path, capsys):
    rc = cli.main(["sphere-sl", "--h-list", "1/8,1/16", "--set", "probability=0.05",
                   "--out", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][0] == "experiment" and len(rows) == 3
    assert float(rows[2][9]) > 5.0
    assert (tmp_path / "sphere-sl_convergence.csv").exists()
    assert (tmp_path / "sphere-sl_h8.csv").exists()
