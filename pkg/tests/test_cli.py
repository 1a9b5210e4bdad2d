import numpy as np

from anosovlab.cli import main, load_config, ConfigError

import pytest

BASE_CFG = """\
[run]
subcommand = compute-section

[family]
kind = trig-perturbed
matrix = 2,1,1,1
epsilon = 0.05
modes = 1,0,0,1

[section]
grid = 32
tol = 1e-9
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_config_rejects_unknown_key(tmp_path):
    bad = BASE_CFG + "\nwhatever = 1\n"
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(_write(tmp_path, bad))


def test_load_config_rejects_unknown_section(tmp_path):
    bad = BASE_CFG + "\n[mystery]\nx = 1\n"
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(_write(tmp_path, bad))


def test_missing_subcommand_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, "[family]\nkind = linear\n")
    rc = main(["--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_compute_section_run(tmp_path):
    cfg = _write(tmp_path, BASE_CFG)
    out = tmp_path / "out"
    rc = main(["--config", cfg, "--out", str(out), "--seed", "1"])
    assert rc == 0
    report = (out / "report.txt").read_text()
    for symbol in ("λ̂", "κ̂", "Δ̂"):
        assert symbol in report
    assert (out / "section.csv").read_text().startswith("# schema=section_deriv")


def test_check_cones_run(tmp_path):
    cfg = _write(tmp_path, BASE_CFG.replace("compute-section", "check-cones"))
    out = tmp_path / "cones"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    lines = (out / "cone_report.csv").read_text().splitlines()
    assert lines[0].startswith("# schema=cone_report")
    assert lines[-1].endswith(",1")  # passes


def test_numerical_failure_exits_3(tmp_path, capsys):
    # band too small for the perturbation: fiber invariance fails
    cfg_text = BASE_CFG + "band-radius = 0.02\n"
    cfg = _write(tmp_path, cfg_text)
    out = tmp_path / "fail"
    rc = main(["--config", cfg, "--out", str(out)])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err
    assert "FAILED" in (out / "report.txt").read_text()


def test_sturmian_and_dimension_runs(tmp_path):
    stur = BASE_CFG.replace("compute-section", "sturmian") + (
        "\n[sturmian]\nlambda = 0\ncf = 1,1,1,1,1,1,1,1\n"
        "initial-grid = 64\nrefine-depth = 4\nmax-iters = 1000\n")
    cfg = _write(tmp_path, stur, "stur.cfg")
    out = tmp_path / "stur"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "spectrum.csv").exists()

    dim = stur.replace("subcommand = sturmian", "subcommand = dimension") + (
        "\n[dimension]\nscales = 0.25,0.125,0.0625,0.03125,0.015625\n")
    cfg2 = _write(tmp_path, dim, "dim.cfg")
    out2 = tmp_path / "dim"
    assert main(["--config", cfg2, "--out", str(out2)]) == 0
    assert (out2 / "dimension.csv").exists()


def test_seed_changes_nothing_structural_but_is_recorded(tmp_path):
    reg = BASE_CFG.replace("compute-section", "estimate-regularity")
    cfg = _write(tmp_path, reg)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["--config", cfg, "--out", str(out_a), "--seed", "5"]) == 0
    assert main(["--config", cfg, "--out", str(out_b), "--seed", "5"]) == 0
    assert (out_a / "holder.csv").read_bytes() == (out_b / "holder.csv").read_bytes()


def test_thread_count_does_not_change_output(tmp_path):
    cfg = _write(tmp_path, BASE_CFG)
    out1 = tmp_path / "t1"
    out8 = tmp_path / "t8"
    assert main(["--config", cfg, "--out", str(out1), "--seed", "2", "--threads", "1"]) == 0
    assert main(["--config", cfg, "--out", str(out8), "--seed", "2", "--threads", "8"]) == 0
    assert (out1 / "section.csv").read_bytes() == (out8 / "section.csv").read_bytes()
