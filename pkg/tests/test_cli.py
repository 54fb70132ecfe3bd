import shutil
from pathlib import Path

import numpy as np
import pytest

from hybridreach.cli import load_config, main
from hybridreach.dp import load_values
from hybridreach.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def parse_report(text):
    rows = {}
    for line in text.splitlines():
        key, _, value = line.partition(" = ")
        rows[key] = value
    return rows


@pytest.fixture
def toy(tmp_path):
    cfg = tmp_path / "toy.ini"
    shutil.copy(CONFIGS / "toy.ini", cfg)
    return cfg


def run(cfg, *args):
    return main([args[0], str(cfg), "--dx", "0.05", "--out", str(cfg.parent / "out"), *args[1:]])


def test_solve_writes_field_and_report(toy, capsys):
    assert run(toy, "solve") == 0
    out = toy.parent / "out"
    rows = parse_report((out / "solve_report.txt").read_text())
    assert rows["first_empty_stage"] == "18"
    assert rows["grid_dims"] == "26x2x5x29x29"
    assert load_values(out / "value_field.bin").shape == (26, 2, 5, 29, 29)
    assert "first_empty_stage = 18" in capsys.readouterr().out


def test_autonomy_report(toy):
    assert run(toy, "autonomy") == 0
    rows = parse_report((toy.parent / "out" / "range_report.txt").read_text())
    assert rows["autonomy_stage"] == "18"
    assert float(rows["analytic_autonomy_s"]) == pytest.approx(6.590909, abs=1e-6)
    assert float(rows["autonomy_time_s"]) == pytest.approx(7.2)
    assert float(rows["relative_range_increase_pct"]) > 0


def test_engine_disabled_gives_no_range_gain(tmp_path):
    cfg = tmp_path / "ev.ini"
    shutil.copy(CONFIGS / "ev_only.ini", cfg)
    assert main(["autonomy", str(cfg), "--dx", "0.05", "--out", str(tmp_path / "out")]) == 0
    rows = parse_report((tmp_path / "out" / "range_report.txt").read_text())
    assert float(rows["relative_range_increase_pct"]) == 0.0
    assert rows["autonomy_stage"] == rows["ev_stage"]


def test_parametric_config(tmp_path):
    for name in ("parametric.ini", "route.csv", "route_demand.csv"):
        shutil.copy(CONFIGS / name, tmp_path / name)
    assert main(["autonomy", str(tmp_path / "parametric.ini"), "--out", str(tmp_path / "out")]) == 0
    rows = parse_report((tmp_path / "out" / "range_report.txt").read_text())
    for key in ("max_range_km", "ev_range_km", "relative_range_increase_pct", "fuel_used_l", "re_cost_eur_per_100km"):
        assert key in rows
    assert "analytic_autonomy_s" not in rows


def test_synth_csv_is_deterministic(toy, capsys):
    assert run(toy, "synth") == 0
    first = (toy.parent / "out" / "trajectory.csv").read_text()
    assert "admissible = yes" in capsys.readouterr().out
    assert run(toy, "synth") == 0
    assert (toy.parent / "out" / "trajectory.csv").read_text() == first
    assert first.splitlines()[0] == "stage,time_s,soc,fuel,q,p,u,switched"


def test_unreachable_target_exit_code(toy, capsys):
    assert run(toy, "synth", "--target", "10,1.1,1.1,0,0") == 3
    assert "error" in capsys.readouterr().err


def test_missing_profile_names_the_path(toy, capsys):
    assert run(toy, "solve", "--profile", str(toy.parent / "nowhere.csv")) == 2
    assert "nowhere.csv" in capsys.readouterr().err


def test_grid_step_larger_than_domain(toy, capsys):
    assert main(["solve", str(toy), "--dx", "5.0"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_override(toy):
    assert main(["solve", str(toy), "--set", "nonsense"]) == 2
    with pytest.raises(ConfigurationError):
        load_config(toy, ["model.kind=diesel"])


def test_converge_single_step(toy, capsys):
    assert run(toy, "converge", "--dx-list", "0.05") == 0
    lines = (toy.parent / "out" / "convergence.csv").read_text().splitlines()
    assert lines[0] == "dx,first_empty_stage,autonomy_s,analytic_s,epsilon_s,wall_time_s"
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[1] == "18" and float(fields[4]) == pytest.approx(0.609091, abs=1e-6)


def test_export_from_saved_field(toy):
    assert run(toy, "solve") == 0
    out = toy.parent / "out"
    assert run(toy, "export", "--field", str(out / "value_field.bin")) == 0
    assert len(list(out.glob("reachable_*.csv"))) == 26
    lines = (out / "min_time.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,T" and len(lines) == 1 + 29 * 29
    first = (out / "reachable_000.csv").read_text()
    assert run(toy, "export") == 0
    assert (out / "reachable_000.csv").read_text() == first


def test_export_rejects_mismatched_field(toy, tmp_path):
    assert run(toy, "solve") == 0
    saved = toy.parent / "out" / "value_field.bin"
    assert main(["export", str(toy), "--dx", "0.04", "--field", str(saved), "--out", str(tmp_path / "o2")]) == 2


def test_threads_flag(toy):
    assert run(toy, "solve", "--threads", "0") == 2
    assert run(toy, "solve", "--threads", "2") == 0
    assert np.isfinite(load_values(toy.parent / "out" / "value_field.bin")).all()
