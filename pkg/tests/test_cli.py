import json

import pytest

from aerodelta.cli import _parse_seeds, main


def test_parse_seeds():
    assert _parse_seeds("0..3") == [0, 1, 2, 3]
    assert _parse_seeds("7..7") == [7]
    assert _parse_seeds("1,5,9") == [1, 5, 9]
    assert _parse_seeds("4") == [4]
    with pytest.raises(ValueError):
        _parse_seeds("5..2")
    with pytest.raises(ValueError):
        _parse_seeds("a,b")


def test_run_success(tmp_path, capsys):
    code = main(["run", "--scenario", "example1", "--seed", "0",
                 "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "example1 preset seed=0" in out
    assert "viol=0" in out
    assert (tmp_path / "out" / "report.json").is_file()
    assert (tmp_path / "out" / "example1__preset__seed0.csv").is_file()


def test_run_unknown_scenario(tmp_path, capsys):
    code = main(["run", "--scenario", "no_such_case",
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_run_invalid_config(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "start_p_e: [0.0, 0.0, -2.0]\n"
        "target_p_o: [0.5, 0.0, -1.8]\n"
        "rho0: [1.0, 1.0, 1.0]\n"
        "t_p: 4.0\n"
        "method: pid\n"
    )
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "method" in capsys.readouterr().err


def test_run_envelope_violation_exits_one(tmp_path, capsys):
    """A hand-picked preset rate too slow for the envelope: the preset
    path itself leaves the shrinking funnel mid-run, which the run
    command must flag via exit code 1."""
    slow = tmp_path / "slow.yaml"
    slow.write_text(
        "name: slow_preset\n"
        "start_p_e: [0.0, 0.0, -2.1]\n"
        "target_p_o: [1.0, -1.0, -1.5]\n"
        "rho0: [2.0, 2.0, 1.2]\n"
        "t_p: 5.0\n"
        "duration: 12.0\n"
        "c: 0.25\n"
        "plant:\n"
        "  tau_base: 0.05\n"
        "  tau_arm: 0.02\n"
    )
    code = main(["run", "--scenario", str(slow), "--seed", "0",
                 "--out", str(tmp_path / "out")])
    assert code == 1
    out = capsys.readouterr().out
    assert "viol=0" not in out


def test_clik_violations_do_not_fail_run(tmp_path, capsys):
    # the baseline has no envelope guarantee; its violations are
    # reported but are not an invariant failure
    code = main(["run", "--scenario", "example1", "--seed", "0",
                 "--method", "clik", "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "example1 clik seed=0" in out


def test_run_multi_seed_and_report(tmp_path, capsys):
    out_dir = tmp_path / "multi"
    code = main(["run", "--scenario", "example1", "--seeds", "0..2",
                 "--jobs", "2", "--out", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert [r["seed"] for r in report["runs"]] == [0, 1, 2]
    capsys.readouterr()

    code = main(["report", str(out_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("seed=") == 3
    assert "row_viol=0" in out


def test_report_missing_dir(tmp_path, capsys):
    code = main(["report", str(tmp_path / "nothing_here")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_sweep_command(tmp_path, capsys):
    quick = tmp_path / "quick.yaml"
    quick.write_text(
        "name: quick\n"
        "start_p_e: [0.0, 0.0, -2.0]\n"
        "target_p_o: [0.3, -0.2, -1.8]\n"
        "rho0: [1.0, 1.0, 1.0]\n"
        "t_p: 1.0\n"
        "duration: 7.0\n"
        "plant:\n"
        "  tau_base: 0.05\n"
        "  tau_arm: 0.02\n"
    )
    code = main(["sweep", "--scenario", str(quick), "--tp", "1,2",
                 "--seeds", "0", "--out", str(tmp_path / "sw")])
    assert code == 0
    out = capsys.readouterr().out
    assert "t_p=1s" in out and "t_p=2s" in out
    data = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert set(data.keys()) == {"1.0", "2.0"}


def test_run_tp_override_stretches_duration(tmp_path, capsys):
    code = main(["run", "--scenario", "example1", "--seed", "0", "--tp", "6",
                 "--out", str(tmp_path / "out")])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["scenario"]["t_p"] == 6.0
    assert report["scenario"]["duration"] == 14.0  # stretched past 12
    assert report["runs"][0]["terminal_window_complete"]
