import json

import pytest

from mkdvlab.cli import run


def run_json(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def test_criterion_two_solitons(capsys):
    code, summary, _ = run_json(
        ["criterion", "--speeds", "1,2", "--time", "0", "--grid-length", "60", "--grid-count", "768"],
        capsys,
    )
    assert code == 0
    assert summary["n"] == 1 and summary["p"] == 1 and summary["equal"] is True


def test_conserved_table(capsys, tmp_path):
    code, summary, _ = run_json(
        ["conserved", "--speeds", "1", "--orders", "1..5", "--output", str(tmp_path)], capsys
    )
    assert code == 0
    assert summary["max_relative_error"] < 1e-7
    lines = (tmp_path / "conserved.csv").read_text().splitlines()
    assert lines[0] == "# mkdv-soliton-lab v0.1.0"
    assert lines[1].startswith("# grid_length=")
    assert lines[2] == "n,value,closed_form,relative_error"
    assert len(lines) == 8


def test_bad_speed_order_exits_1(capsys):
    code, _, err = run_json(["criterion", "--speeds", "2,1"], capsys)
    assert code == 1
    assert "increasing" in err


def test_unknown_flag_exits_1(capsys):
    code, _, err = run_json(["hessian", "--no-such-flag"], capsys)
    assert code == 1


def test_domain_error_exits_1(capsys):
    code, _, err = run_json(["soliton", "--speeds", "0.1", "--grid-length", "10", "--grid-count", "64"], capsys)
    assert code == 1
    assert "soliton_factory" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("speeds = 1,2\ngrid-count = 1024\n")
    code, summary, _ = run_json(["hessian", "--config", str(cfg)], capsys)
    assert code == 0 and summary["p"] == 1 and len(summary["D"]) == 2
    code, summary, _ = run_json(["hessian", "--config", str(cfg), "--speeds", "1,2,3"], capsys)
    assert code == 0 and summary["p"] == 2


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run_json(["hessian", "--config", str(cfg)], capsys)
    assert code == 1 and "colour" in err


def test_thread_variable_validated(capsys, monkeypatch):
    monkeypatch.setenv("MKDVLAB_THREADS", "zero")
    code, _, err = run_json(
        ["factorization", "--speeds", "1,2", "--grid-length", "60", "--grid-count", "768"], capsys
    )
    assert code == 1 and "MKDVLAB_THREADS" in err


def test_factorization_with_threads(capsys, monkeypatch):
    monkeypatch.setenv("MKDVLAB_THREADS", "2")
    code, summary, _ = run_json(
        ["factorization", "--speeds", "1,2", "--grid-length", "60", "--grid-count", "768"], capsys
    )
    assert code == 0 and summary["max_residual"] < 1e-6


def test_csv_is_deterministic(capsys, tmp_path):
    argv = ["spectrum", "--speeds", "1", "--grid-length", "60", "--grid-count", "512", "--count", "5"]
    for name in ("a", "b"):
        assert run(argv + ["--output", str(tmp_path / name), "--seed", "3"]) == 0
    capsys.readouterr()
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    b = (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert a == b


def test_evolve_command(capsys, tmp_path):
    code, summary, _ = run_json(
        ["evolve", "--speeds", "1", "--grid-count", "1024", "--dt", "1e-3", "--horizon", "1",
         "--output", str(tmp_path)],
        capsys,
    )
    assert code == 0 and summary["final_l2_error"] < 1e-6
    assert (tmp_path / "evolve.csv").exists() and (tmp_path / "evolve.json").exists()


def test_inertia_scan_command(capsys):
    code, summary, _ = run_json(
        ["inertia-scan", "--speeds", "1,2", "--times=-4,0,4", "--grid-length", "60",
         "--grid-count", "768"],
        capsys,
    )
    assert code == 0
    assert summary["inertia"] == [[1, 2]] * 3 and summary["sum"] == [1, 2]
    assert summary["constant"] and summary["sum_rule"]


@pytest.mark.parametrize("command", ["soliton", "residual", "hessian"])
def test_other_commands_run(command, capsys):
    code, summary, _ = run_json([command, "--speeds", "1,2", "--grid-length", "100", "--grid-count", "2048"], capsys)
    assert code == 0 and summary["command"] == command
