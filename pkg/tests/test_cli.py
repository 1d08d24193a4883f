import json

import pytest

from betaconst import cli
from betaconst.inference import run_test
from betaconst.io import read_csv


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    for d in (a, b):
        code, out, _ = run(["simulate", "--days", 5, "--seed", 7, "--out", d], capsys)
        assert code == 0 and "seed 7" in out and '"days": 5' in out
    assert (a / "simulated.csv").read_bytes() == (b / "simulated.csv").read_bytes()
    t = read_csv(a / "simulated.csv")
    assert t.days == 5 and t.meta["seed"] == "7"


def test_random_seed_is_recorded(tmp_path, capsys):
    code, out, _ = run(["simulate", "--days", 1, "--out", tmp_path], capsys)
    assert code == 0
    seed = int(out.split("\nseed ")[1].split()[0])
    assert read_csv(tmp_path / "simulated.csv").meta["seed"] == str(seed)


def test_missing_out_dir(tmp_path, capsys):
    code, _, err = run(["simulate", "--seed", 1, "--out", tmp_path / "nope"], capsys)
    assert code == 2 and "does not exist" in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sim": {"dayz": 3}}))
    code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2 and "dayz" in err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "sim": {"days": 2, "steps_per_day": 10}}))
    code, out, _ = run(["simulate", "--config", cfg, "--days", 4, "--out", tmp_path], capsys)
    assert code == 0 and "seed 3" in out
    t = read_csv(tmp_path / "simulated.csv")
    assert t.days == 4 and t.n_per_day == 10


def test_bad_config_value(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"test": {"k_n": 1}}))
    run(["simulate", "--seed", 1, "--out", tmp_path], capsys)
    code, _, err = run(["test", tmp_path / "simulated.csv", "--config", cfg], capsys)
    assert code == 2 and "k_n" in err


@pytest.mark.parametrize("sub", ["simulate", "test", "mc", "window"])
def test_help_lists_flags(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([sub, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--seed", "--threads", "--out"):
        assert flag in out
    assert "default" in out


def test_test_and_window_commands(tmp_path, capsys):
    run(["simulate", "--days", 10, "--seed", 2, "--out", tmp_path], capsys)
    data = tmp_path / "simulated.csv"
    code, out, _ = run(["test", data], capsys)
    assert code == 0 and "statistic" in out and "valid           True" in out
    assert not (tmp_path / "windows.csv").exists()
    code, out, _ = run(["window", data, "--out", tmp_path], capsys)
    assert code == 0
    lines = (tmp_path / "windows.csv").read_text().splitlines()
    assert len(lines) == 3
    assert (tmp_path / "summary.csv").exists() and (tmp_path / "betas.csv").exists()


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,seq,px,py\n2020-01-01,0,1,-1\n")
    code, _, err = run(["test", bad], capsys)
    assert code == 2 and "positive" in err


def test_mc_command(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BETACONST_THREADS", "2")
    argv = ["mc", "--replications", 100, "--windows", "2", "--seed", 5, "--out", tmp_path]
    code, out, _ = run(argv, capsys)
    assert code == 0 and "Constant Beta" in out and "Time-Varying Beta" in out
    first = (tmp_path / "mc.csv").read_text()
    assert first.startswith("# seed=5\nhypothesis,")
    assert len(first.splitlines()) == 2 + 6
    run(argv + ["--threads", 1], capsys)
    assert (tmp_path / "mc.csv").read_text() == first


def test_cir_beta_spot_check(tmp_path, capsys):
    rejections = {"constant": 0, "cir": 0}
    for seed in range(50):
        for kind in rejections:
            run(["simulate", "--days", 22, "--beta", kind, "--seed", seed, "--out", tmp_path], capsys)
            o = run_test(read_csv(tmp_path / "simulated.csv").to_grid())
            rejections[kind] += o.decisions[0.05]
    assert rejections["cir"] > rejections["constant"]
