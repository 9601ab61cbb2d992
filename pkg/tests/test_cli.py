import json

import numpy as np
import pytest

import csbm
from csbm import ClusterParams, SimSpec, SplineBasis
from csbm.cli import main
from csbm.generator import save_spec

from .conftest import SAMPLE_CSV


@pytest.fixture
def sim_spec_path(tmp_path):
    basis = SplineBasis.uniform()
    players = tuple(f"P{i:02d}" for i in range(8))
    params = ClusterParams(
        k=2, pi=np.array([0.5, 0.5]),
        p_init=np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]]), basis=basis,
        lam_coeffs=np.full((2, 8), np.log(0.5)),
        trans=np.array([[0.15, 0.45, 0.12, 0.10, 0.06, 0.04, 0.04, 0.04],
                        [0.50, 0.10, 0.10, 0.10, 0.06, 0.05, 0.05, 0.04]]))
    spec = SimSpec(params=params, players=players,
                   labels=np.array([0, 0, 0, 0, 1, 1, 1, 1]),
                   lineups=(players[:3] + players[4:6],
                            players[1:4] + players[6:8]),
                   initial_mix=np.array([0.5, 0.35, 0.15]), n_plays=100)
    path = tmp_path / "spec.json"
    save_spec(spec, path)
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_simulate_and_fit_pipeline(tmp_path, sim_spec_path):
    log = tmp_path / "log.csv"
    truth = tmp_path / "truth.json"
    assert main(["simulate", "--spec", sim_spec_path, "--seed", "9",
                 "--out", str(log), "--truth-out", str(truth)]) == 0
    out = tmp_path / "fit"
    assert main(["fit", "--input", str(log), "--k", "2", "--seed", "4",
                 "--restarts", "2", "--out-dir", str(out),
                 "--truth", str(truth)]) == 0
    for name in ("fit.json", "labels.csv", "initial_probs.csv",
                 "transitions.csv", "rates.csv", "report.txt"):
        assert (out / name).exists()
    doc = json.loads(read(out / "fit.json"))
    assert doc["format"] == "csbm-fit/1"
    assert doc["version"] == csbm.__version__
    assert doc["config"]["seed"] == 4
    assert doc["ari_vs_truth"] == pytest.approx(1.0)
    labels = read(out / "labels.csv").decode().strip().splitlines()
    assert labels[0] == "player,cluster"
    assert len(labels) == 9
    report = read(out / "report.txt").decode()
    assert "adjusted Rand index" in report


def test_fit_deterministic_outputs(tmp_path, sim_spec_path):
    log = tmp_path / "log.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "2",
          "--out", str(log)])
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["fit", "--input", str(log), "--k", "2", "--seed", "11",
                     "--restarts", "2", "--out-dir", str(out)]) == 0
    for name in ("fit.json", "labels.csv", "initial_probs.csv",
                 "transitions.csv", "rates.csv", "report.txt"):
        assert read(out1 / name) == read(out2 / name)


def test_simulate_zero_plays_header_only(tmp_path, sim_spec_path):
    log = tmp_path / "log.csv"
    assert main(["simulate", "--spec", sim_spec_path, "--seed", "1",
                 "--out", str(log), "--n-plays", "0"]) == 0
    assert read(log).decode() == "game_id,play_id,from,to,time,oncourt\n"


def test_simulate_deterministic(tmp_path, sim_spec_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "3", "--out",
          str(a)])
    main(["simulate", "--spec", sim_spec_path, "--seed", "3", "--out",
          str(b)])
    assert read(a) == read(b)


def test_simulated_log_fits_cleanly(tmp_path, sim_spec_path):
    log = tmp_path / "log.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "6", "--out",
          str(log), "--n-plays", "60"])
    out = tmp_path / "fit"
    assert main(["fit", "--input", str(log), "--k", "2", "--seed", "1",
                 "--restarts", "1", "--out-dir", str(out)]) == 0


def test_bands_command(tmp_path, sim_spec_path):
    log = tmp_path / "log.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "8", "--out",
          str(log)])
    out = tmp_path / "fit"
    main(["fit", "--input", str(log), "--k", "2", "--seed", "1",
          "--restarts", "1", "--out-dir", str(out)])
    bands = tmp_path / "bands.csv"
    assert main(["bands", "--fit", str(out / "fit.json"), "--input",
                 str(log), "--out", str(bands), "--grid-step", "0.5"]) == 0
    lines = read(bands).decode().strip().splitlines()
    assert lines[0] == "cluster,t,rate,se_lower,se_upper"
    assert len(lines) == 1 + 2 * 49  # two clusters, 49 grid points


def test_report_command(tmp_path, sim_spec_path, capsys):
    log = tmp_path / "log.csv"
    truth = tmp_path / "truth.json"
    main(["simulate", "--spec", sim_spec_path, "--seed", "8", "--out",
          str(log), "--truth-out", str(truth)])
    out = tmp_path / "fit"
    main(["fit", "--input", str(log), "--k", "2", "--seed", "1",
          "--restarts", "1", "--out-dir", str(out)])
    capsys.readouterr()
    assert main(["report", "--fit", str(out / "fit.json"), "--truth",
                 str(truth)]) == 0
    text = capsys.readouterr().out
    assert "transition probabilities" in text
    assert "adjusted Rand index" in text


def test_fit_sample_file(tmp_path):
    path = tmp_path / "sample.csv"
    path.write_text(SAMPLE_CSV)
    out = tmp_path / "fit"
    assert main(["fit", "--input", str(path), "--k", "1", "--seed", "0",
                 "--restarts", "1", "--out-dir", str(out)]) == 0
    trans = read(out / "transitions.csv").decode().strip().splitlines()
    assert len(trans) == 2  # one cluster row
    row = np.array([float(x) for x in trans[1].split(",")[1:]])
    assert row.sum() == pytest.approx(1.0, abs=1e-8)


def test_exit_code_input_errors(tmp_path, capsys):
    assert main(["fit", "--input", str(tmp_path / "missing.csv"), "--k",
                 "2", "--seed", "0", "--out-dir", str(tmp_path)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("game_id,play_id,from,to,time,oncourt\n"
                   "g,p,INBOUND,A,99,A|B\n")
    assert main(["fit", "--input", str(bad), "--k", "2", "--seed", "0",
                 "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err
    # more clusters than players is an input error
    ok = tmp_path / "ok.csv"
    ok.write_text(SAMPLE_CSV)
    assert main(["fit", "--input", str(ok), "--k", "99", "--seed", "0",
                 "--out-dir", str(tmp_path)]) == 2


def test_exit_code_invalid_spec(tmp_path):
    bad = tmp_path / "spec.json"
    bad.write_text("{\"format\": \"csbm-truth/1\"}")
    assert main(["simulate", "--spec", str(bad), "--seed", "0", "--out",
                 str(tmp_path / "x.csv")]) == 2


def test_exit_code_infeasible(tmp_path, monkeypatch, sim_spec_path):
    from csbm.inference import FitInfeasibleError

    def boom(log, config):
        raise FitInfeasibleError("all restarts infeasible")

    monkeypatch.setattr("csbm.cli.fit_csbm", boom)
    log = tmp_path / "log.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "1", "--out",
          str(log)])
    assert main(["fit", "--input", str(log), "--k", "2", "--seed", "0",
                 "--out-dir", str(tmp_path)]) == 3


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert csbm.__version__ in capsys.readouterr().out


def test_threads_env_fallback(tmp_path, sim_spec_path, monkeypatch):
    monkeypatch.setenv("CSBM_THREADS", "2")
    log = tmp_path / "log.csv"
    main(["simulate", "--spec", sim_spec_path, "--seed", "2", "--out",
          str(log), "--n-plays", "40"])
    out = tmp_path / "fit"
    assert main(["fit", "--input", str(log), "--k", "2", "--seed", "1",
                 "--restarts", "2", "--out-dir", str(out)]) == 0
    doc = json.loads(read(out / "fit.json"))
    assert doc["config"]["threads"] == 2
