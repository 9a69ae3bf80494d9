import json

import numpy as np
import pytest

from ctxgst import cli
from ctxgst import experiments as ex

SMALL = dict(depths=(1, 2), repetitions=3, n_samples=2000)


def test_config_validation():
    for bad in ({"repetitions": 0}, {"depths": ()}, {"scheme": "random"}, {"mode": "sometimes"},
                {"scheme": "log-spaced", "depths": (3,)}, {"cost": "L1"}, {"gate_time": -1.0},
                {"nm_steps_per_gate": 50}):
        with pytest.raises(ex.ConfigError):
            ex.ExperimentConfig(**bad)


def test_config_json_roundtrip_and_digest():
    c = ex.preset("thermal", seed=7)
    back = ex.ExperimentConfig.from_json(c.to_json())
    assert back == c and back.digest() == c.digest()
    assert ex.ExperimentConfig(seed=8).digest() != ex.ExperimentConfig(seed=7).digest()
    with pytest.raises(ex.ConfigError, match="unknown"):
        ex.ExperimentConfig.from_json(json.dumps({"sed": 1}))
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_json("[1, 2]")
    with pytest.raises(ex.ConfigError):
        ex.preset("nope")


def test_rep_seeds_are_distinct():
    seeds = {ex.rep_seed(0, p, r) for p in range(10) for r in range(100)}
    assert len(seeds) == 1000
    assert ex.rep_seed(0, 1, 2) == ex.rep_seed(0, 1, 2)


def test_scan_depth_is_deterministic_and_order_independent():
    c = ex.ExperimentConfig(**SMALL)
    a = ex.cmd_scan_depth(c)
    b = ex.cmd_scan_depth(c)
    assert a == b
    flipped = ex.cmd_scan_depth(ex.ExperimentConfig(**{**SMALL, "depths": (2, 1)}))
    assert {r["depth"]: r["mean_distance"] for r in flipped} == {r["depth"]: r["mean_distance"] for r in a}
    for r in a:
        assert r["ci_low"] <= r["mean_distance"] <= r["ci_high"]
        assert r["n_ok"] + r["n_failed"] == 3 and r["n_circuits"] == 12


def test_param_scaling_rows():
    rows = ex.cmd_param_scaling(ex.preset("thermal", depths=(2, 40), repetitions=3))
    assert [r["p"] for r in rows] == [2, 40]
    assert rows[1]["closure"] and not rows[0]["closure"]
    assert rows[1]["err_gamma_th"] > rows[0]["err_gamma_th"]
    assert rows[0]["fi_rank"] == 17


def test_context_compare_rows():
    rows = ex.cmd_context_compare(ex.preset("context", depths=(1,), repetitions=2))
    r = rows[0]
    assert r["distance_dep"] == pytest.approx(r["distance_indep"], rel=1e-6)


def test_pure_curves():
    c = ex.ExperimentConfig(depths=(12,))
    amp = ex.cmd_amplification(c)
    assert len(amp) == 2 * 12 and amp[0]["amplification"] == pytest.approx(1.0)
    traj = ex.cmd_trajectory(c)
    assert traj[0]["p"] == 1 and len(traj) == 24
    nmr = ex.cmd_nonmarkov(ex.preset("nonmarkov", depths=(4,), nm_steps_per_gate=400))
    assert np.all(np.diff([r["n_cp"] for r in nmr]) >= 0)
    fis = ex.cmd_fisher(ex.ExperimentConfig(depths=(1, 4)))
    assert fis[1]["fi_gamma_d"] < fis[0]["fi_gamma_d"]


def test_failure_policy():
    ex._check_failures(4, 100, "x")
    with pytest.raises(ex.NumericalFailure):
        ex._check_failures(5, 100, "x")


def test_csv_header(tmp_path):
    c = ex.ExperimentConfig(depths=(3,))
    path = tmp_path / "a.csv"
    ex.write_csv(ex.cmd_amplification(c), c, "amplification", path)
    meta, rows = ex.read_csv(path)
    assert meta == {"schema_version": "1", "command": "amplification", "config_hash": c.digest(), "seed": "0"}
    assert len(rows) == 6 and float(rows[0]["p"]) == 1


def test_cli_pure_command(tmp_path, capsys):
    out = tmp_path / "amp.csv"
    assert cli.run(["amplification", "--out", str(out)]) == 0
    assert out.exists() and str(out) in capsys.readouterr().out


def test_cli_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"depths": [2], "repetitions": 2, "n_samples": 1000, "out_dir": str(tmp_path)}))
    assert cli.run(["scan-depth", "--config", str(cfg), "--seed", "3"]) == 0
    c = ex.replace(ex.ExperimentConfig.load(cfg), seed=3)
    meta, rows = ex.read_csv(tmp_path / f"scan-depth-{c.digest()}.csv")
    assert meta["seed"] == "3" and rows[0]["depth"] == "2"


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"repetitions": 0}')
    assert cli.run(["amplification", "--config", str(bad)]) == 2
    assert cli.run(["amplification", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.run(["amplification", "--config", str(bad), "--preset", "thermal"]) == 2
    assert cli.run(["fit", "--data", str(tmp_path / "missing.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_numerical_failure(monkeypatch):
    def boom(config):
        raise ex.NumericalFailure("too many failed fits")

    monkeypatch.setitem(ex.COMMANDS, "fisher", boom)
    assert cli.run(["fisher"]) == 3


def test_cli_sample_then_fit(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"depths": [4], "n_samples": 5000}))
    data, result = tmp_path / "d.json", tmp_path / "fit.json"
    assert cli.run(["sample", "--config", str(cfg), "--out", str(data)]) == 0
    assert cli.run(["fit", "--config", str(cfg), "--data", str(data), "--out", str(result)]) == 0
    obj = json.loads(result.read_text())
    assert obj["success"] and len(obj["theta_hat"]) == 17


def test_parallel_matches_serial():
    c = ex.ExperimentConfig(depths=(2,), repetitions=2, n_samples=1000)
    assert ex.cmd_scan_depth(c) == ex.cmd_scan_depth(ex.replace(c, threads=2))
