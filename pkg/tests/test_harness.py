import json

import pytest

from nodal_lab.cli import main as cli_main
from nodal_lab.harness import (
    ConfigError,
    emit_report,
    parse_config,
    run_config_file,
    run_experiment,
)

REZ3_FN = {"n": 2, "h1": [[3, "cos", 1.0]], "h2": []}


def freq_config(**over):
    payload = {
        "experiment": "frequency-scan",
        "family": {"functions": [REZ3_FN]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.8}},
        "params": {"r_lo": 0.05, "r_hi": 0.8, "r_count": 12},
        "output": {"format": "csv"},
    }
    payload.update(over)
    return payload


def test_config_round_trip():
    cfg = parse_config(freq_config())
    again = parse_config(cfg.to_dict())
    assert again == cfg
    assert again.config_hash == cfg.config_hash


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match="config.frobnicate"):
        parse_config(freq_config(frobnicate=1))
    with pytest.raises(ConfigError, match="config.params.bogus"):
        parse_config(freq_config(params={"bogus": 2}))
    with pytest.raises(ConfigError, match="config.region.ball.center"):
        parse_config(freq_config(region={"ball": {"radius": 0.5}}))


def test_random_family_requires_seed():
    payload = freq_config(family={"random": {"count": 2, "degree": 4}})
    with pytest.raises(ConfigError, match="config.seed"):
        parse_config(payload)
    payload["seed"] = 11
    cfg = parse_config(payload)
    rows = run_experiment(cfg)
    assert len(rows) == 2 * 12


def test_frequency_scan_values():
    rows = run_experiment(parse_config(freq_config()))
    assert len(rows) == 12
    for row in rows:
        assert abs(row.values["N"] - 3.0) < 1e-8
        assert row.config_hash
    # documented column schema
    assert list(rows[0].values) == ["function", "center_x", "center_y",
                                    "r", "D", "H", "N", "dlogN"]


def test_empty_family_empty_report(tmp_path):
    payload = freq_config(family={"functions": []})
    rows = run_experiment(parse_config(payload))
    assert rows == []
    paths = emit_report(rows, "csv", tmp_path / "report")
    text = paths[0].read_text()
    assert text.count("\n") == 1  # header only


def test_emit_json_carries_hash(tmp_path):
    cfg = parse_config(freq_config(params={"r_lo": 0.1, "r_hi": 0.5, "r_count": 5}))
    rows = run_experiment(cfg)
    paths = emit_report(rows, "json", tmp_path / "report")
    payload = json.loads(paths[0].read_text())
    assert len(payload) == 5
    assert all(item["config_hash"] == cfg.config_hash for item in payload)


def test_byte_identical_reruns(tmp_path):
    payload = freq_config(seed=3, family={"random": {"count": 2, "degree": 4}})
    cfg_path = tmp_path / "cfg.json"
    outputs = []
    for run in ("a", "b"):
        payload["output"] = {"dir": str(tmp_path / run), "format": "csv"}
        cfg_path.write_text(json.dumps(payload))
        outputs.append(run_config_file(cfg_path)[0].read_bytes())
    assert outputs[0] == outputs[1]


def test_worker_count_does_not_change_output(tmp_path, monkeypatch):
    payload = freq_config(seed=5, family={"random": {"count": 3, "degree": 4}})
    cfg_path = tmp_path / "cfg.json"

    def run_with_threads(n, tag):
        monkeypatch.setenv("NODAL_LAB_THREADS", str(n))
        payload["output"] = {"dir": str(tmp_path / tag), "format": "csv"}
        cfg_path.write_text(json.dumps(payload))
        return run_config_file(cfg_path)[0].read_bytes()

    assert run_with_threads(1, "t1") == run_with_threads(4, "t4")


def test_nodal_measure_experiment(tmp_path):
    payload = {
        "experiment": "nodal-measure",
        "family": {"functions": [REZ3_FN]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.5}},
        "params": {"grid_n": 512},
        "output": {"format": "json", "dir": str(tmp_path)},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(payload))
    paths = run_config_file(cfg_path)
    data = json.loads(paths[0].read_text())
    assert abs(data[0]["length"] - 3.0) < 0.06


def test_decomposition_experiment_flags():
    payload = {
        "experiment": "decomposition",
        "family": {"functions": [{"n": 2, "h1": [], "h2": [[1, "cos", 1.0]]}]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.5}},
        "params": {"radii": [0.1], "n_r": 2048, "n_theta": 8192},
        "output": {"format": "csv"},
    }
    rows = run_experiment(parse_config(payload))
    assert len(rows) == 1
    assert rows[0].flags["d3_ok"]


def test_doubling_scan_ball_region():
    payload = {
        "experiment": "doubling-scan",
        "family": {"functions": [REZ3_FN]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.4}},
        "params": {"radii": [0.2, 0.4], "depth": 3},
        "output": {"format": "csv"},
    }
    rows = run_experiment(parse_config(payload))
    assert len(rows) == 2
    assert all(abs(row.values["E"] - 3.0) < 1e-6 for row in rows)


def test_compare_experiment():
    payload = {
        "experiment": "compare",
        "family": {},
        "params": {"eps_coeff": 0.05, "n_r": 48, "n_theta": 96,
                   "boundary_degree": 3},
        "output": {"format": "json"},
    }
    rows = run_experiment(parse_config(payload))
    assert len(rows) == 1
    vals = rows[0].values
    assert abs(vals["omega"] - 0.1) < 1e-12
    assert vals["ratio"] > 0 and vals["distance_u"] >= 0


def test_cli_usage_error_on_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "unknown-kind"}))
    assert cli_main(["run", str(bad)]) == 2
    assert cli_main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_demo_list(capsys):
    assert cli_main(["demo"]) == 0
    out = capsys.readouterr().out
    assert "frequency-rez3" in out


def test_cli_demo_runs(tmp_path):
    assert cli_main(["demo", "frequency-rez3", "--out-dir", str(tmp_path)]) == 0
    target = tmp_path / "frequency-rez3" / "frequency-scan.csv"
    assert target.exists()
    header = target.read_text().splitlines()[0]
    for col in ("center_x", "center_y", "r", "D", "H", "N", "dlogN"):
        assert col in header
