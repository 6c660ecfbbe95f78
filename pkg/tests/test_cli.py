import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qfpkit.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, quantize, run
from qfpkit.config import ConfigError, parse_angle, parse_config


def invoke(capsys, tmp_path, command, config=None, *extra):
    argv = [command]
    if config is not None:
        path = tmp_path / "run.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        argv += ["--config", str(path)]
    argv += list(extra)
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, tmp_path, command, config=None, *extra):
    code, out, err = invoke(capsys, tmp_path, command, config, *extra)
    assert code == EXIT_OK, err
    return json.loads(out)


# --- metrics -------------------------------------------------------

def test_metrics_default_hadamard(capsys, tmp_path):
    rep = report(capsys, tmp_path, "metrics")
    assert rep["metrics"]["F"] == 0.999999
    assert round(rep["metrics"]["P_tilde"], 4) == 0.9747
    assert len(rep["W"]) == 2 and len(rep["W"][0][0]) == 2
    assert rep["ratios"]["R_01"] == pytest.approx(rep["ratios"]["T_00"], abs=1e-3)


def test_metrics_zero_modulation(capsys, tmp_path):
    rep = report(capsys, tmp_path, "metrics", {"device": {"theta": 0}})
    assert rep["metrics"]["F"] == 0.5
    assert rep["metrics"]["P_tilde"] == 1.0


def test_metrics_four_channels(capsys, tmp_path):
    rep = report(capsys, tmp_path, "metrics", {"device": {"B": 4}})
    assert rep["metrics"]["F"] == 0.999991
    assert round(rep["metrics"]["P_tilde"], 4) == 0.9696


def test_metrics_six_decimals(capsys, tmp_path):
    rep = report(capsys, tmp_path, "metrics")
    for v in rep["metrics"].values():
        assert v == quantize(v, 6)


def test_metrics_csv(capsys, tmp_path):
    code, out, _ = invoke(capsys, tmp_path, "metrics", None, "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["F"] == "0.999999"


def test_custom_phases_and_identity_target(capsys, tmp_path):
    cfg = {"device": {"B": 4, "theta": 0.0, "phases": [0, 0, 0, 0]},
           "task": {"target": "identity"}}
    rep = report(capsys, tmp_path, "metrics", cfg)
    assert rep["metrics"]["F"] == 1.0


# --- sweep -------------------------------------------------------

def sweep_rows(out):
    lines = out.splitlines()
    assert lines[0].startswith("# axis=")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_theta_sweep_csv(capsys, tmp_path):
    cfg = {"task": {"sweep": {"axis": "theta", "start": 0.5, "stop": 1.0, "step": 0.01}}}
    code, out, _ = invoke(capsys, tmp_path, "sweep", cfg, "--format", "csv")
    assert code == EXIT_OK
    rows = sweep_rows(out)
    assert len(rows) == 51
    assert list(rows[0]) == ["theta", "F", "P", "P_tilde", "eta", "R_01", "R_10", "T_00", "T_11"]
    diff = [float(r["R_01"]) - float(r["T_00"]) for r in rows]
    k = next(i for i in range(50) if diff[i] * diff[i + 1] <= 0)
    nearest = k if abs(diff[k]) < abs(diff[k + 1]) else k + 1
    assert float(rows[nearest]["theta"]) == pytest.approx(0.83, abs=1e-9)


def test_alpha_sweep_pi_notation(capsys, tmp_path):
    cfg = {"task": {"sweep": {"axis": "alpha", "values": ["pi/3", "pi/2", "2pi/3"]}}}
    rep = report(capsys, tmp_path, "sweep", cfg)
    assert len(rep["rows"]) == 3
    assert [r["alpha"] for r in rep["rows"]] == [quantize(a, 6) for a in
                                                (math.pi / 3, math.pi / 2, 2 * math.pi / 3)]


def test_alpha_sweep_matches_library(capsys, tmp_path):
    from qfpkit.design import sweep_alpha

    cfg = {"task": {"sweep": {"axis": "alpha", "values": ["pi/3", "pi/2", "2pi/3"]}}}
    rep = report(capsys, tmp_path, "sweep", cfg)
    lib = sweep_alpha(6, 0.8283, [math.pi / 3, math.pi / 2, 2 * math.pi / 3]).rows()
    for got, want in zip(rep["rows"], lib):
        for key in ("F", "P_tilde", "R_01", "T_00"):
            assert got[key] == quantize(want[key], 6)


def test_channel_sweep_monotone(capsys, tmp_path):
    cfg = {"task": {"sweep": {"axis": "B", "values": [2, 4, 6, 8]}}}
    rep = report(capsys, tmp_path, "sweep", cfg)
    pt = [r["P_tilde"] for r in rep["rows"]]
    assert [r["B"] for r in rep["rows"]] == [2, 4, 6, 8]
    assert all(b >= a for a, b in zip(pt, pt[1:]))


def test_sweep_threads_identical(capsys, tmp_path):
    cfg = {"task": {"sweep": {"axis": "theta", "start": 0.5, "stop": 1.0, "step": 0.05}}}
    _, one, _ = invoke(capsys, tmp_path, "sweep", cfg, "--format", "csv")
    _, four, _ = invoke(capsys, tmp_path, "sweep", cfg, "--format", "csv", "--threads", "4")
    assert one == four


def test_empty_sweep_is_config_error(capsys, tmp_path):
    cfg = {"task": {"sweep": {"axis": "theta", "values": []}}}
    code, _, err = invoke(capsys, tmp_path, "sweep", cfg)
    assert code == EXIT_CONFIG
    assert "task.sweep" in err


def test_sweep_without_range_is_config_error(capsys, tmp_path):
    code, _, _ = invoke(capsys, tmp_path, "sweep")
    assert code == EXIT_CONFIG


def test_csv_line_endings(capsys, tmp_path):
    out_path = tmp_path / "sweep.csv"
    cfg = {"task": {"sweep": {"axis": "B", "values": [4, 6]}}}
    code, stdout, _ = invoke(capsys, tmp_path, "sweep", cfg, "--format", "csv", "--out", str(out_path))
    assert code == EXIT_OK and stdout == ""
    raw = out_path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert b"," in raw and b";" not in raw


# --- optimize -------------------------------------------------------

def test_optimize_default(capsys, tmp_path):
    rep = report(capsys, tmp_path, "optimize")
    assert abs(rep["argmax"]["theta"] - 0.8283) <= 1e-3
    assert rep["grid_check"]["step"] == 1e-05
    assert rep["flat_objective"] is False


def test_optimize_four_channels(capsys, tmp_path):
    rep = report(capsys, tmp_path, "optimize", {"device": {"B": 4}})
    assert rep["metrics"]["F"] >= 0.99999


def test_optimize_bad_bracket(capsys, tmp_path):
    cfg = {"task": {"optimize": {"bracket": [0, 0.1]}}}
    code, _, err = invoke(capsys, tmp_path, "optimize", cfg)
    assert code == EXIT_NUMERIC
    assert "bracket" in err


# --- probe -------------------------------------------------------

def test_probe_noiseless_matches_metrics(capsys, tmp_path):
    rep = report(capsys, tmp_path, "probe")
    met = report(capsys, tmp_path, "metrics")
    assert rep["reconstruction"]["F"] == met["metrics"]["F"]
    # unrounded comparison through the library
    from qfpkit.cli import cmd_metrics, cmd_probe

    cfg = parse_config({})
    assert abs(cmd_probe(cfg)["reconstruction"]["F"] - cmd_metrics(cfg)["metrics"]["F"]) < 1e-10


def test_probe_noisy_uncertainty(capsys, tmp_path):
    cfg = {"probe": {"sigma": 0.005, "replicates": 5}}
    rep = report(capsys, tmp_path, "probe", cfg, "--seed", "3")
    assert rep["reconstruction"]["dF"] > 0
    # the operating point is a stationary point of F, which keeps the
    # propagated uncertainty well below the noise level itself
    from qfpkit.cli import cmd_probe

    cfg_obj = parse_config(cfg)
    cfg_obj.probe.seed = 3
    dF = cmd_probe(cfg_obj)["reconstruction"]["dF"]
    assert 1e-7 < dF < 1e-4
    assert rep["config"]["probe"]["seed"] == 3
    assert len(rep["dataset"]["single_line"]["0"]) == 5


def test_probe_identity_exit_code(capsys, tmp_path):
    code, _, err = invoke(capsys, tmp_path, "probe", {"device": {"theta": 0, "alpha": 0}})
    assert code == EXIT_NUMERIC
    assert "flat" in err


# --- determinism, config -------------------------------------------------------

def test_byte_identical_output(capsys, tmp_path):
    cfg = {"probe": {"sigma": 0.01}}
    _, a, _ = invoke(capsys, tmp_path, "probe", cfg, "--seed", "42")
    _, b, _ = invoke(capsys, tmp_path, "probe", cfg, "--seed", "42")
    _, c, _ = invoke(capsys, tmp_path, "probe", cfg, "--seed", "43")
    assert a == b
    assert a != c


def test_subprocess_entry_point(tmp_path):
    args = [sys.executable, "-m", "qfpkit", "metrics"]
    a = subprocess.run(args, capture_output=True, check=True).stdout
    b = subprocess.run(args, capture_output=True, check=True).stdout
    assert a == b
    assert json.loads(a)["metrics"]["F"] == 0.999999


def test_config_echo_reparses(capsys, tmp_path):
    cfg = {"device": {"B": 4, "alpha": "pi/2", "theta1": 0.7, "theta2": 0.75},
           "probe": {"sigma": 0.002}, "numerics": {"tail_tol": 1e-14}}
    rep = report(capsys, tmp_path, "metrics", cfg)
    again = parse_config(rep["config"])
    assert again.to_dict() == rep["config"]
    assert again == parse_config(cfg)
    # every default is spelled out
    assert set(rep["config"]) == {"schema_version", "device", "task", "numerics", "probe", "output"}
    assert rep["config"]["device"]["sign1"] == -1


@pytest.mark.parametrize("cfg,path", [
    ({"device": {"B": 5}}, "device.B"),
    ({"device": {"colour": 1}}, "device.colour"),
    ({"extra": 1}, "extra"),
    ({"device": {"alpha": "tau"}}, "device.alpha"),
    ({"device": {"theta": 0.8, "theta1": 0.8}}, "device.theta"),
    ({"probe": {"replicates": 1}}, "probe.replicates"),
    ({"output": {"format": "xml"}}, "output.format"),
    ({"schema_version": 2}, "schema_version"),
    ({"task": {"sweep": {"axis": "B", "values": [2.5]}}}, "task.sweep.values[0]"),
])
def test_config_errors_name_key(capsys, tmp_path, cfg, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg)
    assert exc.value.path == path
    code, _, err = invoke(capsys, tmp_path, "metrics", cfg)
    assert code == EXIT_CONFIG
    assert path in err


def test_missing_and_malformed_config_files(capsys, tmp_path):
    assert run(["metrics", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run(["metrics", "--config", str(bad)]) == EXIT_CONFIG
    capsys.readouterr()


def test_bad_flags(capsys, tmp_path):
    assert run(["sweep", "--threads", "0"]) == EXIT_CONFIG
    assert run(["probe", "--seed", "-1"]) == EXIT_CONFIG
    assert run(["optimize", "--format", "csv"]) == EXIT_CONFIG
    capsys.readouterr()


@pytest.mark.parametrize("text,value", [
    ("pi", math.pi), ("pi/3", math.pi / 3), ("2pi/3", 2 * math.pi / 3),
    ("0.5pi", math.pi / 2), ("-pi/4", -math.pi / 4), ("1.25", 1.25), (2, 2.0),
])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


def test_quantize_truncates():
    assert quantize(0.99999990, 6) == 0.999999
    assert quantize(0.9746509, 6) == 0.97465
    assert quantize(0.5, 6) == 0.5
    assert quantize(0.49999999999999994, 6) == 0.5
    assert quantize(-0.1234567, 6) == -0.123456
