import json
import subprocess
import sys

import numpy as np
import pytest

from besselop.cli import COMMANDS, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, build_parser, main

SMALL = ["--r", "1", "--R", "16", "--N", "1024", "--Lam", "32", "--N-spectral", "1024"]


def _run(capsys, argv):
    status = main(argv)
    out, err = capsys.readouterr()
    return status, out, err


def test_every_command_has_a_parser():
    parser = build_parser()
    for name in COMMANDS:
        assert parser.parse_args(_minimal(name)).command == name


def _minimal(name):
    need = {
        "transform": SMALL + ["--input", "gaussian"],
        "inverse": SMALL + ["--input", "gaussian"],
        "multiplier": SMALL + ["--input", "gaussian", "--symbol", "heat:1"],
        "imaginary-power": SMALL + ["--input", "gaussian", "--alpha", "1"],
        "heat": SMALL + ["--input", "gaussian", "--t", "1"],
        "translate": SMALL + ["--input", "gaussian", "--y", "1"],
        "convolve": SMALL + ["--input", "gaussian", "--input2", "gaussian"],
        "cz": SMALL + ["--input", "gaussian", "--lambda", "1"],
        "kernel-tail": SMALL + ["--alpha", "1"],
        "norm-growth": SMALL + ["--p", "1.5"],
        "weak-type": SMALL,
        "tail-scaling": SMALL,
    }
    return [name] + need.get(name, [])


def test_transform_gaussian_csv(capsys):
    status, out, _ = _run(capsys, ["transform"] + SMALL + ["--input", "gaussian", "--format", "csv"])
    assert status == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "lambda,re,im"
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    low = rows[:, 0] <= 8
    assert np.abs(rows[low, 1] - np.exp(-0.5 * rows[low, 0] ** 2)).max() < 1e-7


def test_heat_json_embeds_run_config(capsys, tmp_path):
    path = tmp_path / "heat.json"
    status, _, _ = _run(capsys, ["heat"] + SMALL + ["--input", "gaussian", "--t", "0.5", "--format", "json", "-o", str(path)])
    assert status == EXIT_OK
    doc = json.loads(path.read_text())
    assert doc["command"] == "heat" and doc["run_config"]["t"] == 0.5
    x, re = np.array(doc["nodes"]), np.array(doc["re"])
    assert np.abs(re - np.exp(-x * x / 4) / 2).max() < 1e-6


def test_config_replay_is_bit_identical(capsys, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["imaginary-power"] + SMALL + ["--input", "gaussian:0.5", "--alpha", "2", "--format", "json",
                                            "-o", str(first)]) == 0
    assert main(["imaginary-power", "--r", "3", "--alpha", "9", "--input", "gaussian", "--config", str(first),
                 "--format", "json", "-o", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()


def test_config_for_another_command(capsys, tmp_path):
    doc = tmp_path / "a.json"
    main(["mollifier", "-o", str(doc)])
    status, _, err = _run(capsys, ["heat"] + SMALL + ["--input", "gaussian", "--t", "1", "--config", str(doc)])
    assert status == EXIT_USAGE
    assert json.loads(err)["error"]["exit"] == EXIT_USAGE


def test_cz_json(capsys):
    status, out, _ = _run(capsys, ["cz", "--r", "1", "--R", "8", "--N", "1024", "--input", "indicator:0,1",
                                   "--lambda", "0.25"])
    assert status == EXIT_OK
    doc = json.loads(out)
    assert doc["pieces"] and set(doc["pieces"][0]) == {"center", "radius", "l1_ratio"}
    assert doc["constants"]["C_s"] <= 8


def test_norm_growth_report(capsys):
    status, out, _ = _run(capsys, ["norm-growth"] + SMALL + ["--p", "1.5", "--alphas", "1,2,4"])
    assert status == EXIT_OK
    report = json.loads(out)["report"]
    assert report["theory_exponent"] == pytest.approx(2 * (1 / 1.5 - 0.5))
    assert "runtimes_ms" not in report


@pytest.mark.parametrize("argv", [
    ["transform"] + SMALL,
    ["transform"] + SMALL + ["--input", "cosine"],
    ["heat"] + SMALL + ["--input", "gaussian", "--t", "-1"],
    ["transform", "--r", "-1", "--input", "gaussian"],
    ["transform"] + SMALL[:4] + ["--N", "1001", "--input", "gaussian"],
    ["norm-growth"] + SMALL + ["--p", "1"],
    ["cz"] + SMALL + ["--input", "gaussian", "--lambda", "1", "--format", "csv"],
    ["no-such-command"],
])
def test_usage_errors_exit_2(capsys, argv):
    status, _, err = _run(capsys, argv)
    assert status == EXIT_USAGE
    env = json.loads(err.strip().splitlines()[-1])
    assert env["error"]["exit"] == EXIT_USAGE and env["error"]["message"]


def test_domain_error_exits_3(capsys):
    status, _, err = _run(capsys, ["cz", "--r", "1", "--R", "8", "--N", "1024", "--input", "indicator:0,1",
                                   "--lambda", "0.001"])
    assert status == EXIT_DOMAIN
    assert json.loads(err.strip().splitlines()[-1])["error"]["exit"] == EXIT_DOMAIN


def test_missing_csv_file(capsys, tmp_path):
    status, _, _ = _run(capsys, ["transform"] + SMALL + ["--input-csv", str(tmp_path / "none.csv")])
    assert status == EXIT_USAGE


def test_selftest_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["selftest", "--seed", "3", "-o", str(a)]) == EXIT_OK
    assert main(["selftest", "--seed", "3", "-o", str(b)]) == EXIT_OK
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "besselop.cli", "mollifier", "--points", "0,1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["values"][0] == pytest.approx(1.0, abs=1e-10)
