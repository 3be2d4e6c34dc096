"""CLI subcommands: artifacts, determinism, exit codes, formats."""

import json
import os

import numpy as np
import pytest

from linresp.cli import main


def run(args):
    return main(args)


def test_srb_artifacts(tmp_path):
    out = tmp_path / "srb"
    assert run(["srb", "--config", "tent", "--grid", "512",
                "--out", str(out)]) == 0
    data = json.loads((out / "srb.json").read_text())
    assert data["leading_eigenvalue"] == pytest.approx(1.0, abs=1e-10)
    assert data["reconstruction_integral"] == pytest.approx(1.0, abs=1e-10)
    csv_text = (out / "decomposition.csv").read_bytes()
    assert b"\r" not in csv_text  # LF endings
    assert csv_text.splitlines()[0] == b"kind,x,value"


def test_json_keys_sorted_and_17g(tmp_path):
    out = tmp_path / "j"
    run(["srb", "--config", "tent", "--grid", "512", "--out", str(out)])
    text = (out / "srb.json").read_text()
    keys = [line.split('"')[1] for line in text.splitlines()
            if line.startswith('  "')]
    assert keys == sorted(keys)
    # 17 significant digits keeps round-trip exactness
    data = json.loads(text)
    assert format(data["leading_eigenvalue"], ".17g") in text


def test_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run(["tce", "--config", "tent-bump", "--grid", "512",
             "--out", str(out), "--seed", "9"])
    assert (a / "tce.json").read_bytes() == (b / "tce.json").read_bytes()
    assert (a / "alpha.csv").read_bytes() == (b / "alpha.csv").read_bytes()


def test_response_artifact(tmp_path):
    out = tmp_path / "r"
    assert run(["response", "--config", "tent-bump", "--grid", "512",
                "--out", str(out)]) == 0
    data = json.loads((out / "response.json").read_text())
    assert data["formula_value"] == pytest.approx(1.0 / 6.0, abs=1e-4)
    assert "fd_value" in data and "birkhoff_mu0" in data


def test_pressure_csv_and_json(tmp_path):
    out = tmp_path / "p"
    assert run(["pressure", "--config", "tangent-pair", "--grid", "512",
                "--out", str(out), "--format", "json"]) == 0
    data = json.loads((out / "pressure.json").read_text())
    assert {r["t"] for r in data["rows"]} == {0.0, 0.05}
    out2 = tmp_path / "p2"
    assert run(["pressure", "--config", "tangent-pair", "--grid", "512",
                "--out", str(out2)]) == 0
    assert (out2 / "pressure.csv").exists()


def test_sweep_artifact(tmp_path):
    out = tmp_path / "s"
    assert run(["sweep", "--config", "tent-bump", "--grid", "512",
                "--out", str(out)]) == 0
    data = json.loads((out / "sweep.json").read_text())
    assert data["modulus_fit_exponent"] == pytest.approx(1.0, abs=0.2)


def test_norms_roundtrip(tmp_path):
    samples = tmp_path / "samples.json"
    samples.write_text("[0.0, 1.0, -1.0, 0.5, 0.0]")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": str(samples), "p": [1.0, 2.0]}))
    out = tmp_path / "n"
    assert run(["norms", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "norms.csv").read_text().splitlines()
    assert rows[0].startswith("p,var_p")
    assert float(rows[1].split(",")[1]) == pytest.approx(5.0)


def test_custom_json_config(tmp_path):
    cfg = tmp_path / "fam.json"
    cfg.write_text(json.dumps({
        "base": ["skew_tent", 1.9],
        "observable": "x2",
        "grid_size": 512,
    }))
    out = tmp_path / "c"
    assert run(["srb", "--config", str(cfg), "--out", str(out)]) == 0


def test_validation_exit_codes(tmp_path):
    assert run(["srb", "--config", "does-not-exist",
                "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"base": "tent", "family": {"kind": "mystery"}}')
    assert run(["tce", "--config", str(bad), "--out", str(tmp_path)]) == 2
    odd = tmp_path / "odd.json"
    odd.write_text('{"base": "tent", "grid_size": 511}')
    assert run(["srb", "--config", str(odd), "--out", str(tmp_path)]) == 2


def test_numerical_exit_code(tmp_path):
    # bump over skew-1.9 is not horizontal: response fails numerically
    cfg = tmp_path / "nh.json"
    cfg.write_text(json.dumps({
        "base": ["skew_tent", 1.9],
        "family": {"kind": "additive", "X": "bump"},
        "observable": "x",
        "grid_size": 512,
    }))
    assert run(["response", "--config", str(cfg),
                "--out", str(tmp_path)]) == 3
