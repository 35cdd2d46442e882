import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from clsklab import cli, design

EX1 = str(design.DATA_DIR / "example1.json")


def run(*argv):
    return cli.main([str(a) for a in argv])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_msf_writes_curve_and_is_reproducible(tmp_path, capsys):
    args = ["msf", "--eta-min", -12, "--eta-max", -9, "--eta-step", 1, "--horizon", 200]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert "eta_bar" in capsys.readouterr().out
    for name in ("msf.csv", "threshold.json"):
        assert digest(tmp_path / "a" / name) == digest(tmp_path / "b" / name)
    lines = (tmp_path / "a" / "msf.csv").read_text().splitlines()
    assert lines[0] == "eta,mu" and len(lines) == 5
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["command"] == "msf" and man["seed"] == 0


def test_msf_empty_grid_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("msf", "--eta-min", 0, "--eta-max", -1, "--out", tmp_path)
    assert exc.value.code == cli.EXIT_USAGE


def test_design_check_example1(tmp_path, capsys):
    assert run("design-check", "--config", EX1, "--eta-bar", -10.3, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "epsilon range [5.15, 17.58]" in out
    data = json.loads((tmp_path / "design_check.json").read_text())
    assert data["requirements"] is True
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert list(man["inputs"].values())[0] == digest(design.DATA_DIR / "example1.json")


def test_design_check_broken_split(tmp_path, capsys):
    d = design.to_dict(design.builtin("example1"))
    d["transmitter"], d["receiver"] = [1, 2, 3, 4], [5, 6, 7, 8]
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(d))
    assert run("design-check", "--config", p, "--eta-bar", -10.3, "--out", tmp_path / "o") == cli.EXIT_REQUIREMENT
    assert "FAIL  iii_channel_unsynchronized" in capsys.readouterr().out


def test_missing_config_file(tmp_path):
    assert run("design-check", "--config", tmp_path / "nope.json", "--out", tmp_path) == cli.EXIT_CONFIG


def test_run_config_include(tmp_path):
    (tmp_path / "net.json").write_text((design.DATA_DIR / "example1.json").read_text())
    (tmp_path / "run.json").write_text(json.dumps({"network": "net.json", "eta_bar": -10.3, "seed": 4}))
    assert run("design-check", "--config", tmp_path / "run.json", "--out", tmp_path / "o") == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert len(man["inputs"]) == 2
    (tmp_path / "bad.json").write_text(json.dumps({"network": "missing.json"}))
    assert run("design-check", "--config", tmp_path / "bad.json", "--out", tmp_path / "o") == cli.EXIT_CONFIG


def test_transmit_demo(tmp_path, capsys):
    assert run("transmit", "--config", "builtin:example1", "--bits", "01101001", "--sigma", 0.25,
               "--out", tmp_path) == 0
    sent, det = (l.split()[1] for l in (tmp_path / "bits.txt").read_text().splitlines())
    assert sent == "01101001" and det[1:] == sent[1:]
    frames = json.loads((tmp_path / "frames.json").read_text())
    assert len(frames) == 8
    with np.load(tmp_path / "traces.npz") as z:
        assert z["receiver"].shape[1] == 4
        assert z["channel_links"].tolist()[0] == ["1", "2"]
    assert (tmp_path / "channel.csv").read_text().startswith("t,node,component,value\n")


def test_transmit_deterministic_without_sigma(tmp_path):
    for sub in ("a", "b"):
        assert run("transmit", "--config", EX1, "--bits", "0110", "--sf", 50, "--out", tmp_path / sub) == 0
    assert digest(tmp_path / "a" / "traces.npz") == digest(tmp_path / "b" / "traces.npz")
    assert digest(tmp_path / "a" / "frames.json") == digest(tmp_path / "b" / "frames.json")


def test_transmit_malformed_bits(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("transmit", "--config", EX1, "--bits", "01x1", "--out", tmp_path)
    assert exc.value.code == cli.EXIT_USAGE


def test_transmit_divergence_exit_code(tmp_path):
    d = design.to_dict(design.builtin("example1"))
    d["simulation"]["dt"] = 0.2
    d["simulation"]["sample_every"] = 1
    p = tmp_path / "coarse.json"
    p.write_text(json.dumps(d))
    assert run("transmit", "--config", p, "--bits", "0101", "--out", tmp_path / "o") == cli.EXIT_DIVERGENCE


def test_ber_sweep_with_baselines_and_resume(tmp_path, capsys):
    args = ["ber", "--config", EX1, "--sigma", 0.25, "--sf", 100, "--bits", 100, "--with-baselines",
            "--no-wall-time", "--out", tmp_path]
    assert run(*args) == 0
    first = (tmp_path / "ber.csv").read_text()
    rows = first.splitlines()
    assert rows[0].split(",")[0] == "scheme"
    assert [r.split(",")[0] for r in rows[1:]] == ["clsk", "csk", "dcsk"]
    capsys.readouterr()
    assert run(*args, "--resume") == 0
    assert capsys.readouterr().out == ""  # nothing recomputed
    assert (tmp_path / "ber.csv").read_text() == first


def test_ber_baseline_only(tmp_path):
    assert run("ber", "--scheme", "dcsk", "--bits", 100, "--sf", 20, "--sigma", 10, "--out", tmp_path) == 0
    rows = (tmp_path / "ber.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("dcsk,10.0,")


def test_ber_rejects_zero_bits(tmp_path):
    assert run("ber", "--config", EX1, "--bits", 0, "--out", tmp_path) == cli.EXIT_CONFIG


def test_spectrogram_from_transmit(tmp_path):
    assert run("transmit", "--config", EX1, "--bits", "0101", "--sigma", 0.25, "--out", tmp_path / "t") == 0
    assert run("spectrogram", tmp_path / "t" / "traces.npz", "--window", 64, "--overlap", 32, "--svg",
               "--out", tmp_path / "s") == 0
    lines = (tmp_path / "s" / "spectrogram.csv").read_text().splitlines()
    assert lines[0].startswith("t,0.0,")
    assert len(lines[0].split(",")) == 2 + 32
    assert (tmp_path / "s" / "spectrogram.svg").exists()
    with pytest.raises(SystemExit):
        run("spectrogram", tmp_path / "t" / "traces.npz", "--window", 64, "--overlap", 64, "--out", tmp_path / "s")
    assert run("spectrogram", tmp_path / "absent.npz", "--out", tmp_path / "s") == cli.EXIT_CONFIG


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert run("design-check", "--config", EX1, "--eta-bar", -10.3) == 0
    assert (tmp_path / "env" / "design_check.txt").exists()


def test_console_script_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "clsklab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
