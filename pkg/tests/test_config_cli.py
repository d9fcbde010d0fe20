"""Config schema round-trips, the KS helper, and end-to-end CLI runs."""

import filecmp
import os

import numpy as np
import pytest

from fraclan.cli import ks_test, main
from fraclan.config import dump_config, load_config, resolve_config
from fraclan.errors import ConfigError, DegenerateVarianceError


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------


def test_resolve_rejects_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown keys"):
        resolve_config("sample-fbm", {"h": "0.7", "tau": "1.0", "n_steps": "8", "hh": "1"})
    with pytest.raises(ConfigError, match="missing required"):
        resolve_config("sample-fbm", {"h": "0.7", "tau": "1.0"})
    with pytest.raises(ConfigError, match="unknown command"):
        resolve_config("frobnicate", {})


def test_resolve_parses_types_and_defaults():
    vals = resolve_config(
        "solve",
        {"drift": "fou", "theta": "[1.0]", "h": "0.7", "tau": "2.0", "delta": "0.1",
         "sigma": "[[2.0]]"},
    )
    assert vals["theta"] == [1.0] and vals["sigma"] == [[2.0]]
    assert vals["y0"] == [0.0] and vals["seed"] == 0 and vals["threads"] == 1
    with pytest.raises(ConfigError, match="bad value"):
        resolve_config("sample-fbm", {"h": "zebra", "tau": "1.0", "n_steps": "8"})
    with pytest.raises(ConfigError, match="bad value"):
        resolve_config("solve", {"drift": "fou", "theta": "[1.0]", "h": "0.7",
                                 "tau": "1.0", "delta": "0.1", "sigma": "[1, 2]"})


def test_sidecar_round_trips(tmp_path):
    vals = resolve_config(
        "lan",
        {"drift": "fou", "theta": "[1.0]", "u": "[1.0]", "h": "0.7",
         "tau_list": "[10, 20]", "delta": "0.25", "m_replicas": "40", "seed": "3"},
    )
    p = tmp_path / "side.ini"
    p.write_text(dump_config("lan", vals))
    again = load_config(str(p), "lan")
    again["threads"] = vals["threads"]  # execution knob, deliberately not persisted
    assert again == vals
    assert "threads" not in p.read_text()


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "nope.ini"), "lan")
    p = tmp_path / "wrong.ini"
    p.write_text("[solve]\ndrift = fou\n")
    with pytest.raises(ConfigError, match="no \\[lan\\] section"):
        load_config(str(p), "lan")


# ---------------------------------------------------------------------------
# KS helper
# ---------------------------------------------------------------------------


def test_ks_accepts_matching_gaussian():
    rng = np.random.default_rng(0)
    rep = ks_test(rng.normal(2.0, 3.0, 4000), ref_mean=2.0, ref_var=9.0)
    print(f"KS on matching sample: D = {rep.statistic:.4f}, p = {rep.p_value:.3f}")
    assert rep.p_value > 0.01 and rep.n == 4000


def test_ks_rejects_shifted_sample():
    rng = np.random.default_rng(1)
    rep = ks_test(rng.normal(10.0, 1.0, 500), ref_mean=0.0, ref_var=1.0)
    assert rep.p_value < 1e-10


def test_ks_guards():
    with pytest.raises(ValueError, match="n >= 20"):
        ks_test(np.zeros(5), 0.0, 1.0)
    with pytest.raises(DegenerateVarianceError):
        ks_test(np.zeros(50), 0.0, 0.0)


# ---------------------------------------------------------------------------
# CLI end-to-end
# ---------------------------------------------------------------------------


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_exit_codes(tmp_path):
    assert main(["lan", "--config", str(tmp_path / "missing.ini"),
                 "--out-dir", str(tmp_path / "o1")]) == 2
    bad = _write(tmp_path, "bad.ini", "[sample-fbm]\nh = 0.7\ntau = 1.0\nn_steps = 64\nbogus = 1\n")
    assert main(["sample-fbm", "--config", bad, "--out-dir", str(tmp_path / "o2")]) == 2
    # a numerically divergent run (Euler step too large) must exit 3
    blow = _write(tmp_path, "blow.ini",
                  "[solve]\ndrift = fou\ntheta = [3.0]\nh = 0.7\ntau = 40.0\n"
                  "delta = 1.0\nm_replicas = 1\nt_minus_factor = 2.0\n")
    assert main(["solve", "--config", blow, "--out-dir", str(tmp_path / "o3")]) == 3


def test_cli_sample_fbm_outputs(tmp_path):
    cfg = _write(tmp_path, "fbm.ini",
                 "[sample-fbm]\nh = 0.7\ntau = 1.0\nn_steps = 64\nm_replicas = 30\nseed = 5\n")
    out = tmp_path / "fbm_out"
    assert main(["sample-fbm", "--config", cfg, "--out-dir", str(out)]) == 0
    files = sorted(os.listdir(out))
    assert "config_used.ini" in files and "plot.py" in files
    assert "covariance_report.csv" in files
    paths = [f for f in files if f.startswith("fbm_")]
    assert len(paths) == 16  # capped
    first = (out / paths[0]).read_text().splitlines()
    assert first[0] == "t,component_0"
    assert len(first) == 66  # header + 65 grid points
    assert float(first[1].split(",")[1]) == 0.0  # B_0 = 0


def test_cli_solve_is_deterministic(tmp_path):
    text = ("[solve]\ndrift = fou\ntheta = [1.0]\nh = 0.7\ntau = 1.0\ndelta = 0.03125\n"
            "m_replicas = 3\nseed = 9\nt_minus_factor = 10.0\n")
    cfg = _write(tmp_path, "solve.ini", text)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--config", cfg, "--out-dir", str(out_a)]) == 0
    assert main(["solve", "--config", cfg, "--out-dir", str(out_b)]) == 0
    for f in ("solution_0000.csv", "solution_0002.csv", "config_used.ini"):
        assert filecmp.cmp(out_a / f, out_b / f, shallow=False), f


def test_cli_lan_identical_across_thread_counts(tmp_path):
    text = ("[lan]\ndrift = fou\ntheta = [1.0]\nu = [1.0]\nh = 0.7\ntau_list = [5]\n"
            "delta = 0.05\nm_replicas = 150\nseed = 3\nt_minus_factor = 10.0\n")
    cfg = _write(tmp_path, "lan.ini", text)
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert main(["lan", "--config", cfg, "--out-dir", str(out1), "--threads", "1"]) == 0
    assert main(["lan", "--config", cfg, "--out-dir", str(out4), "--threads", "4"]) == 0
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out4))
    for name in names:
        assert filecmp.cmp(out1 / name, out4 / name, shallow=False), name
    header = (out1 / "lan_tau5.csv").read_text().splitlines()[0]
    assert header == "replica,tau,I1,I2,I3,I4,total,L_theta,J_tau"
    summary = (out1 / "lan_summary.csv").read_text().splitlines()
    assert summary[0].startswith("tau,m,gamma_hat,mean,var")
    assert len(summary) == 2
