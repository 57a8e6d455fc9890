import csv
import json
import math
import os
import pathlib
import struct
import subprocess

import numpy as np
import pytest

import nse_mdp

ROOT = pathlib.Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"
CLI = os.environ.get("NSE_MDP_CLI", str(ROOT / "build" / "nse-mdp"))
CSV_HEADER = ["eps", "a_eps", "replicas", "metric_name", "estimate", "ci_low", "ci_high", "verdict"]


def run_cli(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)


def test_version_and_exports():
    assert nse_mdp.__version__
    for name in nse_mdp.__all__:
        assert hasattr(nse_mdp, name)


def test_basis_mode_order():
    b = nse_mdp.Basis(1, 0.5)
    assert b.mode_count == 4
    assert b.wavenumbers() == [(1, 0), (-1, 1), (0, 1), (1, 1)]
    assert math.isclose(b.L, 2 * math.pi)


def test_random_field_amplitude_and_norms():
    b = nse_mdp.Basis(4, 0.1)
    u = nse_mdp.random_field(b, seed=3, amplitude=2.5)
    assert u.shape == (b.mode_count,)
    h, v, l4 = nse_mdp.norms(b, u)
    assert math.isclose(h, 2.5, rel_tol=1e-12)
    assert math.isclose(nse_mdp.inner_h(b, u, u), h * h, rel_tol=1e-12)
    assert v > 0 and l4 > 0


def test_trilinear_antisymmetry():
    b = nse_mdp.Basis(5, 0.1)
    u, v, w = (nse_mdp.random_field(b, seed=s) for s in (1, 2, 3))
    scale = abs(nse_mdp.trilinear_b(b, u, v, w)) + 1.0
    assert abs(nse_mdp.trilinear_b(b, u, v, w) + nse_mdp.trilinear_b(b, u, w, v)) < 1e-12 * scale
    assert abs(nse_mdp.trilinear_b(b, u, v, v)) < 1e-12 * scale
    assert math.isclose(nse_mdp.inner_h(b, nse_mdp.nonlinear_B(b, u, v), w), nse_mdp.trilinear_b(b, u, v, w),
                        rel_tol=1e-10, abs_tol=1e-12)


def test_to_physical_is_divergence_free_and_real():
    b = nse_mdp.Basis(3, 0.1)
    u = nse_mdp.random_field(b, seed=4)
    ux, uy = nse_mdp.to_physical(b, u, 16)
    assert ux.shape == (16, 16) and uy.shape == (16, 16)
    k = np.fft.fftfreq(16, d=1.0 / 16)
    div = 1j * k[:, None] * np.fft.fft2(ux) + 1j * k[None, :] * np.fft.fft2(uy)
    assert np.abs(div).max() < 1e-9 * (np.abs(ux).max() + 1.0) * 256


def test_unforced_energy_decays():
    b = nse_mdp.Basis(4, 0.1)
    u0 = nse_mdp.random_field(b, seed=5)
    traj = nse_mdp.solve_nse(b, u0, T=1.0, n_steps=32)
    assert traj.shape == (33, b.mode_count)
    energy = [nse_mdp.norms(b, traj[n])[0] for n in range(traj.shape[0])]
    assert all(e1 <= e0 * (1 + 1e-12) for e0, e1 in zip(energy, energy[1:]))


def test_entropy_and_wilson():
    assert nse_mdp.entropy_l(1.0) == 0.0
    assert nse_mdp.entropy_l(0.0) == 1.0
    lo, hi = nse_mdp.wilson_interval(10, 100)
    assert 0.0 <= lo < 0.1 < hi <= 1.0


def test_run_experiment_and_verdict_recompute():
    ok, rows = nse_mdp.run_experiment("prop33", CONFIGS / "default.cfg")
    assert ok
    assert {r["metric_name"] for r in rows} >= {"error", "final_ratio"}
    with pytest.raises(nse_mdp.Error):
        nse_mdp.run_experiment("nope", CONFIGS / "default.cfg")


def test_config_hash_is_stable():
    h = nse_mdp.config_hash(CONFIGS / "default.cfg")
    assert len(h) == 16 and h == nse_mdp.config_hash(CONFIGS / "default.cfg")


def test_experiment_csv_and_manifest_schema(tmp_path):
    res = run_cli("thm35", "--config", CONFIGS / "default.cfg", "--out", tmp_path, "--replicas", 20)
    assert res.returncode in (0, 1), res.stderr
    with open(tmp_path / "thm35.csv", newline="") as f:
        reader = csv.reader(f)
        assert next(reader) == CSV_HEADER
        rows = list(reader)
    assert rows and all(len(r) == len(CSV_HEADER) for r in rows)
    for r in rows:
        float(r[0]), float(r[1]), int(r[2]), float(r[4]), float(r[5]), float(r[6])
    manifest = json.loads((tmp_path / "thm35_manifest.json").read_text())
    assert manifest["experiment"] == "thm35"
    assert manifest["config_hash"] == nse_mdp.config_hash(CONFIGS / "default.cfg")
    for key in ("tool_version", "seed", "passed", "wall_clock_seconds", "config"):
        assert key in manifest

    text = (tmp_path / "thm35.csv").read_text()
    ok, rejudged = nse_mdp.recompute_verdicts("thm35", text)
    assert [r["verdict"] for r in rejudged] == [r[7] for r in rows]


def test_snapshot_format_and_rate(tmp_path):
    res = run_cli("skeleton", "--config", CONFIGS / "default.cfg", "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    snap = tmp_path / "skeleton.bin"
    raw = snap.read_bytes()
    assert raw[:4] == b"NSE1"
    N, n_steps, dt, nu = struct.unpack_from("<4d", raw, 4)
    header = nse_mdp.snapshot_header(snap)
    assert (header["N"], header["n_steps"]) == (int(N), int(n_steps))
    assert header["dt"] == dt and header["nu"] == nu
    b = nse_mdp.Basis(int(N), nu)
    traj = nse_mdp.read_trajectory(snap, b)
    assert len(raw) == 4 + 8 * (4 + 2 * b.mode_count * (int(n_steps) + 1))
    assert traj.shape == (int(n_steps) + 1, b.mode_count)
    flat = np.frombuffer(raw, dtype="<f8", offset=36).view(np.complex128)
    assert np.array_equal(flat.reshape(traj.shape), traj)

    eta_T = traj[-1]
    r1 = nse_mdp.rate_terminal(CONFIGS / "default.cfg", eta_T)
    r2 = nse_mdp.rate_terminal(CONFIGS / "default.cfg", 2 * eta_T)
    assert r1["I"] > 0
    assert math.isclose(r2["I"], 4 * r1["I"], rel_tol=1e-6)
    assert r1["psi_star"].shape[1] == int(n_steps) + 1
