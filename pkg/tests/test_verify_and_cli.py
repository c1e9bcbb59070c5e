import json
import subprocess
import sys

import numpy as np
import pytest

from formhess import symfun
from formhess.verify import run_verify


class TestVerifySuite:
    def test_default_seed_passes(self):
        rep = run_verify(samples=1500, seed=42, n_max=5)
        assert rep["all_pass"], rep["failures"]

    def test_zero_samples_trivially_passes(self):
        rep = run_verify(samples=0, seed=42, n_max=4)
        assert rep["all_pass"]

    def test_negated_recurrence_canary(self, monkeypatch):
        # a corrupted build (sign flip in the S_k recurrence) must fail loudly
        good = symfun.elementary_symmetric

        def corrupted(mu, k):
            val = good(mu, k)
            return -val if k == 2 else val

        monkeypatch.setattr(symfun, "elementary_symmetric", corrupted)
        rep = run_verify(samples=400, seed=42, n_max=4)
        assert not rep["all_pass"]
        assert rep["failures"]


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "formhess.cli", *args],
        capture_output=True, text=True,
    )
    return proc


class TestCli:
    def test_gamma_table(self):
        proc = run_cli("gamma", "--n", "3", "--k", "2")
        assert proc.returncode == 0
        assert "generic: gamma = 10" in proc.stdout
        assert "degenerate: gamma = 2" in proc.stdout

    def test_gamma_n2_note(self):
        proc = run_cli("gamma", "--n", "2", "--k", "2")
        assert proc.returncode == 0
        assert "note:" in proc.stdout

    def test_gamma_invalid_exit_2(self):
        proc = run_cli("gamma", "--n", "3", "--k", "5")
        assert proc.returncode == 2

    def test_verify_small(self, tmp_path):
        out = tmp_path / "verify.json"
        proc = run_cli("verify", "--samples", "300", "--seed", "42", "--out", str(out))
        assert proc.returncode == 0
        rep = json.loads(out.read_text())
        assert rep["all_pass"]

    def test_verify_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli("verify", "--samples", "300", "--seed", "42", "--out", str(a))
        run_cli("verify", "--samples", "300", "--seed", "42", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_radial_green_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["radial-green", "--n", "3", "--k", "1", "--gamma", "4.0",
                "--eps0", "0.2", "--levels", "2", "--mesh", "128",
                "--probes", "0.5", "--seed", "42"]
        p1 = run_cli(*args, "--json", str(a))
        p2 = run_cli(*args, "--json", str(b))
        assert p1.returncode == 0 and p2.returncode == 0
        assert a.read_bytes() == b.read_bytes()

    def test_radial_solve_writes_csv(self, tmp_path):
        csv = tmp_path / "run.csv"
        proc = run_cli("radial-solve", "--n", "3", "--k", "2", "--gamma", "2.0",
                       "--eps", "0.25", "--mesh", "64", "--csv", str(csv))
        assert proc.returncode == 0
        header = csv.read_text().splitlines()[0]
        assert header == "s,phi,dphi,d2phi,residual"

    def test_radial_solve_bad_config_exit_2(self):
        proc = run_cli("radial-solve", "--n", "3", "--k", "2", "--gamma", "2.0",
                       "--eps", "1.5")
        assert proc.returncode == 2

    def test_rates_roundtrip(self, tmp_path):
        csv = tmp_path / "samples.csv"
        radii = np.geomspace(0.02, 0.1, 10)
        lines = ["r,value"] + [f"{r},{r**-10.0}" for r in radii]
        csv.write_text("\n".join(lines))
        out = tmp_path / "fit.json"
        proc = run_cli("rates", "--input", str(csv), "--json", str(out))
        assert proc.returncode == 0
        fit = json.loads(out.read_text())
        assert abs(fit["slope"] + 10.0) <= 1e-9

    def test_config_file_merging(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 3, "k": 1}))
        proc = run_cli("gamma", "--config", str(cfg), "--n", "3", "--k", "1")
        assert proc.returncode == 0
        assert "generic: gamma = 4" in proc.stdout

    def test_grid_solve_smoke(self, tmp_path):
        out = tmp_path / "grid.json"
        dump = tmp_path / "grid.bin"
        proc = run_cli("grid-solve", "--k", "1", "--R", "0.6", "--eps", "0.25",
                       "--h", str(1 / 8), "--json", str(out), "--dump", str(dump))
        assert proc.returncode == 0, proc.stderr
        rep = json.loads(out.read_text())
        assert rep["admissible"] and rep["newton_iters"] <= 2
        assert dump.exists()

    def test_grid_solve_bad_spacing_exit_2(self):
        proc = run_cli("grid-solve", "--k", "1", "--R", "0.6", "--eps", "0.05",
                       "--h", str(1 / 8))
        assert proc.returncode == 2
