import json
import os

import numpy as np
import pytest

from blowuplab.cli import main

FAST_CFG = """\
p = 2.0
n = 1
p1 = 0.2
K0 = 10.0
A = 2.0
T = 1e-8
eps0 = 0.012
alpha0 = 0.3
delta0 = 0.2
eta0 = 0.4
N = 256
X = 0.016
smax = 18.8
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST_CFG)
    return str(path)


def read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class TestProfiles:
    def test_dump_layout_and_f0(self, cfg, tmp_path):
        out = str(tmp_path / "profiles")
        assert main(["profiles", "--config", cfg, "--out", out]) == 0
        for name in ("config.resolved", "schema.txt", "f0_g0.csv",
                     "phi.csv", "ustar.csv"):
            assert os.path.exists(os.path.join(out, name)), name
        assert os.path.exists(os.path.join(out, "figures", "profiles.png"))
        data = read_csv(os.path.join(out, "f0_g0.csv"))
        z, f0v = data[:, 0], data[:, 1]
        np.testing.assert_allclose(f0v, (1.0 + z**2 / 8.0) ** -1.0,
                                   rtol=1e-12)


class TestInit:
    def test_dump_and_positivity(self, cfg, tmp_path):
        out = str(tmp_path / "init")
        assert main(["init", "--config", cfg, "--out", out]) == 0
        data = read_csv(os.path.join(out, "init.csv"))
        assert data.shape[1] == 3
        with open(os.path.join(out, "report.json")) as fh:
            rep = json.load(fh)
        assert rep["min_re_u"] >= 1.0
        assert data[:, 1].min() == pytest.approx(rep["min_re_u"])

    def test_rerun_identical(self, cfg, tmp_path):
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        main(["init", "--config", cfg, "--out", out_a])
        main(["init", "--config", cfg, "--out", out_b])
        a = open(os.path.join(out_a, "init.csv"), "rb").read()
        b = open(os.path.join(out_b, "init.csv"), "rb").read()
        assert a == b


class TestSimulate:
    def test_layout_and_determinism(self, cfg, tmp_path):
        out = str(tmp_path / "sim")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        for name in ("config.resolved", "schema.txt", "modes.csv",
                     "monitor.jsonl", "report.json"):
            assert os.path.exists(os.path.join(out, name)), name
        assert os.path.exists(os.path.join(out, "snapshots", "times.csv"))
        assert os.path.exists(os.path.join(out, "figures", "modes.png"))

        with open(os.path.join(out, "modes.csv")) as fh:
            header = fh.readline().strip()
        assert header == ("s,q10,q11,q12,q1minus,q1e,"
                          "q20,q21,q22,q2minus,q2e")

        for line in open(os.path.join(out, "monitor.jsonl")):
            rec = json.loads(line)
            assert set(rec) >= {"s", "in_S", "worst_face", "worst_ratio"}

        out2 = str(tmp_path / "sim2")
        main(["simulate", "--config", cfg, "--out", out2])
        a = open(os.path.join(out, "modes.csv")).read()
        b = open(os.path.join(out2, "modes.csv")).read()
        assert a == b

    def test_report_contents(self, cfg, tmp_path):
        out = str(tmp_path / "sim")
        main(["simulate", "--config", cfg, "--out", out])
        with open(os.path.join(out, "report.json")) as fh:
            rep = json.load(fh)
        assert rep["status"] in ("horizon", "exit", "overflow")
        assert rep["s_last"] > rep["s_first"]
        assert rep["N"] == 256

    def test_env_var_output(self, cfg, tmp_path, monkeypatch):
        target = str(tmp_path / "envout")
        monkeypatch.setenv("BLOWUPLAB_OUT", target)
        main(["simulate", "--config", cfg])
        assert os.path.exists(os.path.join(target, "report.json"))


class TestShoot:
    def test_results_table(self, cfg, tmp_path):
        out = str(tmp_path / "shoot")
        assert main(["shoot", "--config", cfg, "--out", out,
                     "--budget", "40"]) == 0
        with open(os.path.join(out, "results.csv")) as fh:
            lines = fh.read().strip().splitlines()
        assert lines[0] == "d10,d20,d22,outcome,exit_s,face,sign"
        with open(os.path.join(out, "report.json")) as fh:
            rep = json.load(fh)
        assert len(lines) - 1 == rep["evaluations"]
        assert rep["best"] is not None


class TestVerifyLemmas:
    def test_all_pass_on_defaults(self, cfg, tmp_path, capsys):
        out = str(tmp_path / "verify")
        assert main(["verify-lemmas", "--config", cfg, "--out", out]) == 0
        printed = capsys.readouterr().out
        assert "FAIL" not in printed
        with open(os.path.join(out, "report.json")) as fh:
            rep = json.load(fh)
        assert all(c["passed"] for c in rep)
        names = {c["name"] for c in rep}
        assert "outer_expansion_residuals" in names
        assert "quadratic_mode_coefficients" in names


class TestFinalProfile:
    def test_extraction_from_simulate(self, cfg, tmp_path):
        sim = str(tmp_path / "sim")
        main(["simulate", "--config", cfg, "--out", sim])
        out = str(tmp_path / "final")
        assert main(["final-profile", "--run", sim, "--out", out]) == 0
        data = read_csv(os.path.join(out, "final_profile.csv"))
        assert data.shape[1] == 5
        x0, ustar = data[:, 0], data[:, 3]
        assert np.all(np.diff(x0) > 0)
        assert np.all(ustar > 0)
        with open(os.path.join(out, "report.json")) as fh:
            rep = json.load(fh)
        assert rep["window"][0] < rep["window"][1]
        assert os.path.exists(os.path.join(out, "figures",
                                           "final_profile.png"))
