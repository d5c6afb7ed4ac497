import json

import numpy as np
import pytest

from eetsim.cli import main
from eetsim.scenarios import fmo_model_path


def run_cli(*args):
    return main(list(args))


class TestRun:
    def test_chain_two_engines(self, tmp_path, capsys):
        code = run_cli(
            "run", "--chain", "2,V=1,eps=0,gamma=0.5,start=0",
            "--engines", "lindblad,classical", "--grid", "0:2:21",
            "--out", str(tmp_path),
        )
        assert code == 0
        assert (tmp_path / "lindblad.csv").exists()
        assert (tmp_path / "classical.csv").exists()

    def test_reruns_byte_identical(self, tmp_path):
        args = ["run", "--chain", "2,V=1,eps=2,gamma=1,start=0",
                "--engines", "sse", "--grid", "0:1:6", "--ntraj", "50",
                "--seed", "7", "--out"]
        run_cli(*args, str(tmp_path / "a"))
        run_cli(*args, str(tmp_path / "b"))
        assert (tmp_path / "a/sse.csv").read_bytes() == (tmp_path / "b/sse.csv").read_bytes()

    def test_json_format(self, tmp_path):
        code = run_cli("run", "--chain", "2,V=1,eps=0,gamma=0,start=0",
                       "--engines", "lindblad", "--grid", "0:1:6",
                       "--format", "json", "--out", str(tmp_path))
        assert code == 0
        doc = json.loads((tmp_path / "lindblad.json").read_text())
        assert doc["engine"] == "lindblad"
        assert len(doc["t"]) == 6

    def test_bessel_requires_zero_gamma(self, tmp_path, capsys):
        code = run_cli("run", "--chain", "2,V=1,eps=0,gamma=1,start=0",
                       "--engines", "bessel", "--out", str(tmp_path))
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_bessel_requires_chain(self, tmp_path):
        code = run_cli("run", "--model", str(fmo_model_path()), "--gamma", "0",
                       "--engines", "bessel", "--grid", "0:0.01:3", "--out", str(tmp_path))
        assert code == 2

    def test_bessel_matches_reference(self, tmp_path):
        # short times on a 9-site chain: boundary bleed-through stays tiny
        code = run_cli("run", "--chain", "9,V=1,eps=0,gamma=0,start=4",
                       "--engines", "bessel,lindblad", "--grid", "0:0.5:6",
                       "--out", str(tmp_path))
        assert code == 0
        from eetsim import read_timeseries
        bes = read_timeseries(tmp_path / "bessel.csv")
        lin = read_timeseries(tmp_path / "lindblad.csv")
        diff = np.abs(bes.channels["population:4"] - lin.channels["population:4"]).max()
        assert diff < 1e-5

    def test_fmo_model_run(self, tmp_path):
        code = run_cli("run", "--model", str(fmo_model_path()),
                       "--engines", "lindblad", "--grid", "0:0.02:5",
                       "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "lindblad.csv").exists()

    def test_unknown_engine(self, tmp_path, capsys):
        code = run_cli("run", "--chain", "2,V=1", "--engines", "magic",
                       "--out", str(tmp_path))
        assert code == 2

    def test_malformed_chain(self, tmp_path):
        assert run_cli("run", "--chain", "two,V=1", "--engines", "lindblad",
                       "--out", str(tmp_path)) == 2
        assert run_cli("run", "--chain", "2,what=1", "--engines", "lindblad",
                       "--out", str(tmp_path)) == 2

    def test_scenario_required(self, tmp_path):
        assert run_cli("run", "--engines", "lindblad", "--out", str(tmp_path)) == 2

    def test_both_scenarios_rejected(self, tmp_path):
        assert run_cli("run", "--chain", "2,V=1", "--model", "x.json",
                       "--engines", "lindblad", "--out", str(tmp_path)) == 2

    def test_step_too_large_is_numeric_failure(self, tmp_path, capsys):
        code = run_cli("run", "--chain", "2,V=1,eps=40,gamma=1,start=0",
                       "--engines", "lindblad", "--grid", "0:10:101",
                       "--dt", "0.05", "--out", str(tmp_path))
        assert code == 1
        err = capsys.readouterr().err
        assert "engine=lindblad" in err and "StepTooLarge" in err

    def test_mixed_initial_rejects_sse(self, tmp_path):
        doc = {
            "units": "V",
            "sites": [{"label": "a", "energy": 1.0}, {"label": "b", "energy": 1.0}],
            "couplings": [{"i": 0, "j": 1, "value": 0.2}],
            "gamma": 0.1,
            "initial_state": {"mixture": [
                {"weight": 0.5, "amplitudes": [1.0, 0.0]},
                {"weight": 0.5, "amplitudes": [0.0, 1.0]},
            ]},
        }
        path = tmp_path / "mixed.json"
        path.write_text(json.dumps(doc))
        code = run_cli("run", "--model", str(path), "--engines", "sse",
                       "--grid", "0:1:6", "--ntraj", "10", "--out", str(tmp_path))
        assert code == 2

    def test_outdir_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EETSIM_OUTDIR", str(tmp_path / "envdir"))
        code = run_cli("run", "--chain", "2,V=1,eps=0,gamma=0,start=0",
                       "--engines", "lindblad", "--grid", "0:1:6")
        assert code == 0
        assert (tmp_path / "envdir" / "lindblad.csv").exists()


class TestCompare:
    def make_pair(self, tmp_path):
        # V = 0: both engines reduce to the same dephasing dynamics
        run_cli("run", "--chain", "2,V=0,eps=0,gamma=0.5,start=0",
                "--engines", "lindblad,classical", "--grid", "0:2:21",
                "--out", str(tmp_path))
        return tmp_path / "lindblad.csv", tmp_path / "classical.csv"

    def test_identical_files_zero_report(self, tmp_path):
        a, _ = self.make_pair(tmp_path)
        report = tmp_path / "report.json"
        assert run_cli("compare", str(a), str(a), "--report", str(report)) == 0
        doc = json.loads(report.read_text())
        assert doc["overall_max"] == 0.0

    def test_engines_compared_with_ignored_channels(self, tmp_path):
        a, b = self.make_pair(tmp_path)
        report = tmp_path / "report.json"
        assert run_cli("compare", str(a), str(b), "--report", str(report)) == 0
        doc = json.loads(report.read_text())
        assert doc["ignored_channels"] == ["norm_factor"]
        assert doc["overall_max"] < 1e-8  # V=0-free dimer: engines agree here

    def test_missing_file(self, tmp_path):
        a, _ = self.make_pair(tmp_path)
        assert run_cli("compare", str(a), str(tmp_path / "absent.csv")) == 2

    def test_report_byte_identical_across_runs(self, tmp_path):
        a, b = self.make_pair(tmp_path)
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        run_cli("compare", str(a), str(b), "--report", str(r1))
        run_cli("compare", str(a), str(b), "--report", str(r2))
        assert r1.read_bytes() == r2.read_bytes()

    def test_grid_mismatch(self, tmp_path):
        a, _ = self.make_pair(tmp_path)
        run_cli("run", "--chain", "2,V=1,eps=0,gamma=0.5,start=0",
                "--engines", "lindblad", "--grid", "0:2:11",
                "--out", str(tmp_path / "other"))
        assert run_cli("compare", str(a), str(tmp_path / "other/lindblad.csv"),
                       "--report", str(tmp_path / "r.json")) == 2


class TestRca:
    def test_chain_pass(self, capsys):
        assert run_cli("rca", "--chain", "29,V=1,eps=40,gamma=1,start=14") == 0
        assert "pass" in capsys.readouterr().out

    def test_chain_fail(self, capsys):
        assert run_cli("rca", "--chain", "29,V=1,eps=1,gamma=20,start=14") == 1
        assert "fail" in capsys.readouterr().out

    def test_fmo_passes(self, capsys):
        assert run_cli("rca", "--model", str(fmo_model_path())) == 0
        out = capsys.readouterr().out
        assert "pass" in out

    def test_gamma_override(self, capsys):
        # an absurd dephasing rate breaks the weak-noise condition
        assert run_cli("rca", "--model", str(fmo_model_path()), "--gamma", "20000") == 1
