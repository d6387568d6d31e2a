import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from covinterp.cli import main
from covinterp.covariance import covariance_from_psf, write_covariance_csv
from covinterp.harness import ExperimentConfig, run_scenario, thread_count
from covinterp.manifold import ArrayConfig
from covinterp.psf import standard_rect_psf

SMALL_WIDTH = {"M_list": [4], "num_probes": 4, "grid_size": 32}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_scenario_defaults(self):
        cfg = ExperimentConfig.from_dict("distortion_sweep")
        assert cfg.M_list == [25, 50, 100, 150, 200] and cfg.ul_source == "snapshots"
        assert ExperimentConfig.from_dict("aliasing").oversampling == 1.05

    def test_overrides_and_psf(self):
        cfg = ExperimentConfig.from_dict("width_sandwich", {"psf": "rect", "seed": 7, "solver": {"tol": 1e-9}})
        assert cfg.psf.to_dict() == standard_rect_psf().to_dict() and cfg.seeds == [7] and cfg.solver.tol == 1e-9

    def test_psf_dict(self):
        cfg = ExperimentConfig.from_dict("aliasing", {"psf": {"atoms": [{"xi": 0.1, "mass": 2.0}]}})
        assert np.allclose(cfg.psf.atoms, [[0.1, 1.0]])

    def test_unknown_key_and_scenario(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict("aliasing", {"antennas": 3})
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict("nope")

    def test_to_dict_is_json(self):
        json.dumps(ExperimentConfig.from_dict("interior_error").to_dict())


class TestThreads:
    def test_env(self, monkeypatch):
        monkeypatch.setenv("COVINTERP_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("COVINTERP_THREADS", "0")
        with pytest.raises(ValueError):
            thread_count()
        monkeypatch.delenv("COVINTERP_THREADS")
        assert thread_count() >= 1

    def test_thread_count_does_not_change_results(self, monkeypatch, tmp_path):
        outs = []
        for n in ("1", "4"):
            monkeypatch.setenv("COVINTERP_THREADS", n)
            rep = run_scenario(ExperimentConfig.from_dict("width_sandwich", SMALL_WIDTH))
            rep.write(tmp_path / n, figures=False)
            outs.append((tmp_path / n / "width_sandwich.csv").read_bytes())
        assert outs[0] == outs[1]


class TestScenarios:
    def test_rerun_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            cfg = ExperimentConfig.from_dict("distortion_sweep", {"M_list": [8, 12], "T": 300, "seeds": [1]})
            run_scenario(cfg).write(tmp_path / d, figures=False)
        for name in ("distortion_sweep.csv", "distortion_sweep_checks.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_dof_curves(self):
        rep = run_scenario(ExperimentConfig.from_dict("dof_curves"))
        assert rep.passed
        assert 0.48 <= rep.summary["argmax_rho"] <= 0.52

    def test_bound_curves_small(self):
        rep = run_scenario(ExperimentConfig.from_dict("bound_curves", {"M_list": [50]}))
        assert rep.checks["stirling_bracket_holds"]
        assert len(rep.rows) == 50

    def test_report_files_and_figure(self, tmp_path):
        rep = run_scenario(ExperimentConfig.from_dict("width_sandwich", SMALL_WIDTH))
        paths = rep.write(tmp_path)
        assert {p.rsplit("/", 1)[-1] for p in map(str, paths)} == {
            "width_sandwich.csv", "width_sandwich_checks.csv", "width_sandwich.png"}
        rows = read_rows(tmp_path / "width_sandwich.csv")
        assert rows[0][:4] == ["s", "on_lattice", "empirical_width", "width_bound"]
        assert len(rows) == 1 + 4 + 4
        assert "PASS" in rep.text_summary()


class TestCLI:
    def test_bounds(self, tmp_path, capsys):
        out = tmp_path / "b.csv"
        assert main(["bounds", "--M", "16", "--rho", "0.5", "--points", "20", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == ["s", "real_part", "imag_part", "bound", "asymptotic"] and len(rows) == 22
        assert (tmp_path / "b.png").exists()
        assert "PASS" in capsys.readouterr().out

    def test_interpolate(self, tmp_path):
        cfg = ArrayConfig(24, 0.9, 0.9)
        ul = tmp_path / "ul.csv"
        write_covariance_csv(ul, covariance_from_psf(standard_rect_psf(), cfg))
        psf = tmp_path / "psf.json"
        psf.write_text(standard_rect_psf().to_json())
        solver = tmp_path / "solver.json"
        solver.write_text(json.dumps({"tol": 1e-8}))
        out = tmp_path / "dl.csv"
        code = main(["interpolate", "--sigma-ul", str(ul), "--M", "24", "--rho", "0.9", "--nu", "0.9",
                     "--mode", "fraction=0.1", "--solver", str(solver), "--truth-psf", str(psf), "--out", str(out)])
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 25 and sum(int(r[5]) for r in rows[1:]) == 22
        assert max(float(r[6]) for r in rows[1:23]) <= 1e-2

    def test_interpolate_size_mismatch(self, tmp_path):
        ul = tmp_path / "ul.csv"
        write_covariance_csv(ul, covariance_from_psf(standard_rect_psf(), ArrayConfig(5, 0.9)))
        with pytest.raises(SystemExit):
            main(["interpolate", "--sigma-ul", str(ul), "--M", "6", "--rho", "0.9", "--nu", "0.9", "--out", str(tmp_path / "x")])

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["interpolate", "--sigma-ul", str(tmp_path / "none.csv"), "--M", "4", "--rho", "0.5",
                     "--nu", "0.9", "--out", str(tmp_path / "x.csv")]) == 2

    def test_run_with_config(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps(SMALL_WIDTH))
        code = main(["run", "width_sandwich", "--config", str(conf), "--out", str(tmp_path / "o"), "--no-figures"])
        assert code == 0
        assert (tmp_path / "o" / "width_sandwich_summary.txt").exists()
        assert not (tmp_path / "o" / "width_sandwich.png").exists()

    def test_failing_check_exit_code(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"M_list": [50], "exponent_tol": 1e-6}))
        assert main(["run", "bound_curves", "--config", str(conf), "--out", str(tmp_path), "--no-figures"]) == 1

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "covinterp", "bounds", "--M", "8", "--rho", "0.5", "--points", "8",
             "--out", str(tmp_path / "b.csv"), "--no-figures"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
