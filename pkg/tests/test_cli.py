import json

import numpy as np
import pytest

from eigencircuit.cli import main
from eigencircuit.linalg import write_matrix_csv


@pytest.fixture
def uniform_matrix_csv(tmp_path):
    path = tmp_path / "matrix.csv"
    write_matrix_csv(path, np.full((3, 3), 2.1))
    return path


@pytest.fixture
def edges_file(tmp_path):
    path = tmp_path / "edges.txt"
    path.write_text(
        "# tiny graph\n"
        "1 2\n2 3\n3 1\n1 3\n4 1\nn 5\n",
        encoding="utf-8",
    )
    return path


class TestSimulateCommand:
    def test_uniform_matrix_converges(self, uniform_matrix_csv, tmp_path,
                                      capsys):
        out = tmp_path / "out"
        code = main(["simulate", str(uniform_matrix_csv), "--delta", "0.01",
                     "--out", str(out), "--json"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["epsilon"] <= 1e-3
        assert summary["computing_time_s"] > 0
        assert summary["lambda_h"] > 0
        assert (out / "trace.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "system.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["parameters"]["delta"] == 0.01
        assert manifest["parameters"]["gbw_hz"] == 8e6
        assert list(manifest["inputs"].values())[0].startswith("sha256:")

    def test_trace_round_trips(self, uniform_matrix_csv, tmp_path):
        out = tmp_path / "out"
        main(["simulate", str(uniform_matrix_csv), "--out", str(out),
              "--json"])
        data = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == "time_s,x_1,x_2,x_3"
        assert data.shape[1] == 4

    def test_negative_delta_reports_no_convergence(self, uniform_matrix_csv,
                                                   tmp_path):
        code = main(["simulate", str(uniform_matrix_csv), "--delta", "-0.01",
                     "--tmax", "3e-5", "--out", str(tmp_path / "o"),
                     "--json"])
        assert code == 2

    def test_missing_file_is_usage_error(self, tmp_path):
        code = main(["simulate", str(tmp_path / "nope.csv"), "--json"])
        assert code == 1

    def test_parse_error_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0\n1.0,oops\n", encoding="utf-8")
        code = main(["simulate", str(bad), "--json"])
        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_defaults_recorded_in_manifest(self, uniform_matrix_csv,
                                           tmp_path):
        out = tmp_path / "out"
        main(["simulate", str(uniform_matrix_csv), "--out", str(out),
              "--json"])
        params = json.loads((out / "manifest.json").read_text())["parameters"]
        assert params["alpha"] == 0.05
        assert params["l0"] == 1e5
        assert params["gbw_hz"] == 8e6
        assert params["vsupp"] == 1.0
        assert params["x0"] == 0.001
        assert params["tmax"] == 1e-3

    def test_rerun_reproduces_outputs(self, uniform_matrix_csv, tmp_path):
        out = tmp_path / "out"
        argv = ["simulate", str(uniform_matrix_csv), "--out", str(out),
                "--json"]
        main(argv)
        first = (out / "trace.csv").read_bytes()
        main(argv)
        assert (out / "trace.csv").read_bytes() == first


class TestSweepCommand:
    def test_delta_mode_monotone_times(self, tmp_path):
        mpath = tmp_path / "m.csv"
        from eigencircuit.experiments import gen_random_matrix

        write_matrix_csv(mpath, gen_random_matrix(3, seed=0))
        out = tmp_path / "sweepout"
        code = main(["sweep", "--mode", "delta", "--matrix", str(mpath),
                     "--deltas", "0.003,0.012,0.048", "--out-dir", str(out),
                     "--json"])
        assert code == 0
        rows = (out / "rows.csv").read_text().strip().splitlines()
        assert rows[0].startswith("n,delta,trial,seed")
        times = [float(line.split(",")[4]) for line in rows[1:]]
        assert times == sorted(times, reverse=True)
        agg = json.loads((out / "aggregate.json").read_text())
        assert agg["meta"]["kind"] == "delta"

    def test_size_mode_and_resume(self, tmp_path, capsys):
        out = tmp_path / "szout"
        argv = ["sweep", "--mode", "size", "--sizes", "3,4", "--trials", "2",
                "--deltas", "0.02", "--seed", "9", "--out-dir", str(out),
                "--json"]
        assert main(argv) == 0
        full = (out / "rows.csv").read_text()
        capsys.readouterr()

        # truncate the row file to simulate an interrupted run, then resume
        lines = full.strip().splitlines()
        (out / "rows.csv").write_text("\n".join(lines[:3]) + "\n",
                                      encoding="utf-8")
        assert main(argv + ["--resume"]) == 0
        resumed = (out / "rows.csv").read_text()
        assert resumed == full
        assert "resuming: 2 rows already done" in capsys.readouterr().err

    def test_resume_refuses_changed_parameters(self, tmp_path):
        out = tmp_path / "szout"
        argv = ["sweep", "--mode", "size", "--sizes", "3", "--trials", "1",
                "--deltas", "0.02", "--out-dir", str(out), "--json"]
        assert main(argv) == 0
        changed = ["sweep", "--mode", "size", "--sizes", "3", "--trials",
                   "2", "--deltas", "0.02", "--out-dir", str(out), "--json",
                   "--resume"]
        assert main(changed) == 1

    def test_variation_mode(self, tmp_path):
        from eigencircuit.experiments import gen_random_matrix

        mpath = tmp_path / "m.csv"
        write_matrix_csv(mpath, gen_random_matrix(4, seed=2))
        out = tmp_path / "varout"
        code = main(["sweep", "--mode", "variation", "--matrix", str(mpath),
                     "--delta-max", "0.02", "--trials", "3", "--out-dir",
                     str(out), "--json"])
        assert code == 0
        rows = (out / "rows.csv").read_text().strip().splitlines()
        assert len(rows) == 1 + 4  # header + baseline + 3 trials

    def test_delta_mode_requires_matrix(self, tmp_path):
        code = main(["sweep", "--mode", "delta", "--out-dir",
                     str(tmp_path / "x"), "--json"])
        assert code == 1

    def test_size_range_syntax(self, tmp_path):
        out = tmp_path / "rngout"
        code = main(["sweep", "--mode", "size", "--sizes", "3..5..2",
                     "--trials", "1", "--deltas", "0.04", "--out-dir",
                     str(out), "--json"])
        assert code == 0
        rows = (out / "rows.csv").read_text().strip().splitlines()[1:]
        assert sorted({int(r.split(",")[0]) for r in rows}) == [3, 5]


class TestPagerankCommand:
    def test_end_to_end(self, edges_file, tmp_path, capsys):
        out = tmp_path / "prout"
        code = main(["pagerank", str(edges_file), "--delta", "0.01",
                     "--topk", "3", "--out", str(out), "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 5
        assert doc["links"] == 5
        assert len(doc["top"]) == 3
        ranking = (out / "ranking.csv").read_text().strip().splitlines()
        assert ranking[0] == "rank,page,score"
        assert len(ranking) == 6
        result = json.loads((out / "result.json").read_text())
        assert sum(result["scores"]) == pytest.approx(1.0, abs=1e-9)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["p"] == 0.85

    def test_subset_pipeline(self, edges_file, tmp_path, capsys):
        code = main(["pagerank", str(edges_file), "--subset-n", "4",
                     "--out", str(tmp_path / "s"), "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 4

    def test_bad_edge_file(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2 3\n", encoding="utf-8")
        assert main(["pagerank", str(bad), "--json"]) == 1


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == 1
