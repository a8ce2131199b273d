import json

import numpy as np
import pytest

from spreadid import fileio
from spreadid.cli import cli_main


def run(argv):
    return cli_main([str(a) for a in argv])


class TestGenMatrix:
    def test_writes_container(self, tmp_path):
        out = tmp_path / "A.txt"
        assert run(["gen-matrix", "--L", 5, "--probing", "random-disc", "--seed", 3,
                    "--out", out]) == 0
        A = fileio.read_complex_matrix(out)
        assert A.shape == (5, 25)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run(["gen-matrix", "--L", 7, "--seed", 5, "--out", a])
        run(["gen-matrix", "--L", 7, "--seed", 5, "--out", b])
        assert a.read_bytes() == b.read_bytes()


class TestSimulateRecover:
    def test_end_to_end(self, tmp_path):
        sf_path = tmp_path / "sf.json"
        y_path = tmp_path / "y.txt"
        res_path = tmp_path / "res.json"
        assert run(["simulate", "--L", 5, "--E", 2, "--D", 2, "--gamma-card", 3,
                    "--seed", 4, "--probing", "alltop",
                    "--emit-spreading", sf_path, "--out", y_path]) == 0
        assert run(["recover", "--y", y_path, "--L", 5, "--E", 2, "--D", 2,
                    "--probing", "alltop", "--solver", "music", "--top-k", 3,
                    "--out", res_path]) == 0
        truth = json.loads(sf_path.read_text())
        result = json.loads(res_path.read_text())
        assert result["support_hat"] == truth["support"]

    def test_recover_from_ensemble_file(self, tmp_path):
        y_path = tmp_path / "y.txt"
        z_path = tmp_path / "z.txt"
        res_path = tmp_path / "res.json"
        run(["simulate", "--L", 5, "--E", 1, "--D", 1, "--gamma-card", 2,
             "--seed", 8, "--out", y_path])
        # assemble the ensemble manually, then feed it through --z
        from spreadid.model import GridParams
        from spreadid.pipeline import ReceivedSignal, assemble_Z, discrete_zak

        g = GridParams(L=5, E=1, D=1)
        y = fileio.read_complex_matrix(y_path).ravel()
        Z = assemble_Z(discrete_zak(ReceivedSignal(grid=g, y=y)), g)
        fileio.write_complex_matrix(z_path, Z.Z)
        assert run(["recover", "--z", z_path, "--L", 5, "--solver", "omp",
                    "--top-k", 2, "--out", res_path]) == 0
        assert len(json.loads(res_path.read_text())["support_hat"]) == 2

    def test_noisy_simulate(self, tmp_path):
        y0, y1 = tmp_path / "y0.txt", tmp_path / "y1.txt"
        run(["simulate", "--L", 5, "--gamma-card", 2, "--seed", 4, "--out", y0])
        run(["simulate", "--L", 5, "--gamma-card", 2, "--seed", 4,
             "--snr-db", 10, "--noise-seed", 1, "--out", y1])
        clean = fileio.read_complex_matrix(y0)
        noisy = fileio.read_complex_matrix(y1)
        assert not np.array_equal(clean, noisy)


class TestSweep:
    def test_csv_and_exit_codes(self, tmp_path):
        cfg = {
            "L": 5, "E": 2, "D": 2, "delta_grid": [0.4, 0.8],
            "trials": 3, "seed": 2, "solver": "music", "probing": "alltop",
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "r.csv"
        trials = tmp_path / "t.csv"
        assert run(["sweep", "--config", cfg_path, "--out", out,
                    "--emit-trials", trials]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("delta,ed,")
        assert len(lines) == 3
        assert len(trials.read_text().splitlines()) == 7

    def test_malformed_config_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        assert run(["sweep", "--config", bad, "--out", tmp_path / "r.csv"]) == 1
        err = capsys.readouterr().err
        assert "line" in err

    def test_unknown_field_is_validation_error(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"L": 5, "delta_grid": [0.4], "oops": 1}))
        assert run(["sweep", "--config", cfg_path, "--out", tmp_path / "r.csv"]) == 1

    def test_thread_invariance_bytes(self, tmp_path):
        cfg = {"L": 5, "E": 1, "D": 2, "delta_grid": [0.4], "trials": 4,
               "seed": 3, "solver": "omp"}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["sweep", "--config", cfg_path, "--out", a, "--threads", 1])
        run(["sweep", "--config", cfg_path, "--out", b, "--threads", 4])
        assert a.read_bytes() == b.read_bytes()


class TestStability:
    def test_prints_bounds(self, capsys, tmp_path):
        out = tmp_path / "b.json"
        assert run(["stability", "--L", 5, "--probing", "random-disc", "--seed", 3,
                    "--gamma", "0,0;1,2;3,4", "--out", out]) == 0
        text = capsys.readouterr().out
        assert "alpha" in text and "beta" in text
        doc = json.loads(out.read_text())
        assert 0 < doc["alpha"] <= doc["beta"]

    def test_bad_gamma_is_validation_error(self, tmp_path):
        assert run(["stability", "--L", 5, "--gamma", "9,9"]) == 1


class TestCounterexample:
    def test_byte_identical_rerun(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["counterexample", "--L", 5, "--K", 1, "--seed", 7, "--out", a]) == 0
        assert run(["counterexample", "--L", 5, "--K", 1, "--seed", 7, "--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()
        w = fileio.read_witness(a)
        assert len(w.gamma_prime) == 3

    def test_invalid_K(self, tmp_path):
        assert run(["counterexample", "--L", 5, "--K", 9, "--seed", 0,
                    "--out", tmp_path / "w.json"]) == 1


class TestSpark:
    def test_full_matrix(self, capsys):
        assert run(["spark", "--L", 5, "--probing", "random-disc", "--seed", 3]) == 0
        assert "spark = 6" in capsys.readouterr().out

    def test_row_restricted(self, capsys):
        assert run(["spark", "--L", 5, "--probing", "random-disc", "--seed", 3,
                    "--P", 3, "--max-cardinality", 4]) == 0
        assert "spark = 4" in capsys.readouterr().out
