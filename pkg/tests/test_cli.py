import json
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import FIXTURES

from tvfrechet.cli import main, parse_grid, parse_range
from tvfrechet.errors import InvalidInput
from tvfrechet.sim import Stream, gen_spd


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_scalar(path, values):
    path.write_text("y\n" + "\n".join(repr(float(v)) for v in values) + "\n")
    return path


def step_data(tmp_path, noise=0.05, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0.0, 2.0, -1.0], 20) + rng.normal(scale=noise, size=60)
    return write_scalar(tmp_path / "y.csv", y)


class TestParsers:
    def test_grid(self):
        np.testing.assert_allclose(parse_grid("0.01:1:3"), [0.01, 0.1, 1])
        np.testing.assert_allclose(parse_grid("0:1:3:lin"), [0, 0.5, 1])

    @pytest.mark.parametrize("spec", ["1:2", "a:b:3", "0.1:1:3:cubic", "1:0.1:3"])
    def test_bad_grid(self, spec):
        with pytest.raises(InvalidInput):
            parse_grid(spec)

    def test_range(self):
        assert parse_range("0.5:2") == (0.5, 2.0)
        with pytest.raises(InvalidInput):
            parse_range("0.5")


class TestFit:
    def test_oracle_fixture(self, tmp_path, capsys):
        out = tmp_path / "fit.json"
        code, _, err = run(["fit", "--space", "euclidean",
                            "--input", FIXTURES / "euclid_steps.csv", "--lambda", 0.02,
                            "--max-cycles", 100_000, "--rel-tol", 1e-15, "--output", out],
                           capsys)
        assert code == 0
        exact = np.loadtxt(FIXTURES / "euclid_steps_lambda0.02_exact.csv", skiprows=1)
        doc = json.loads(out.read_text())
        assert np.max(np.abs(np.ravel(doc["fitted"]) - exact)) < 1e-4
        assert doc["command"] == "fit" and doc["lambda"] == 0.02 and doc["n"] == 20

    def test_document_fields(self, tmp_path, capsys):
        code, out, _ = run(["fit", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--lambda", 0.1, "--output", "-"], capsys)
        assert code == 0
        doc = json.loads(out)
        for key in ("schema_version", "space", "design", "fitted", "breakpoints", "jumps",
                    "jump_count", "objective_trace", "cycles_run", "converged", "alpha0"):
            assert key in doc
        assert doc["jumps"] == [19, 39] and doc["jump_count"] == 2
        assert len(doc["breakpoints"]) == doc["n"] + 1

    def test_roundtrip_at_zero_lambda(self, tmp_path, capsys):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        assert run(["fit", "--space", "euclidean", "--input", step_data(tmp_path),
                    "--lambda", 0.1, "--output", first], capsys)[0] == 0
        assert run(["fit", "--space", "euclidean", "--input", first, "--lambda", 0,
                    "--output", second], capsys)[0] == 0
        a, b = json.loads(first.read_text()), json.loads(second.read_text())
        assert a["fitted"] == b["fitted"] and a["design"] == b["design"]

    def test_scale_flag(self, tmp_path, capsys):
        data = step_data(tmp_path)
        _, out1, _ = run(["fit", "--space", "euclidean", "--input", data, "--lambda", 0.1,
                          "--output", "-"], capsys)
        _, out2, _ = run(["fit", "--space", "euclidean", "--input", data, "--lambda", 1.0,
                          "--scale", 10, "--output", "-"], capsys)
        a, b = json.loads(out1), json.loads(out2)
        np.testing.assert_allclose(10 * np.ravel(a["fitted"]), np.ravel(b["fitted"]),
                                   rtol=1e-9, atol=1e-9)
        assert a["jumps"] == b["jumps"]

    def test_spd_and_wasserstein(self, tmp_path, capsys, rng):
        from conftest import random_quantiles, random_spd

        spd = tmp_path / "spd.csv"
        spd.write_text("\n".join(",".join(repr(float(v)) for v in random_spd(rng).ravel()) for _ in range(8)))
        for space in ("spd-ai", "spd-le"):
            code, out, _ = run(["fit", "--space", space, "--input", spd, "--lambda", 0.05,
                                "--output", "-"], capsys)
            assert code == 0 and np.shape(json.loads(out)["fitted"]) == (8, 9)
        w = tmp_path / "w.csv"
        w.write_text("\n".join(",".join(repr(float(v)) for v in random_quantiles(rng, 50)) for _ in range(6)))
        code, out, _ = run(["fit", "--space", "wasserstein", "--input", w, "--lambda", 0.05,
                            "--output", "-"], capsys)
        assert code == 0 and np.shape(json.loads(out)["fitted"]) == (6, 50)


class TestErrors:
    def one_line_error(self, err, kind):
        lines = err.strip().splitlines()
        assert len(lines) == 1 and lines[0].startswith(f"tvfrechet: error: {kind}")

    def test_strict_nonconvergence_exits_3_with_partial_result(self, tmp_path, capsys):
        out = tmp_path / "fit.json"
        code, _, err = run(["fit", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--lambda", 0.1, "--max-cycles", 5, "--strict", "--output", out],
                           capsys)
        assert code == 3
        self.one_line_error(err, "convergence")
        doc = json.loads(out.read_text())
        assert doc["converged"] is False and doc["cycles_run"] == 5

    def test_nonstrict_nonconvergence_warns(self, tmp_path, capsys):
        code, _, err = run(["fit", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--lambda", 0.1, "--max-cycles", 5, "--output", tmp_path / "f.json"],
                           capsys)
        assert code == 0 and err.startswith("tvfrechet: warning:")

    @pytest.mark.parametrize("argv", [
        ["fit", "--space", "euclidean", "--lambda", "0.1", "--output", "-"],
        ["fit", "--space", "sphere", "--input", "x.csv", "--lambda", "0.1", "--output", "-"],
        ["fit", "--space", "euclidean", "--input", "x.csv", "--lambda", "abc", "--output", "-"],
        ["bogus"],
        [],
    ])
    def test_usage_errors_exit_2(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
        self.one_line_error(capsys.readouterr().err, "usage")

    def test_invalid_input_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1\n2\nnan\n")
        code, _, err = run(["fit", "--space", "euclidean", "--input", bad, "--lambda", 0.1,
                            "--output", "-"], capsys)
        assert code == 2
        self.one_line_error(err, "invalid")
        code, _, err = run(["fit", "--space", "euclidean", "--input", tmp_path / "missing.csv",
                            "--lambda", 0.1, "--output", "-"], capsys)
        assert code == 2
        self.one_line_error(err, "invalid")

    def test_negative_lambda(self, tmp_path, capsys):
        code, _, err = run(["fit", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--lambda", -1, "--output", "-"], capsys)
        assert code == 2
        self.one_line_error(err, "invalid")


class TestCv:
    def test_single_lambda_grid(self, tmp_path, capsys):
        code, out, _ = run(["cv", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--lambda-grid", "0.05:0.05:1", "--output", "-"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["cv"]["selected_lambda"] == 0.05 and doc["lambda"] == 0.05

    def test_seed_determinism(self, tmp_path, capsys):
        data = step_data(tmp_path, noise=0.5)
        argv = ["cv", "--space", "euclidean", "--input", data, "--lambda-grid", "0.001:1:8",
                "--folds", 4, "--seed", 3, "--output", "-"]
        first = json.loads(run(argv, capsys)[1])
        second = json.loads(run(argv, capsys)[1])
        assert first["cv"] == second["cv"] and first["fitted"] == second["fitted"]
        assert first["cv"]["selected_lambda"] in first["cv"]["grid"]
        assert len(first["cv"]["errors"]) == 8

    def test_too_many_folds(self, tmp_path, capsys):
        small = write_scalar(tmp_path / "s.csv", [1.0, 2.0, 3.0])
        code, _, err = run(["cv", "--space", "euclidean", "--input", small,
                            "--lambda-grid", "0.1:1:2", "--folds", 5, "--output", "-"], capsys)
        assert code == 2 and "folds" in err


class TestJumps:
    def test_zero_target_is_constant(self, tmp_path, capsys):
        code, out, _ = run(["jumps", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--target-jumps", 0, "--lambda-range", "0.0001:100",
                            "--output", "-"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["jump_count"] == 0 and doc["selection"]["exact"]
        assert np.ptp(np.ravel(doc["fitted"])) == 0.0

    def test_two_jump_spd(self, tmp_path, capsys):
        rng = Stream(7)
        mats = [gen_spd(level * np.eye(3), rng, noise_sd=0.05)
                for level in np.repeat([1.0, 2.0, 3.0], 20)]
        p = tmp_path / "spd.csv"
        p.write_text("\n".join(",".join(repr(float(v)) for v in m.ravel()) for m in mats) + "\n")
        code, out, _ = run(["jumps", "--space", "spd-ai", "--input", p, "--target-jumps", 2,
                            "--lambda-range", "0.0001:10", "--output", "-"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["jumps"] == [19, 39] and doc["selection"]["achieved_jumps"] == 2

    def test_infeasible_bracket_exits_2(self, tmp_path, capsys):
        code, _, err = run(["jumps", "--space", "euclidean", "--input", step_data(tmp_path),
                            "--target-jumps", 2, "--lambda-range", "50:100", "--output", "-"],
                           capsys)
        assert code == 2
        lines = err.strip().splitlines()
        assert len(lines) == 1 and "bracket" in lines[0]


class TestSimulate:
    def test_smoke(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"space": "wasserstein", "setting": "I", "n": 20,
                                   "replicates": 2, "seed": 1, "grid_size": 100,
                                   "lam_count": 5}))
        t0 = time.perf_counter()
        code, out, _ = run(["simulate", "--config", cfg, "--output", tmp_path / "out",
                            "--parallel", 1], capsys)
        assert time.perf_counter() - t0 < 60
        assert code == 0 and "RISE" in out
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(doc["rise"]) == 2
        assert (tmp_path / "out" / "replicates.csv").exists()

    def test_bad_config_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"space": "spd", "setting": "I", "n": 1}))
        code, _, err = run(["simulate", "--config", cfg, "--output", tmp_path / "o"], capsys)
        assert code == 2 and err.startswith("tvfrechet: error:")
        code, _, _ = run(["simulate", "--config", tmp_path / "nope.json",
                          "--output", tmp_path / "o"], capsys)
        assert code == 2


def test_console_script(tmp_path):
    exe = shutil.which("tvfrechet")
    cmd = [exe] if exe else [sys.executable, "-m", "tvfrechet.cli"]
    ok = subprocess.run(cmd + ["fit", "--space", "euclidean",
                               "--input", str(FIXTURES / "euclid_steps.csv"),
                               "--lambda", "0.02", "--output", "-"],
                        capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["n"] == 20
    bad = subprocess.run(cmd + ["fit"], capture_output=True, text=True)
    assert bad.returncode == 2 and bad.stderr.startswith("tvfrechet: error: usage:")
