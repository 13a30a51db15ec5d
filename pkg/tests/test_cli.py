import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import betaln

from prodspec import cli
from prodspec.cli import EXIT_FAIL, EXIT_NUMERIC, EXIT_PASS, EXIT_USAGE, main
from prodspec.errors import NumericError


def read_csv(path):
    """Header and float rows of a CLI CSV, skipping ``#`` metadata lines."""
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(v) if v else np.nan for v in ln.split(",")] for ln in lines[1:]])
    return header, data


def run_json(tmp_path, argv, expect=EXIT_PASS):
    out = tmp_path / "out.json"
    assert main(argv + ["--out", str(out)]) == expect
    return json.loads(out.read_text())


class TestSample:
    def test_scaled_ginibre(self, tmp_path):
        out = tmp_path / "s.csv"
        argv = ["sample", "--ensemble", "ginibre", "--n", "1000", "--m", "3", "--scaling", "ginibre-power", "--seed", "7"]
        assert main(argv + ["--out", str(out)]) == EXIT_PASS
        header, data = read_csv(out)
        assert header == ["j", "log_sq_modulus", "angle", "scaled"]
        assert data.shape[0] == 1000
        scaled = data[:, 3]
        assert scaled.min() >= 0.0 and scaled.max() < 1.2

    def test_byte_identical_and_thread_independent(self, tmp_path):
        base = ["sample", "--ensemble", "truncated", "--n", "20", "--gaps", "2,3", "--reps", "10", "--angles", "--seed", "3"]
        paths = []
        for i, threads in enumerate(("1", "1", "4")):
            p = tmp_path / f"r{i}.csv"
            assert main(base + ["--threads", threads, "--out", str(p)]) == EXIT_PASS
            paths.append(p)
        a, b, c = (p.read_bytes() for p in paths)
        assert a == b == c

    def test_replicates_use_distinct_streams(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["sample", "--n", "5", "--reps", "10", "--seed", "1", "--out", str(out)]) == EXIT_PASS
        header, data = read_csv(out)
        assert header[0] == "replicate"
        blocks = [data[data[:, 0] == k, 2] for k in range(10)]
        assert all(b.size == 5 for b in blocks)
        assert len({tuple(b) for b in blocks}) == 10

    def test_metadata_echo_reproduces(self, tmp_path):
        out = tmp_path / "a.csv"
        assert main(["sample", "--n", "4", "--m", "2", "--seed", "11", "--out", str(out)]) == EXIT_PASS
        meta = [ln for ln in out.read_text().splitlines() if ln.startswith("#")]
        assert meta[0].startswith("# prodspec ")
        echoed = dict(ln[2:].split("=", 1) for ln in meta[1:])
        assert echoed["seed"] == "11" and echoed["n"] == "4" and echoed["m"] == "2"
        again = tmp_path / "b.csv"
        argv = ["sample"]
        for key in ("ensemble", "n", "m", "seed", "scaling", "reps"):
            argv += [f"--{key}", echoed[key]]
        assert main(argv + ["--out", str(again)]) == EXIT_PASS
        assert out.read_bytes() == again.read_bytes()

    def test_json_and_summary(self, tmp_path, capsys):
        doc = run_json(tmp_path, ["sample", "--n", "3", "--seed", "2", "--format", "json"])
        assert doc["metadata"]["params"]["seed"] == 2
        assert len(doc["replicates"][0]["log_sq_modulus"]) == 3
        err = capsys.readouterr().err
        assert "n=3" in err and "points/sec" in err

    def test_seventeen_digits(self, tmp_path):
        out = tmp_path / "d.csv"
        main(["sample", "--n", "3", "--seed", "5", "--out", str(out)])
        _, data = read_csv(out)
        line = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][1]
        assert float(line.split(",")[1]) == data[0, 1]
        assert len(line.split(",")[1].lstrip("-").replace(".", "").lstrip("0").split("e")[0]) >= 15

    @pytest.mark.parametrize(
        "argv",
        [
            ["sample", "--n", "3"],  # missing seed
            ["sample", "--n", "3", "--seed", "1", "--ensemble", "truncated"],  # missing gaps
            ["sample", "--n", "3", "--seed", "1", "--ensemble", "truncated", "--gaps", "1,2", "--m", "3"],
            ["sample", "--n", "0", "--seed", "1"],
            ["sample", "--n", "3", "--seed", "1", "--scaling", "truncated-power"],
            ["sample", "--n", "3", "--seed", "1", "--bogus"],
            ["nonsense"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == EXIT_USAGE

    def test_invalid_spec_names_invariant(self, capsys):
        assert main(["sample", "--n", "3", "--seed", "1", "--ensemble", "truncated", "--gaps", "0"]) == EXIT_USAGE
        assert "gap" in capsys.readouterr().err.lower()


class TestConfig:
    def test_file_supplies_values_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# experiment\nn = 6\nseed = 9\nensemble = truncated\ngaps = 2\nm = 2\nangles = true\n")
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["sample", "--config", str(cfg), "--out", str(a)]) == EXIT_PASS
        assert main(["sample", "--n", "6", "--seed", "9", "--ensemble", "truncated", "--gaps", "2", "--m", "2", "--angles", "--out", str(b)]) == EXIT_PASS
        assert a.read_bytes() == b.read_bytes()
        c = tmp_path / "c.csv"
        assert main(["sample", "--config", str(cfg), "--n", "4", "--out", str(c)]) == EXIT_PASS
        assert read_csv(c)[1].shape[0] == 4

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n=3\ncolour=blue\n")
        assert main(["sample", "--seed", "1", "--config", str(cfg)]) == EXIT_USAGE

    def test_malformed_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n 3\n")
        assert main(["sample", "--seed", "1", "--config", str(cfg)]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert main(["sample", "--seed", "1", "--n", "2", "--config", str(tmp_path / "none.cfg")]) == EXIT_USAGE


class TestLimit:
    def test_cor3_table(self, tmp_path):
        doc = run_json(tmp_path, ["limit", "--regime", "cor3", "--beta", "2", "--points", "101"])
        t = doc["table"]
        for y, v in zip(t["x"], t["F_inverse"]):
            if 0.0 < y <= 1.0:
                assert v == pytest.approx(1.0 / (1.0 - math.log(y)), rel=1e-10)
        assert doc["metadata"]["params"]["beta"] == 2.0

    def test_cor1_arc_law(self, tmp_path):
        doc = run_json(tmp_path, ["limit", "--regime", "cor1", "--alphas", "1,1"])
        assert doc["regime"] == "ArcLaw"
        assert doc["table"].get("f_star") is None and doc["table"].get("planar_density") is None

    def test_cor4_identity(self, tmp_path):
        doc = run_json(tmp_path, ["limit", "--regime", "cor4", "--points", "11"])
        assert np.allclose(doc["table"]["F_inverse"], doc["table"]["x"], atol=1e-12)

    def test_beta_inf_and_csv(self, tmp_path):
        out = tmp_path / "l.csv"
        assert main(["limit", "--regime", "cor3", "--beta", "inf", "--format", "csv", "--points", "21", "--out", str(out)]) == 0
        header, data = read_csv(out)
        assert header[:3] == ["x", "F", "F_inverse"]
        assert "beta=inf" in out.read_text()

    def test_cor2_from_file(self, tmp_path):
        q = tmp_path / "q.csv"
        t = np.linspace(0, 1, 101)
        q.write_text("t,q\n" + "\n".join(f"{a:.17g},{a / 2:.17g}" for a in t) + "\n")
        doc = run_json(tmp_path, ["limit", "--regime", "cor2", "--q-file", str(q), "--points", "21"])
        ref = run_json(tmp_path, ["limit", "--regime", "cor2", "--q", "linear:0.5", "--points", "21"])
        assert np.allclose(doc["table"]["F_inverse"], ref["table"]["F_inverse"], atol=1e-9)

    @pytest.mark.parametrize(
        "argv",
        [
            ["limit"],
            ["limit", "--regime", "cor1"],
            ["limit", "--regime", "cor3"],
            ["limit", "--regime", "cor3", "--beta", "-1"],
            ["limit", "--regime", "cor2", "--q", "cubic:1"],
            ["limit", "--regime", "cor1", "--alphas", "2"],
        ],
    )
    def test_usage(self, argv, tmp_path, capsys):
        assert main(argv + ["--out", str(tmp_path / "x.json")]) == EXIT_USAGE


class TestValidate:
    def test_ginibre_pass(self, tmp_path):
        doc = run_json(tmp_path, ["validate", "--n", "6", "--m", "2", "--draws", "1500", "--seed", "5"])
        assert doc["pass"] is True
        assert doc["statistic"] <= 0.03
        assert doc["sample_sizes"] == [9000, 9000]
        assert doc["seed"] == 5 and doc["threshold"] == 0.03

    def test_negative_control_fails(self, tmp_path):
        argv = ["validate", "--n", "5", "--m", "2", "--draws", "300", "--seed", "6"]
        argv += ["--oracle-ensemble", "truncated", "--oracle-gaps", "2,3"]
        doc = run_json(tmp_path, argv, expect=EXIT_FAIL)
        assert doc["pass"] is False and doc["statistic"] > 0.5

    def test_spectra_export_and_threads(self, tmp_path):
        spectra = tmp_path / "spec.csv"
        argv = ["validate", "--ensemble", "truncated", "--n", "3", "--gaps", "1,2", "--draws", "600", "--seed", "8"]
        one = run_json(tmp_path, argv + ["--spectra-out", str(spectra)])
        four = run_json(tmp_path, argv + ["--threads", "4"])
        assert one["statistic"] == four["statistic"]
        header, data = read_csv(spectra)
        assert header == ["replicate", "re", "im", "log_sq_modulus", "argument"]
        assert data.shape == (1800, 5)
        assert np.all(data[:, 3] <= 1e-10)

    def test_guard(self, tmp_path, capsys):
        assert main(["validate", "--n", "65", "--seed", "1", "--draws", "1"]) == EXIT_USAGE
        assert "refuses" in capsys.readouterr().err


class TestKstest:
    def test_circular_law(self, tmp_path):
        argv = ["kstest", "--n", "2000", "--scaling", "ginibre-power", "--regime", "ginibre", "--seed", "1"]
        doc = run_json(tmp_path, argv)
        assert doc["pass"] and doc["statistic"] <= 0.05 and doc["angular_statistic"] <= 0.05

    def test_cor1(self, tmp_path):
        argv = ["kstest", "--ensemble", "truncated", "--n", "2000", "--gaps", "2000,2000", "--scaling", "truncated-power"]
        argv += ["--gamma", "2", "--regime", "cor1", "--alphas", "0.5,0.5", "--seed", "2"]
        doc = run_json(tmp_path, argv)
        assert doc["pass"] and doc["statistic"] <= 0.05

    def test_cor3_beta_one(self, tmp_path):
        argv = ["kstest", "--ensemble", "truncated", "--n", "1000", "--m", "1000", "--gaps", "1"]
        argv += ["--scaling", "truncated-power", "--gamma", "2", "--regime", "cor3", "--beta", "1", "--seed", "3"]
        argv += ["--threshold", "0.06"]
        doc = run_json(tmp_path, argv)
        assert doc["pass"] and doc["statistic"] <= 0.06

    def test_wrong_limit_fails(self, tmp_path):
        argv = ["kstest", "--ensemble", "truncated", "--n", "2000", "--gaps", "2000,2000", "--scaling", "truncated-power"]
        argv += ["--gamma", "2", "--regime", "cor4", "--seed", "2"]
        doc = run_json(tmp_path, argv, expect=EXIT_FAIL)
        assert doc["statistic"] > 0.05

    def test_pairing_mismatch(self, tmp_path, capsys):
        argv = ["kstest", "--n", "50", "--scaling", "ginibre-power", "--regime", "cor4", "--seed", "1"]
        assert main(argv) == EXIT_USAGE
        assert main(["kstest", "--n", "50", "--regime", "ginibre", "--seed", "1"]) == EXIT_USAGE


class TestKernel:
    def test_ginibre_ck(self, tmp_path):
        out = tmp_path / "k.csv"
        assert main(["kernel", "--weight", "ginibre", "--n", "5", "--out", str(out)]) == EXIT_PASS
        header, ck = read_csv(tmp_path / "k.ck.csv")
        assert header == ["k", "log_c", "c"]
        for k, _, c in ck:
            assert c == pytest.approx(math.pi * math.factorial(int(k)), rel=1e-14)

    def test_truncated_ck_and_grid_mass(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["kernel", "--weight", "truncated", "--l", "3", "--n", "4", "--out", str(out)]) == EXIT_PASS
        _, ck = read_csv(tmp_path / "t.ck.csv")
        for k, log_c, _ in ck:
            assert log_c == pytest.approx(math.log(3) + betaln(k + 1, 3), abs=1e-13)
        _, grid = read_csv(out)
        assert abs(np.trapezoid(grid[:, 1], grid[:, 0]) - 1.0) < 1e-4
        assert "log_C=" in out.read_text()

    def test_ginibre_grid_mass(self, tmp_path):
        out = tmp_path / "g.csv"
        assert main(["kernel", "--n", "5", "--out", str(out)]) == EXIT_PASS
        _, grid = read_csv(out)
        assert abs(np.trapezoid(grid[:, 1], grid[:, 0]) - 1.0) < 1e-4
        assert np.allclose(2 * np.pi * grid[:, 0] * grid[:, 2], grid[:, 1], rtol=1e-10, atol=1e-300)

    def test_tabulated_json(self, tmp_path):
        w = tmp_path / "w.csv"
        x = np.linspace(0, 1, 11)
        w.write_text("x,phi\n" + "\n".join(f"{a},{1 - a}" for a in x) + "\n")
        doc = run_json(tmp_path, ["kernel", "--weight", "tabulated", "--weight-file", str(w), "--n", "3", "--format", "json"])
        assert len(doc["ck"]["c"]) == 3
        # c_0 = 2 pi int_0^1 x (1 - x) dx = pi / 3
        assert doc["ck"]["c"][0] == pytest.approx(math.pi / 3, rel=1e-13)

    def test_usage(self, tmp_path):
        assert main(["kernel", "--weight", "tabulated", "--n", "3"]) == EXIT_USAGE
        assert main(["kernel"]) == EXIT_USAGE
        bad = tmp_path / "bad.csv"
        bad.write_text("x,phi\n0,1\n0,1\n")
        assert main(["kernel", "--weight", "tabulated", "--weight-file", str(bad), "--n", "2"]) == EXIT_USAGE


class TestExitCodes:
    def test_numeric_error_maps_to_three(self, monkeypatch, capsys):
        def boom(args):
            raise NumericError("no convergence", {"sweeps": 9})

        monkeypatch.setattr(cli, "cmd_limit", boom)
        monkeypatch.setattr(cli, "build_parser", _parser_with(cli.build_parser, "limit", boom))
        assert main(["limit", "--regime", "cor4"]) == EXIT_NUMERIC
        assert "sweeps" in capsys.readouterr().err

    def test_console_script(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "prodspec.cli", "limit", "--regime", "cor4", "--points", "3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["regime"] == "CircularLaw"
        proc = subprocess.run([sys.executable, "-m", "prodspec.cli", "sample", "--n", "2"], capture_output=True, text=True)
        assert proc.returncode == EXIT_USAGE


def _parser_with(build, command, func):
    def patched():
        parser = build()
        parser._subparsers._group_actions[0].choices[command].set_defaults(func=func)
        return parser

    return patched
