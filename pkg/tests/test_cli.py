import subprocess
import sys

import numpy as np
import pytest

from calmon import EProcess, beta_betting_stream
from calmon.cli import main


def run_cli(args, stdin_text=None):
    proc = subprocess.run(
        [sys.executable, "-m", "calmon.cli", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
    )
    return proc


def write_values(path, values, header=None):
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        for v in values:
            if isinstance(v, tuple):
                fh.write(",".join(str(x) for x in v) + "\n")
            else:
                fh.write(f"{v}\n")


class TestMonitor:
    def test_warmup_rows(self, tmp_path):
        src = tmp_path / "values.csv"
        write_values(src, [0.1, 0.5, 0.9, 0.3, 0.7])
        out = tmp_path / "out.csv"
        code = main(
            ["monitor", "--method", "beta", "--hypothesis", "cuf",
             "--input", str(src), "--output", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,value,e_step,e_merged,running_max,p_value,tau_statistic"
        assert len(lines) == 6
        for line in lines[1:]:
            assert line.split(",")[2] == "1"

    def test_incompatible_method_hypothesis(self, tmp_path):
        proc = run_cli(["monitor", "--method", "betabinomial", "--hypothesis", "cuf"])
        assert proc.returncode == 2
        assert "incompatible" in proc.stderr

    def test_empty_input(self, tmp_path):
        src = tmp_path / "empty.csv"
        src.write_text("")
        out = tmp_path / "out.csv"
        code = main(
            ["monitor", "--method", "beta", "--hypothesis", "cuf",
             "--input", str(src), "--output", str(out)]
        )
        assert code == 0
        assert out.read_text().strip().splitlines() == [
            "t,value,e_step,e_merged,running_max,p_value,tau_statistic"
        ]

    def test_header_autodetected(self, tmp_path):
        src = tmp_path / "values.csv"
        write_values(src, [0.2, 0.4], header="value")
        out = tmp_path / "out.csv"
        main(["monitor", "--method", "beta", "--hypothesis", "cuf",
              "--input", str(src), "--output", str(out)])
        assert len(out.read_text().strip().splitlines()) == 3

    def test_malformed_row_skipped_with_diagnostic(self, tmp_path):
        src = tmp_path / "values.csv"
        src.write_text("0.5\nnot-a-number\n0.25\n")
        proc = run_cli(
            ["monitor", "--method", "beta", "--hypothesis", "cuf", "--input", str(src)]
        )
        assert proc.returncode == 0
        assert "line 2" in proc.stderr
        assert len(proc.stdout.strip().splitlines()) == 3  # header + 2 rows

    def test_malformed_row_strict_aborts(self, tmp_path):
        src = tmp_path / "values.csv"
        src.write_text("0.5\nnot-a-number\n0.25\n")
        proc = run_cli(
            ["monitor", "--method", "beta", "--hypothesis", "cuf",
             "--input", str(src), "--strict"]
        )
        assert proc.returncode == 1
        assert "line 2" in proc.stderr

    def test_matches_library_stream(self, tmp_path):
        rng = np.random.default_rng(21)
        values = rng.random(40)
        src = tmp_path / "values.csv"
        write_values(src, values)
        out = tmp_path / "out.csv"
        main(["monitor", "--method", "beta", "--hypothesis", "cuf", "--lag", "2",
              "--input", str(src), "--output", str(out)])
        es = beta_betting_stream(values, lag=2)
        process = EProcess(lag=2)
        lines = out.read_text().strip().splitlines()[1:]
        for line, e in zip(lines, es):
            rec = process.push(e)
            fields = line.split(",")
            # the printed rows ARE the library values at the 12-digit format
            assert fields[2] == format(e, ".12g")
            assert fields[3] == format(rec.e_merged, ".12g")
            assert fields[4] == format(rec.running_max, ".12g")
            assert fields[5] == format(rec.p_value, ".12g")

    def test_quantile_two_columns(self, tmp_path):
        src = tmp_path / "pairs.csv"
        write_values(src, [(0.1, 0.15), (0.3, 0.35), (0.72, 0.77)])
        out = tmp_path / "out.csv"
        code = main(["monitor", "--method", "quantile-pair", "--hypothesis", "quantile",
                     "--input", str(src), "--output", str(out)])
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header.startswith("t,value_upper,value_lower")

    def test_quantile_single_column_is_parse_error(self, tmp_path):
        src = tmp_path / "pairs.csv"
        write_values(src, [0.1, 0.3])
        proc = run_cli(
            ["monitor", "--method", "quantile-pair", "--hypothesis", "quantile",
             "--input", str(src), "--strict"]
        )
        assert proc.returncode == 1
        assert "expected 2 column" in proc.stderr


class TestTest:
    def test_ks_on_uniform(self, tmp_path):
        rng = np.random.default_rng(22)
        src = tmp_path / "values.csv"
        write_values(src, rng.random(360))
        out = tmp_path / "res.csv"
        main(["test", "--method", "ks", "--hypothesis", "cuf",
              "--input", str(src), "--output", str(out)])
        method, n, stat, p = out.read_text().strip().split(",")
        assert method == "ks" and int(n) == 360
        assert 0.001 <= float(p) <= 1.0

    def test_constant_high_values_reject(self, tmp_path):
        src = tmp_path / "values.csv"
        write_values(src, [0.99] * 360)
        out = tmp_path / "res.csv"
        main(["test", "--method", "beta", "--hypothesis", "cuf",
              "--input", str(src), "--output", str(out)])
        method, n, stat, p = out.read_text().strip().split(",")
        assert float(stat) >= 20.0
        assert float(p) <= 0.05

    def test_duf_chisq(self, tmp_path):
        rng = np.random.default_rng(23)
        src = tmp_path / "ranks.csv"
        write_values(src, rng.integers(1, 22, 360))
        out = tmp_path / "res.csv"
        main(["test", "--method", "chisq", "--hypothesis", "duf:21",
              "--input", str(src), "--output", str(out)])
        method, n, stat, p = out.read_text().strip().split(",")
        assert method == "chisq"
        assert 0.0 <= float(p) <= 1.0


class TestSimulate:
    def test_single_cell_single_rep(self, tmp_path):
        out = tmp_path / "grid.csv"
        code = main(["simulate", "--method", "ks", "--grid", "0:0:1",
                     "--reps", "1", "--output", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "epsilon,delta,test,n,alpha,reps,reject_rate"
        assert len(lines) == 2
        assert lines[1].split(",")[-1] in ("0", "1")

    def test_grid_row_cardinality(self, tmp_path):
        out = tmp_path / "grid.csv"
        main(["simulate", "--method", "ks,chisq", "--grid=-0.5:0.5:11",
             "--reps", "1", "--n", "60", "--output", str(out)])
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 11 * 11 * 2

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "--method", "beta,ks", "--grid", "0:0.3:2,0:0:1",
                "--reps", "5", "--n", "80", "--seed", "7"]
        main([*args, "--output", str(out1)])
        main([*args, "--jobs", "2", "--output", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_rate_round_trip_at_12_digits(self, tmp_path):
        from calmon import run_power_grid

        out = tmp_path / "grid.csv"
        main(["simulate", "--method", "beta,ks", "--grid", "0:0.4:2,0:0:1",
              "--reps", "6", "--n", "80", "--seed", "3", "--output", str(out)])
        grid = run_power_grid(
            ["beta", "ks"], eps_values=[0.0, 0.4], delta_values=[0.0],
            reps=6, n=80, seed=3,
        )
        lines = out.read_text().strip().splitlines()[1:]
        for line, (eps, delta, test, *_, rate) in zip(lines, grid.to_rows()):
            assert float(line.split(",")[-1]) == pytest.approx(rate, rel=1e-11)


class TestGenerate:
    def test_pit_values_pipe_into_monitor(self, tmp_path):
        values_path = tmp_path / "values.csv"
        code = main(["generate", "--kind", "pit", "--bias", "0.4", "--n", "80",
                     "--seed", "5", "--output", str(values_path)])
        assert code == 0
        lines = values_path.read_text().strip().splitlines()
        assert lines[0] == "value" and len(lines) == 81
        out = tmp_path / "monitored.csv"
        assert main(["monitor", "--method", "beta", "--hypothesis", "cuf",
                     "--input", str(values_path), "--output", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 81

    def test_ensemble_ranks_integral(self, tmp_path):
        path = tmp_path / "ranks.csv"
        main(["generate", "--kind", "ensemble", "--n", "50", "--seed", "6",
              "--output", str(path)])
        ranks = [int(v) for v in path.read_text().strip().splitlines()[1:]]
        assert all(1 <= r <= 21 for r in ranks)

    def test_quantile_pairs_two_columns(self, tmp_path):
        path = tmp_path / "pairs.csv"
        main(["generate", "--kind", "quantile", "--n", "30", "--seed", "7",
              "--output", str(path)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "value_upper,value_lower"
        assert all(len(l.split(",")) == 2 for l in lines[1:])

    def test_unfocused_kind(self, tmp_path):
        path = tmp_path / "u.csv"
        main(["generate", "--kind", "unfocused", "--n", "40", "--seed", "8",
              "--output", str(path)])
        values = [float(v) for v in path.read_text().strip().splitlines()[1:]]
        assert len(values) == 40
        assert all(0.0 <= v <= 1.0 for v in values)


class TestDensity:
    def test_table_output(self, tmp_path):
        rng = np.random.default_rng(24)
        src = tmp_path / "values.csv"
        write_values(src, rng.random(500))
        out = tmp_path / "density.csv"
        code = main(["density", "--input", str(src), "--output", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "z,density"
        assert len(lines) == 102
        density = np.array([float(l.split(",")[1]) for l in lines[1:]])
        assert np.trapezoid(density, dx=0.01) == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_input_fails(self, tmp_path):
        src = tmp_path / "values.csv"
        write_values(src, [0.5] * 50)
        proc = run_cli(["density", "--input", str(src)])
        assert proc.returncode == 1
