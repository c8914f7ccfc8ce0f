import csv

import numpy as np
import pytest

from photonblind import io
from photonblind.cli import cell_seed, main
from photonblind.fields import delta_kernel

SMALL = ["--max-iterations", "3", "--kernel-size", "9"]


def simulate_chart(tmp_path, *extra):
    out = tmp_path / "sim"
    rc = main(["simulate", "--image", "chart:48", "--kernel", "gauss:2,1,30",
               "--kernel-size", "9", "--alpha", "20", "--seed", "4", "--out", str(out), *extra])
    assert rc == 0
    return out


def test_simulate_high_flux_delta(tmp_path, rng):
    x = rng.uniform(0.2, 0.9, (32, 32))
    io.write_matrix(tmp_path / "x.txt", x)
    rc = main(["simulate", "--image", str(tmp_path / "x.txt"), "--kernel", "delta:3",
               "--alpha", "1e6", "--counts-format", "txt", "--out", str(tmp_path / "o")])
    assert rc == 0
    y = io.read_counts(tmp_path / "o" / "y.txt")
    assert np.mean(np.abs(y / 1e6 - x) / x) <= 0.01


def test_simulate_is_deterministic(tmp_path):
    a = simulate_chart(tmp_path)
    first = (a / "y.png").read_bytes()
    b = tmp_path / "again"
    main(["simulate", "--image", "chart:48", "--kernel", "gauss:2,1,30", "--kernel-size", "9",
          "--alpha", "20", "--seed", "4", "--out", str(b)])
    assert (b / "y.png").read_bytes() == first


def test_simulate_missing_image(tmp_path, capsys):
    rc = main(["simulate", "--image", str(tmp_path / "none.png"), "--kernel", "delta",
               "--alpha", "5", "--out", str(tmp_path)])
    assert rc == 2
    assert "not found" in capsys.readouterr().err


def test_simulate_counts_too_large_for_png(tmp_path):
    rc = main(["simulate", "--image", "chart:32", "--kernel", "delta:3", "--alpha", "1e6",
               "--out", str(tmp_path)])
    assert rc == 2


def test_usage_error_exit_code():
    assert main(["simulate"]) == 2
    assert main(["frobnicate"]) == 2


def test_deblur_outputs(tmp_path):
    sim = simulate_chart(tmp_path)
    out = tmp_path / "db"
    rc = main(["deblur", "--y", str(sim / "y.png"), "--alpha", "20",
               "--reference", str(sim / "x_true.png"), "--out", str(out), *SMALL])
    assert rc == 0
    h = io.read_kernel(out / "h_hat.txt")
    assert h.min() >= 0 and abs(h.sum() - 1) <= 1e-12
    rows = list(csv.reader(open(out / "loss.csv")))
    assert rows[0] == ["iter", "loss", "mu", "gamma", "psnr"]
    assert len(rows) - 1 == 3 + 1
    assert (out / "x_hat.png").exists()


def test_deblur_estimates_alpha(tmp_path):
    sim = simulate_chart(tmp_path)
    out = tmp_path / "db"
    assert main(["deblur", "--y", str(sim / "y.png"), "--out", str(out), *SMALL]) == 0
    report = io.parse_key_values((out / "report.txt").read_text())
    y = io.read_counts(sim / "y.png")
    assert report["alpha_estimated"] == "true"
    assert float(report["alpha"]) == pytest.approx(y.sum() / (0.33 * y.size), rel=1e-9)


def test_deblur_config_file_and_flag_precedence(tmp_path):
    sim = simulate_chart(tmp_path)
    (tmp_path / "c.txt").write_text("max_iterations=2\nkernel_size=7\n")
    out = tmp_path / "db"
    rc = main(["deblur", "--y", str(sim / "y.png"), "--alpha", "20", "--config",
               str(tmp_path / "c.txt"), "--max-iterations", "4", "--out", str(out)])
    assert rc == 0
    assert len((out / "loss.csv").read_text().splitlines()) == 1 + 5
    assert io.read_kernel(out / "h_hat.txt").shape == (7, 7)


def test_deblur_strict_mode_runs(tmp_path):
    sim = simulate_chart(tmp_path)
    rc = main(["deblur", "--y", str(sim / "y.png"), "--alpha", "20", "--strict-alg1",
               "--out", str(tmp_path / "db"), *SMALL])
    assert rc == 0


def test_deblur_bad_flag_value(tmp_path):
    sim = simulate_chart(tmp_path)
    rc = main(["deblur", "--y", str(sim / "y.png"), "--step-size", "-1",
               "--out", str(tmp_path / "db")])
    assert rc == 2


def test_deblur_zero_image_is_numerical_failure(tmp_path):
    io.write_counts(tmp_path / "y.png", np.zeros((16, 16)))
    assert main(["deblur", "--y", str(tmp_path / "y.png"), "--out", str(tmp_path / "o")]) == 1


def test_grad_check_pass_and_fail(capsys):
    assert main(["grad-check", "--n", "3", "--size", "12", "--kernel-size", "5",
                 "--steps", "2"]) == 0
    line = capsys.readouterr().out
    assert "M=5" in line and "K=2" in line and "size=12" in line and "PASS" in line
    assert main(["grad-check", "--n", "3", "--size", "12", "--solver", "rl_frozen"]) == 1


def test_evaluate_identical(tmp_path, capsys):
    sim = simulate_chart(tmp_path)
    capsys.readouterr()
    rc = main(["evaluate", "--x-hat", str(sim / "x_true.png"), "--x-true", str(sim / "x_true.png"),
               "--h-hat", str(sim / "h_true.txt"), "--h-true", str(sim / "h_true.txt"),
               "--format", "json"])
    assert rc == 0
    out = capsys.readouterr().out
    assert '"psnr": 99.0' in out and '"ssim": 1.0' in out and '"kernel_mae": 0.0' in out


def test_evaluate_alignment_flag(tmp_path, capsys):
    io.write_image(tmp_path / "x.png", np.full((16, 16), 0.5))
    io.write_kernel(tmp_path / "a.txt", delta_kernel(5))
    io.write_kernel(tmp_path / "b.txt", np.roll(delta_kernel(5), 1, axis=1))
    args = ["evaluate", "--x-hat", str(tmp_path / "x.png"), "--x-true", str(tmp_path / "x.png"),
            "--h-hat", str(tmp_path / "b.txt"), "--h-true", str(tmp_path / "a.txt")]
    capsys.readouterr()
    main(args)
    aligned = capsys.readouterr().out.splitlines()[1].split(",")
    main(args + ["--no-align"])
    raw = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(aligned[2]) == 0.0 and aligned[3:] == ["0", "1"]
    assert float(raw[2]) == pytest.approx(2 / 25)


def test_evaluate_mismatched_dims(tmp_path):
    io.write_image(tmp_path / "a.png", np.zeros((16, 16)))
    io.write_image(tmp_path / "b.png", np.zeros((16, 12)))
    assert main(["evaluate", "--x-hat", str(tmp_path / "a.png"),
                 "--x-true", str(tmp_path / "b.png")]) == 2


def bench(tmp_path, name, variants):
    out = tmp_path / name
    rc = main(["bench", "--inputs", "chart:32", "--alphas", "20", "40", "--kernels",
               "gauss:1.5,1,0", "motion:5,45", "--variants", *variants, "--seed", "3",
               "--out", str(out), *SMALL[:2], "--kernel-size", "7"])
    assert rc == 0
    return out


def test_bench_cardinality_and_reproducibility(tmp_path):
    a = bench(tmp_path, "a", ["full", "init_only"])
    rows = list(csv.DictReader(open(a / "bench.csv")))
    assert len(rows) == 2 * 2 * 2
    assert sum(r["variant"] == "init_only" for r in rows) == 4
    b = bench(tmp_path, "b", ["full", "init_only"])
    assert (a / "bench.csv").read_text() == (b / "bench.csv").read_text()
    assert io.ExperimentConfig.load(a / "experiment.txt").seed == 3


def test_bench_always_adds_init_only(tmp_path):
    a = bench(tmp_path, "a", ["full", "no_l1"])
    rows = list(csv.DictReader(open(a / "bench.csv")))
    assert len(rows) == 2 * 2 * 3
    keys = [(r["image"], float(r["alpha"]), r["kernel"], r["variant"]) for r in rows]
    assert keys == sorted(keys)


def test_bench_threads_do_not_change_table(tmp_path, monkeypatch):
    a = bench(tmp_path, "a", ["full"])
    monkeypatch.setenv("PHOTONBLIND_THREADS", "3")
    b = bench(tmp_path, "b", ["full"])
    assert (a / "bench.csv").read_text() == (b / "bench.csv").read_text()


def test_bench_unknown_variant(tmp_path):
    assert main(["bench", "--variants", "wat", "--out", str(tmp_path)]) == 2


def test_cell_seeds_differ():
    seeds = {cell_seed(0, i, j, k) for i in range(2) for j in range(2) for k in range(2)}
    assert len(seeds) == 8
