import json
from importlib import resources

import numpy as np
import pytest

from onestep import expcli, models, studies
from onestep.randcore import SeedStream


def run(argv, capsys):
    code = expcli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def data_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_result_table_csv():
    table = studies.ResultTable(["n", "v"], [[3, 0.1], [np.int64(4), np.float64(1 / 3)]], {"seed": 1})
    assert table.to_csv() == "# seed: 1\nn,v\n3,0.1\n4,0.3333333333333333\n"
    assert table.column("v")[0] == 0.1
    with pytest.raises(ValueError):
        studies.ResultTable(["a"], [[1, 2]])


def test_replicate_map_is_schedule_independent():
    fn = lambda r: r * r  # noqa: E731
    assert studies.replicate_map(fn, 5) == [0, 1, 4, 9, 16]


def test_burr_study_threads_match_serial():
    serial = studies.burr_ks([100], 8, 0.05, SeedStream(1))
    parallel = studies.burr_ks([100], 8, 0.05, SeedStream(1), threads=2)
    assert serial.rows == parallel.rows


def test_rerun_is_byte_identical(tmp_path, capsys):
    argv = ["loglinear", "--reps", "5", "--n-grid", "100,1000", "--seed", "9"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "# seed: 9" in text and "# kernel_backend:" in text
    assert data_rows(text)[0] == "n,estimator,mse,se"
    assert len(data_rows(text)) == 1 + 2 * 3


def test_config_merging(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"reps": 4, "n_grid": [100], "seed": 3}))
    code, out, _ = run(["burr-ks", "--config", str(cfg), "--seed", "5"], capsys)
    assert code == 0
    assert "# reps: 4" in out and "# seed: 5" in out and "# n_grid: [100]" in out


def test_full_flag_restores_full_scale():
    args = expcli.build_parser().parse_args(["burr-ks", "--full"])
    cfg = expcli.resolve(args)
    assert cfg["reps"] == 10000 and cfg["n_grid"] == [100, 1000, 10000]


@pytest.mark.parametrize("argv", [
    ["burr-ks", "--reps", "0"],
    ["burr-ks", "--alpha", "1.5"],
    ["beta-dp", "--epsilon", "-1"],
    ["loglinear", "--n-grid", "1000,100"],
    ["dp2prop-null", "--reps", "50"],
    ["synth", "--model", "normal"],
    ["burr-ks", "--config", "/nonexistent/cfg.json"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "error" in err


def test_argparse_errors_exit_2(capsys):
    for argv in (["no-such-command"], ["burr-ks", "--n-grid", "a,b"]):
        with pytest.raises(SystemExit) as info:
            expcli.main(argv)
        assert info.value.code == 2


def test_unwritable_output_exit_2(tmp_path, capsys):
    code, _, _ = run(["loglinear", "--reps", "2", "--n-grid", "100", "--out", str(tmp_path / "no" / "x.csv")],
                     capsys)
    assert code == 2


def test_dp2prop_commands(capsys):
    code, out, _ = run(["dp2prop-null", "--outer", "20", "--reps", "100"], capsys)
    assert code == 0 and "# sup_distance_onestep:" in out
    assert len(data_rows(out)) == 101
    code, out, _ = run(["dp2prop", "--outer", "20", "--reps", "100", "--theta-y", "0.3,0.5"], capsys)
    assert code == 0 and len(data_rows(out)) == 3


def test_bench_command(capsys):
    code, out, _ = run(["bench-mcmc", "--n-grid", "16,32", "--sweeps", "1", "--reps", "2"], capsys)
    assert code == 0 and "# mcmc_loglog_slope:" in out


def write_x(path, values):
    path.write_text("x\n" + "".join(f"{float(v)!r}\n" for v in values))
    return str(path)


def test_synth_normal_preserves_mean(tmp_path, capsys):
    x = 3.0 + SeedStream(2).uniforms(50)
    code, out, _ = run(["synth", "--model", "normal", "--input", write_x(tmp_path / "x.csv", x)], capsys)
    assert code == 0
    assert expcli.PARTIAL_NOTE in out
    y = np.array([float(v) for v in data_rows(out)[1:]])
    assert y.size == 50 and y.mean() == pytest.approx(x.mean(), abs=1e-10)


def test_synth_regression_roundtrip(tmp_path, capsys):
    rng = np.random.default_rng(0)
    z = rng.standard_normal((40, 2))
    y = z @ [1.0, -2.0] + rng.standard_normal(40)
    path = tmp_path / "r.csv"
    path.write_text("y,z1,z2\n" + "".join(f"{float(a)!r},{float(b)!r},{float(c)!r}\n" for a, (b, c) in zip(y, z)))
    code, out, _ = run(["synth", "--model", "regression", "--input", str(path)], capsys)
    assert code == 0
    rows = np.array([[float(v) for v in line.split(",")] for line in data_rows(out)[1:]])
    np.testing.assert_array_equal(rows[:, 1:], z)
    beta = np.linalg.lstsq(z, y, rcond=None)[0]
    np.testing.assert_allclose(np.linalg.lstsq(z, rows[:, 0], rcond=None)[0], beta, atol=1e-10)


def test_synth_loglinear_counts_sum(tmp_path, capsys):
    path = tmp_path / "seatbelt.csv"
    path.write_text(resources.files("onestep").joinpath("data/seatbelt.csv").read_text())
    code, out, _ = run(["synth", "--model", "loglinear", "--input", str(path)], capsys)
    assert code == 0
    counts = [int(line.split(",")[-1]) for line in data_rows(out)[1:]]
    assert len(counts) == 16 and sum(counts) == int(models.load_seatbelt().sum())


def test_synth_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x\n1.0\nabc\n")
    code, _, err = run(["synth", "--model", "normal", "--input", str(bad)], capsys)
    assert code == 2 and "row 3" in err
    outside = write_x(tmp_path / "b.csv", [0.2, 1.4, 0.5])
    assert run(["synth", "--model", "beta", "--input", outside], capsys)[0] == 2
    assert run(["synth", "--model", "normal", "--epsilon", "1", "--input", outside], capsys)[0] == 2


def test_synth_numerical_failure_exit_3(tmp_path, capsys):
    ones = write_x(tmp_path / "ones.csv", [1.0] * 20)
    code, _, err = run(["synth", "--model", "burr", "--input", ones], capsys)
    assert code == 3 and "numerical failure" in err


@pytest.mark.slow
def test_synth_dp_beta(tmp_path, capsys):
    x = models.BetaModel().sample(np.array([5.0, 3.0]),
                                  np.random.default_rng(1).uniform(size=(100_000, 1)))
    code, out, _ = run(["synth", "--model", "beta", "--epsilon", "1", "--input",
                        write_x(tmp_path / "b.csv", x)], capsys)
    assert code == 0
    assert "epsilon-DP" in out and expcli.PARTIAL_NOTE not in out
    y = np.array([float(v) for v in data_rows(out)[1:]])
    assert y.size == 100_000 and np.all((y > 0) & (y < 1))
    assert abs(y.mean() - 5 / 8) < 0.01
