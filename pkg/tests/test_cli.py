import csv

import numpy as np
import pytest

from orka import cli, io
from orka.metrics import psnr, same_up_to_constant


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_arg_types():
    assert cli.mu_value("inf") == float("inf")
    assert cli.mu_value("2.5") == 2.5
    assert cli.mu_list("inf,1") == [float("inf"), 1.0]
    assert cli.int_list("3:5,8") == [3, 4, 5, 8]
    assert cli.float_list("1,0.5") == [1.0, 0.5]
    for bad in ("-1", "nan", "abc"):
        with pytest.raises(Exception):
            cli.mu_value(bad)


def test_gen_gap_and_extract(tmp_path):
    gap = tmp_path / "gap.csv"
    assert run("gen-gap", "--out", gap) == 0
    g = io.read_array(gap)
    assert g.shape == (121, 121) and np.trace(g) == 16
    assert run("extract", gap, "--mu", 1000, "--c", 1, "--k", 4, "--out", tmp_path / "ex") == 0
    lam = io.read_shifts(tmp_path / "ex" / "lambda.csv")
    assert lam[:7].tolist() == list(range(7))
    rep = io.parse_report((tmp_path / "ex" / "report.txt").read_text())
    for key in ("param.mu", "param.c", "param.k", "objective", "lambda", "seconds.graph", "node_counts",
                "residual_norms", "backend"):
        assert key in rep
    assert rep["node_counts"].split(",")[:4] == ["1", "3", "9", "27"]
    u = io.read_array(tmp_path / "ex" / "u.bin")
    res = io.read_array(tmp_path / "ex" / "residual.bin")
    assert u.shape == res.shape == (121, 121)


def test_extract_mu_zero_residual_is_zero(tmp_path):
    d = np.random.default_rng(0).standard_normal((8, 6))
    io.write_array(tmp_path / "d.csv", d)
    assert run("extract", tmp_path / "d.csv", "--mu", 0, "--format", "csv", "--out", tmp_path / "o") == 0
    assert np.all(io.read_array(tmp_path / "o" / "residual.csv") == 0)


def test_gen_scene_and_decompose_recovers_path(tmp_path):
    scene = tmp_path / "scene.bin"
    assert run("gen-scene", "--m", 64, "--n", 16, "--velocity", "0.5", "--width", 3, "--out", scene) == 0
    truth = io.read_shifts(tmp_path / "scene_truth.csv")
    assert (tmp_path / "scene_clean.bin").exists()
    assert run("decompose", scene, "--objects", 1, "--mu", "inf", "--c", 1, "--k", 3, "--out", tmp_path / "dec") == 0
    lam = io.read_shifts(tmp_path / "dec" / "object_1_lambda.csv")
    assert same_up_to_constant(lam, truth)
    rep = io.parse_report((tmp_path / "dec" / "report.txt").read_text())
    assert float(rep["residual_norms"].split(",")[-1]) < 1e-9


def test_gen_scene_noise_and_psnr(tmp_path, capsys):
    scene = tmp_path / "s.csv"
    assert run("gen-scene", "--m", 96, "--n", 32, "--velocity", "1,0.5", "--width", 8, "--period", 5,
               "--noise-psnr", 5, "--out", scene) == 0
    capsys.readouterr()
    assert run("psnr", tmp_path / "s_clean.csv", scene) == 0
    assert abs(float(capsys.readouterr().out) - 5.0) <= 0.2
    assert run("psnr", scene, scene) == 0
    assert capsys.readouterr().out.strip() == "inf"


def test_gen_scene_video(tmp_path):
    assert run("gen-scene", "--dims", 2, "--m", 16, "--n", 5, "--velocity", "1,2", "--size", 4,
               "--out", tmp_path / "v.bin") == 0
    assert io.read_array(tmp_path / "v.bin").shape == (16, 16, 5)
    assert io.read_shifts(tmp_path / "v_truth.csv").tolist()[2] == [2, 4]
    assert run("gen-scene", "--dims", 2, "--velocity", "1.5,2", "--out", tmp_path / "w.bin") == 2


def test_denoise(tmp_path):
    scene = tmp_path / "s.bin"
    run("gen-scene", "--m", 64, "--n", 16, "--velocity", "1", "--width", 4, "--period", 5, "--noise-psnr", 8,
        "--out", scene)
    noisy = io.read_array(scene)
    clean = io.read_array(tmp_path / "s_clean.bin")
    assert run("denoise", scene, "--objects", 1, "--mu", 1000, "--k", 4, "--out", tmp_path / "den.bin") == 0
    den = io.read_array(tmp_path / "den.bin")
    assert psnr(clean, den) > psnr(clean, noisy)
    assert (tmp_path / "den.bin.report.txt").exists()
    assert run("denoise", scene, "--objects", 0, "--out", tmp_path / "zero.bin") == 0
    assert np.all(io.read_array(tmp_path / "zero.bin") == 0)
    # denoised plus residual gives back the input
    run("decompose", scene, "--objects", 1, "--mu", 1000, "--k", 4, "--out", tmp_path / "dec")
    res = io.read_array(tmp_path / "dec" / "residual.bin")
    assert np.allclose(den + res, noisy, atol=1e-12)


def test_video_extract(tmp_path):
    run("gen-scene", "--dims", 2, "--m", 16, "--n", 4, "--velocity", "1,1", "--size", 4, "--out", tmp_path / "v.bin")
    assert run("extract", tmp_path / "v.bin", "--mu", 1, "--c", 1, "--k", 2, "--out", tmp_path / "o") == 0
    rep = io.parse_report((tmp_path / "o" / "report.txt").read_text())
    assert "lambda_x" in rep and "lambda_y" in rep
    assert io.read_shifts(tmp_path / "o" / "lambda.csv").shape == (4, 2)
    assert run("extract", tmp_path / "v.bin", "--dims", 1, "--mu", 1, "--out", tmp_path / "p") == 2


def test_benchmarks_and_oracle(tmp_path):
    assert run("bench-k", "--k-values", "2:3", "--m", 16, "--n", 16, "--out", tmp_path / "k.csv") == 0
    rows = read_csv_rows(tmp_path / "k.csv")
    assert rows[0] == ["k", "seconds"] and [r[0] for r in rows[1:]] == ["2", "3"]
    assert all(float(r[1]) > 0 for r in rows[1:])
    assert run("bench-n", "--n-values", "16,32", "--k", 2, "--out", tmp_path / "n.csv") == 0
    assert len(read_csv_rows(tmp_path / "n.csv")) == 3
    assert run("compare-oracle", "--m", 8, "--n", 5, "--trials", 3, "--mus", "1,100",
               "--out", tmp_path / "c.csv") == 0
    rows = read_csv_rows(tmp_path / "c.csv")[1:]
    assert len(rows) == 2 * 4
    assert all(float(r[2]) == 0.0 for r in rows if r[1] == "4")


def test_config_file(tmp_path):
    d = np.random.default_rng(1).standard_normal((8, 6))
    io.write_array(tmp_path / "d.bin", d)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmu = 0\nk = 2\nnode-budget = 100\n")
    assert run("extract", tmp_path / "d.bin", "--config", cfg, "--out", tmp_path / "a") == 0
    rep = io.parse_report((tmp_path / "a" / "report.txt").read_text())
    assert rep["param.mu"] == "0.0" and rep["param.k"] == "2" and rep["param.node_budget"] == "100"
    # flags override the file
    assert run("extract", tmp_path / "d.bin", "--config", cfg, "--mu", 3, "--out", tmp_path / "b") == 0
    assert io.parse_report((tmp_path / "b" / "report.txt").read_text())["param.mu"] == "3.0"
    cfg.write_text("bogus = 1\n")
    assert run("extract", tmp_path / "d.bin", "--config", cfg, "--out", tmp_path / "c") == 2
    cfg.write_text("mu = -4\n")
    assert run("extract", tmp_path / "d.bin", "--config", cfg, "--out", tmp_path / "c") == 2


def test_exit_codes(tmp_path, capsys):
    d = np.random.default_rng(2).standard_normal((6, 10))
    io.write_array(tmp_path / "d.bin", d)
    assert run("extract", tmp_path / "d.bin", "--mu", -1, "--out", tmp_path / "o") == 2
    assert run("extract", tmp_path / "d.bin", "--k", 0, "--out", tmp_path / "o") == 2
    assert run("no-such-command") == 2
    assert run("extract", tmp_path / "missing.bin", "--out", tmp_path / "o") == 4
    assert run("extract", tmp_path / "d.bin", "--config", tmp_path / "missing.cfg", "--out", tmp_path / "o") == 4
    (tmp_path / "bad.bin").write_bytes(b"ORKA\x01garbage")
    assert run("extract", tmp_path / "bad.bin", "--out", tmp_path / "o") == 4
    capsys.readouterr()
    assert run("extract", tmp_path / "d.bin", "--k", 9, "--node-budget", 1000, "--out", tmp_path / "o") == 3
    assert "count=6561" in capsys.readouterr().err
    assert run("compare-oracle", "--n", 30, "--trials", 1, "--out", tmp_path / "c.csv") == 3
    assert run("psnr", tmp_path / "d.bin", tmp_path / "missing.bin") == 4


def test_workers_flag(tmp_path):
    d = np.random.default_rng(3).standard_normal((6, 5))
    io.write_array(tmp_path / "d.bin", d)
    assert run("extract", tmp_path / "d.bin", "--workers", 1, "--out", tmp_path / "o") == 0
