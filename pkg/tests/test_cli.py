import csv
import shutil
import subprocess

import pytest

from collrisk import __version__
from collrisk.cli import main
from collrisk.io import read_config

FAST = ["--a", "10", "--b", "90", "--n-grid", "20,40", "--paths", "3"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def manifest_files(path):
    out = {}
    for line in path.read_text().splitlines():
        if line.startswith("# file: "):
            name, _, count = line[len("# file: "):].rpartition(" rows=")
            out[name] = int(count)
    return out


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


class TestConvolve:
    def test_writes_pmf(self, tmp_path, capsys):
        pmf = tmp_path / "in.csv"
        pmf.write_text("x,prob\n0,0.5\n10,0.5\n")
        out = tmp_path / "out" / "agg.csv"
        code, _ = run(["convolve", "--pmf", pmf, "--n", 2, "--out", out], capsys)
        assert code == 0
        table = rows(out)
        assert table[0] == ["x", "prob"]
        assert [(float(x), float(p)) for x, p in table[1:]] == [(0.0, 0.25), (10.0, 0.5), (20.0, 0.25)]
        assert manifest_files(out.parent / "manifest.txt") == {"agg.csv": 3}

    def test_bad_pmf_is_one_line_error(self, tmp_path, capsys):
        pmf = tmp_path / "in.csv"
        pmf.write_text("x,prob\n0,0.3\n10,0.3\n20,0.5\n")
        code, cap = run(["convolve", "--pmf", pmf, "--n", 2, "--out", tmp_path / "o.csv"], capsys)
        assert code != 0
        assert cap.err.count("\n") == 1 and cap.err.startswith("collrisk: error:")

    def test_missing_option(self, tmp_path, capsys):
        code, cap = run(["convolve", "--n", 2], capsys)
        assert code != 0 and "--pmf" in cap.err


class TestPremium:
    @pytest.fixture
    def claims(self, tmp_path):
        path = tmp_path / "claims.csv"
        path.write_text("claim\n0\n0\n10\n30\n")
        return path

    def test_normal_report(self, tmp_path, claims, capsys):
        out = tmp_path / "r.csv"
        code, _ = run(["premium", "--claims", claims, "--n", 100, "--h", 10, "--measure", "var:0.99",
                       "--method", "normal", "--ci", 0.95, "--out", out], capsys)
        assert code == 0
        header, row = rows(out)
        assert header == ["method", "n", "u", "premium", "m_hat", "s_hat", "ci_low", "ci_high"]
        rec = dict(zip(header, row))
        assert rec["method"] == "normal" and rec["u"] == "4"
        assert float(rec["m_hat"]) == 10.0
        assert float(rec["s_hat"]) == pytest.approx(150**0.5)
        assert float(rec["premium"]) == pytest.approx(10 + 150**0.5 * 2.326347874040877 / 10, abs=1e-12)
        assert float(rec["ci_low"]) < float(rec["ci_high"])

    def test_plugin_with_distortion_file(self, tmp_path, claims, capsys):
        knots = tmp_path / "g.csv"
        knots.write_text("t,g\n0,0\n0.5,0\n1,1\n")
        out = tmp_path / "r.csv"
        code, cap = run(["premium", "--claims", claims, "--n", 3, "--h", 10, "--measure", f"distortion:{knots}",
                         "--method", "plugin", "--out", out], capsys)
        assert code == 0, cap.err
        assert rows(out)[1][0] == "plugin"

    def test_off_grid_claims(self, tmp_path, claims, capsys):
        code, cap = run(["premium", "--claims", claims, "--n", 3, "--h", 7, "--out", tmp_path / "r.csv"], capsys)
        assert code != 0 and "grid" in cap.err

    def test_bad_measure(self, tmp_path, claims, capsys):
        code, cap = run(["premium", "--claims", claims, "--n", 3, "--measure", "var:2",
                         "--out", tmp_path / "r.csv"], capsys)
        assert code != 0 and cap.err.count("\n") == 1


class TestStudies:
    def test_fig2_manifest_and_rerun(self, tmp_path, capsys):
        first = tmp_path / "a"
        code, _ = run(["simulate", "fig2", *FAST, "--seed", 11, "--jobs", 2, "--out-dir", first], capsys)
        assert code == 0
        manifest = first / "manifest.txt"
        text = manifest.read_text()
        assert f"# version: {__version__}" in text and "# seed: 11" in text and "elapsed_seconds" in text
        files = manifest_files(manifest)
        assert files == {"fig2_a10_b90.csv": 2}
        for name, count in files.items():
            assert len(rows(first / name)) == count + 1
        config = read_config(manifest)
        assert config["seed"] == "11" and config["n_grid"] == "20,40"
        second = tmp_path / "b"
        code, _ = run(["simulate", "fig2", "--config", manifest, "--jobs", 1, "--out-dir", second], capsys)
        assert code == 0
        assert (first / "fig2_a10_b90.csv").read_bytes() == (second / "fig2_a10_b90.csv").read_bytes()

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("# comment\na=10\nb=90\nn_grid=20,40\npaths=2\nseed=5\n")
        code, _ = run(["study", "coverage", "--config", cfg, "--seed", 6, "--out-dir", tmp_path], capsys)
        assert code == 0
        assert read_config(tmp_path / "manifest.txt")["seed"] == "6"

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("alpha=0.9\n")
        code, cap = run(["study", "mz", "--config", cfg, "--out-dir", tmp_path], capsys)
        assert code != 0 and "alpha" in cap.err

    def test_fig1_pairs_and_sizes(self, tmp_path, capsys):
        code, _ = run(["simulate", "fig1", "--pairs", "10:90;6:50", "--sizes", "20,30", "--out-dir", tmp_path],
                      capsys)
        assert code == 0
        names = set(manifest_files(tmp_path / "manifest.txt"))
        assert names == {"fig1_a10_b90_n20.csv", "fig1_a10_b90_n30.csv", "fig1_a6_b50_n20.csv",
                         "fig1_a6_b50_n30.csv"}
        assert rows(tmp_path / "fig1_a6_b50_n20.csv")[0] == ["x", "pmf", "normal_density"]

    @pytest.mark.parametrize("which,header", [
        ("rates", ["n", "distance", "gamma", "f", "slope"]),
        ("coverage", ["n", "method", "coverage"]),
        ("mz", ["n", "normal_scaled_error", "plugin_scaled_error"]),
        ("errors", ["n", "reference", "normal_mae", "plugin_mae"]),
    ])
    def test_study_headers(self, tmp_path, capsys, which, header):
        grid = "25,50,100,200" if which == "rates" else "20,40"
        argv = ["study", which, "--a", "10", "--b", "90", "--n-grid", grid, "--paths", "3", "--out-dir", tmp_path]
        code, cap = run(argv, capsys)
        assert code == 0, cap.err
        (name,) = manifest_files(tmp_path / "manifest.txt")
        assert rows(tmp_path / name)[0] == header

    def test_mc_reference(self, tmp_path, capsys):
        code, _ = run(["simulate", "fig2", *FAST, "--reference", "mc:2000", "--out-dir", tmp_path], capsys)
        assert code == 0
        assert read_config(tmp_path / "manifest.txt")["reference"] == "mc:2000"

    def test_decreasing_grid_rejected(self, tmp_path, capsys):
        code, cap = run(["study", "rates", "--n-grid", "50,25", "--out-dir", tmp_path], capsys)
        assert code != 0 and cap.err.count("\n") == 1


@pytest.mark.skipif(shutil.which("collrisk") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["collrisk", "study", "rates", "--seed", "1", "--n-grid", "x", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode != 0
    assert res.stderr.strip().count("\n") == 0 and res.stderr.startswith("collrisk: error:")
    ok = subprocess.run(["collrisk", "--version"], capture_output=True, text=True)
    assert ok.returncode == 0 and __version__ in ok.stdout


@pytest.mark.parametrize("argv", [["study"], ["simulate", "fig3"], ["convolve", "--n", "x"], ["study", "rates", "--n-grid"]])
def test_usage_errors_are_one_line(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("collrisk: error:")
