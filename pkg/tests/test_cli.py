from __future__ import annotations

import csv
import json
import math

import pytest

from mocstab.cli import fit_inverse_m, main, read_config
from mocstab.vonneumann import SweepResult


def _rows(path):
    lines = path.read_text().splitlines()
    return list(csv.DictReader(lines[1:]))


def test_sweep_lf_main(tmp_path):
    out = tmp_path / "lf.csv"
    assert main(["sweep", "--scheme", "lf", "--h", "0.04", "--model", "main", "--solution", "2-", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 2001
    assert float(rows[0]["max_abs_lambda"]) == pytest.approx(1, abs=1e-10)
    assert float(rows[-1]["max_abs_lambda"]) == pytest.approx(1, abs=1e-10)
    peak = max(rows, key=lambda r: float(r["max_abs_lambda"]))
    assert abs(float(peak["z"]) - math.pi / 2) < 0.2
    assert float(peak["gamma"]) == pytest.approx(1.5, abs=0.1)
    text = out.read_text()
    assert SweepResult.from_csv(text).to_csv() == text


def test_sweep_se_endpoints(tmp_path):
    out = tmp_path / "se.csv"
    main(["sweep", "--scheme", "se", "--h", "0.01", "--n-z", "11", "--out", str(out)])
    rows = _rows(out)
    assert float(rows[0]["max_abs_lambda"]) == pytest.approx(math.sqrt(1 + 6e-4), abs=1e-12)


def test_sweep_free_is_flat(tmp_path):
    out = tmp_path / "free.csv"
    main(["sweep", "--scheme", "se", "--h", "0.04", "--model", "free", "--n-z", "21", "--out", str(out)])
    assert all(abs(float(r["max_abs_lambda"]) - 1.0) < 1e-14 for r in _rows(out))


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--scheme", "rk3", "--h", "0.1"],
        ["sweep", "--scheme", "se", "--h", "0.1", "--model", "birefringent"],
        ["sweep", "--scheme", "se", "--h", "0.1", "--solution", "kink"],
        ["sweep", "--scheme", "se", "--h", "-0.1"],
        ["simulate", "--scheme", "se", "--model", "gross-neveu", "--solution", "2-", "--h", "0.1", "--t-end", "1"],
        ["simulate", "--scheme", "se", "--t-end", "1"],
        ["soliton", "--m", "32768"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code != 0


def test_simulate_zero_noise(tmp_path):
    out = tmp_path / "run.json"
    argv = ["simulate", "--scheme", "me", "--h", "0.1", "--length", "5", "--t-end", "2", "--noise", "0", "--out", str(out)]
    assert main(argv) == 0
    report = json.loads(out.read_text())
    assert report["schema_version"] == 1
    assert report["metadata"]["seed"] == 0
    series = list(csv.DictReader((tmp_path / "run.series.csv").read_text().splitlines()))
    assert len(series) == 21
    assert all(float(r["total_error"]) == 0 for r in series)
    assert (tmp_path / "run.spectrum.csv").read_text().startswith("z,log10_err\n")


def test_simulate_growth_window_and_determinism(tmp_path):
    argv = ["simulate", "--scheme", "se", "--h", "0.05", "--length", "10", "--t-end", "20", "--seed", "5",
            "--sample-every", "10", "--t1", "10", "--t2", "20"]
    main(argv + ["--out", str(tmp_path / "a.json")])
    main(argv + ["--out", str(tmp_path / "b.json")])
    a = (tmp_path / "a.json").read_text()
    assert a == (tmp_path / "b.json").read_text()
    growth = json.loads(a)["growth_rate"]
    assert growth["t1"] == 10 and growth["gamma"] > 0


def test_simulate_blowup_exits_zero(tmp_path):
    out = tmp_path / "lf.json"
    argv = ["simulate", "--scheme", "lf", "--h", "0.04", "--length", "16", "--t-end", "60", "--noise", "1e-3",
            "--sample-every", "25", "--out", str(out)]
    assert main(argv) == 0
    assert json.loads(out.read_text())["blowup_time"] is not None


def test_simulate_soliton_defaults_to_centered_grid(tmp_path):
    out = tmp_path / "gn.json"
    main(["simulate", "--scheme", "me", "--model", "gross-neveu", "--solution", "soliton", "--nodes", "128",
          "--length", "32", "--t-end", "1", "--out", str(out)])
    assert json.loads(out.read_text())["metadata"]["origin"] == -16


def test_io_error_is_nonzero(tmp_path):
    assert main(["classify", "--n-k", "11", "--out", str(tmp_path / "missing" / "x.csv")]) == 1


def test_classify(tmp_path, capsys):
    out = tmp_path / "cls.csv"
    assert main(["classify", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "counts: stable=7, unstable-k0=3, unstable-k-nonzero=8" in text
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 18
    assert {(r["model"], r["solution"]) for r in rows if r["stability"] == "unstable-k0"} == {
        ("spun", "1-"), ("spun", "2+"), ("isotropic", "3-")
    }


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nscheme = me\nh = 0.02\nn-z = 5\nmodel = main\n")
    assert read_config(cfg) == {"scheme": "me", "h": "0.02", "n_z": "5", "model": "main"}
    out = tmp_path / "s.csv"
    main(["sweep", "--config", str(cfg), "--out", str(out)])
    assert out.read_text().startswith("# scheme=me h=0.02 ")
    main(["sweep", "--config", str(cfg), "--scheme", "se", "--out", str(out)])
    assert out.read_text().startswith("# scheme=se h=0.02 ")
    assert len(_rows(out)) == 5


@pytest.mark.parametrize("content", ["bogus = 1\n", "scheme = xx\n", "no equals sign\n", "h = -1\n"])
def test_bad_config(tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--config", str(cfg), "--scheme", "se", "--h", "0.1"])
    assert info.value.code != 0


def test_soliton_small(tmp_path):
    out = tmp_path / "gn.json"
    argv = ["soliton", "--m", "256", "512", "--length", "32", "--me-t-end", "20", "--me-sample-dt", "1",
            "--lf-t-end", "4", "--lf-spectrum-at", "2", "--out", str(out)]
    assert main(argv) == 0
    doc = json.loads(out.read_text())
    assert set(doc["me"]) == {"256", "512"} and set(doc["lf"]) == {"256", "512"}
    assert "c" in doc["me_fit"]
    assert (tmp_path / "gn.me.M256.spectrum.csv").exists()
    assert (tmp_path / "gn.lf.M512.series.csv").exists()


def test_fit_inverse_m():
    fit = fit_inverse_m([2048, 4096], [0.02, 0.01])
    assert fit["c"] == pytest.approx(0.02)
    assert fit["loglog_slope"] == pytest.approx(-1.0)
