import csv
import io
import math

import numpy as np
import pytest

from seqmoments import cli
from seqmoments.cli import CSV_COLUMNS, SweepConfig, main, parse_angle


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize(
    "text, value",
    [("0", 0.0), ("1.25", 1.25), ("pi", math.pi), ("pi/3", math.pi / 3), ("2*pi/3", 2 * math.pi / 3), ("-pi/2", -math.pi / 2)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["nan", "inf", "tau", ""])
def test_parse_angle_rejects(text):
    with pytest.raises(cli.UsageError):
        parse_angle(text)


def test_sweep_three_points(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--start", "0", "--end", "pi", "--points", "3", "--out", str(out)]) == 0
    text = out.read_bytes()
    assert b"\r" not in text
    header = text.decode().splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    assert header[:2] == ["omega_dt", "pd_ppp"] and header[-3:] == ["max_gap", "min_quasi", "marginal_gap"]
    rows = read_rows(out)
    assert [float(r["omega_dt"]) for r in rows] == pytest.approx([0, math.pi / 2, math.pi])
    assert float(rows[1]["max_gap"]) == pytest.approx(0.125, abs=1e-12)
    assert float(rows[1]["marginal_gap"]) == pytest.approx(0.25, abs=1e-12)
    first = rows[0]
    for label in ("ppp", "ppm", "pmp", "pmm", "mpp", "mpm", "mmp", "mmm"):
        assert float(first[f"pd_{label}"]) == pytest.approx(float(first[f"pmu_{label}"]), abs=1e-12)
    for r in rows:
        assert sum(float(r[f"pd_{l}"]) for l in ("ppp", "ppm", "pmp", "pmm", "mpp", "mpm", "mmp", "mmm")) == pytest.approx(1, abs=1e-10)


def test_sweep_uses_seventeen_significant_digits(tmp_path):
    out = tmp_path / "s.csv"
    main(["sweep", "--start", "pi/3", "--end", "pi/2", "--points", "2", "--out", str(out)])
    cell = read_rows(out)[0]["omega_dt"]
    assert cell == format(math.pi / 3, ".17g")


def test_sweep_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--points", "5", "--engines", "analytic,lueders,moments"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sampling_mode_is_seeded(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    args = ["sweep", "--points", "4", "--shots", "200", "--engines", "lueders,moments"]
    main(args + ["--seed", "5", "--out", str(a)])
    main(args + ["--seed", "5", "--out", str(b)])
    main(args + ["--seed", "6", "--out", str(c)])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    rows = read_rows(a)
    assert all(r["shots"] == "200" for r in rows)


def test_sampling_converges(tmp_path):
    out = tmp_path / "s.csv"
    main(["sweep", "--start", "pi/3", "--end", "pi/2", "--points", "2", "--shots", "200000",
          "--engines", "inrm,moussa", "--out", str(out)])
    row = read_rows(out)[0]
    assert float(row["pd_ppp"]) == pytest.approx(0.28125, abs=0.01)
    assert float(row["mu_101"]) == pytest.approx(-0.5, abs=0.01)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "s.csv"
    cfg.write_text(f"# sweep settings\nstart = 0\nend = pi\npoints = 9\nout = {out}\nengines = analytic\n")
    assert main(["sweep", "--config", str(cfg), "--points", "4"]) == 0
    assert len(read_rows(out)) == 4


def test_omega_adds_delta_t_column(tmp_path):
    out = tmp_path / "s.csv"
    main(["sweep", "--points", "2", "--omega", str(2 * math.pi * 100), "--out", str(out)])
    rows = read_rows(out)
    assert float(rows[1]["delta_t"]) == pytest.approx(1 / 200)


@pytest.mark.parametrize(
    "args",
    [
        ["sweep", "--points", "1"],
        ["sweep", "--start", "2", "--end", "1"],
        ["sweep", "--epsilon", "0"],
        ["sweep", "--shots", "0"],
        ["sweep", "--engines", "magic"],
        ["sweep", "--engines", "moments"],
        ["sweep", "--points", "many"],
        ["compare", "nan"],
        ["compare", "pi/3", "--epsilon", "2"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(args, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(args) == 2


def test_unwritable_output_exits_nonzero(tmp_path):
    assert main(["sweep", "--points", "2", "--out", str(tmp_path / "missing" / "x.csv")]) == 1


def test_engine_disagreement_is_a_computation_failure(monkeypatch, tmp_path):
    real = cli._direct_engine

    def broken(name, params, eps):
        d = real(name, params, eps)
        if name != "inrm":
            return d
        w = d.weights.copy()
        w[0] += 1e-3
        w[1] -= 1e-3
        return type(d)(w)

    monkeypatch.setattr(cli, "_direct_engine", broken)
    assert main(["sweep", "--points", "3", "--out", str(tmp_path / "x.csv")]) == 1


def test_compare_report():
    buf = io.StringIO()
    assert cli.cmd_compare(math.pi / 3, out=buf) == 0
    text = buf.getvalue()
    assert "(+1,-1,+1)   0.03125000  -0.06250000   0.09375000" in text
    assert "negativity certificate" in text
    assert "inconsistent" in text


def test_compare_commuting_limit():
    buf = io.StringIO()
    cli.cmd_compare(0.0, out=buf)
    text = buf.getvalue()
    assert "max |P_d - P_mu| = 0\n" in text
    assert "consistent: the moments and the direct TTJP are compatible" in text


def test_compare_reports_small_circuit_residual():
    buf = io.StringIO()
    cli.cmd_compare(math.pi / 2, out=buf)
    line = next(l for l in buf.getvalue().splitlines() if "INRM vs analytic" in l)
    assert float(line.split()[-1]) < 1e-10


def test_selftest_exit_zero(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "moment inversion round trip, k=1..6" in out
    assert "INRM circuit vs direct TTJP" in out


def test_sweep_config_grid():
    assert SweepConfig(points=5).grid() == pytest.approx(np.linspace(0, math.pi, 5))
