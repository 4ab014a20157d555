import csv
import math

import numpy as np
import pytest

from hcurl_ife.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_GEOMETRY, main
from hcurl_ife.study import CSV_COLUMNS, OUTPUT_ENV, ConfigError, parse_config, parse_number


def write_config(tmp_path, body, name="run.cfg"):
    out = tmp_path / "out"
    path = tmp_path / name
    path.write_text(body + f"\noutput.dir = {out}\n")
    return path, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("text, value", [("pi/5", math.pi / 5), ("1/10", 0.1), ("1e-3", 1e-3), ("-2*pi", -2 * math.pi)])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "x", "1/", ""])
def test_parse_number_rejects(text):
    with pytest.raises(ConfigError):
        parse_number(text)


def test_parse_config_keys():
    cfg = parse_config("""
        # comment
        mesh.sizes = 8, 16
        coeff.mu_plus = 1/100
        coeff.beta_plus = 100
        scheme = pg, pp
        penalty.c0 = 20
        quad.error_degree = 8
        error.split = chord
    """)
    assert cfg.sizes == [8, 16] and cfg.schemes == ("pg", "pp")
    assert cfg.coeff.mu_plus == 0.01 and cfg.coeff.beta_plus == 100.0
    assert cfg.penalty.c0 == 20.0 and cfg.quad.error_degree == 8 and cfg.error_split == "chord"


@pytest.mark.parametrize("body", [
    "mesh.sizes = 16, 8",
    "scheme = dg",
    "coeff.mu_plus = 0",
    "bogus.key = 1",
    "mesh.sizes = 8.5",
    "no equals sign",
    "error.split = wobbly",
])
def test_config_errors_exit_2(tmp_path, body, capsys):
    path, _ = write_config(tmp_path, body)
    assert main(["study", "--config", str(path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_unresolved_interface_exit_3(tmp_path, capsys):
    path, _ = write_config(tmp_path, "mesh.n = 4\ncircle.radius = 0.02\ncircle.center = 0.1, 0.12")
    assert main(["solve", "--config", str(path)]) == EXIT_GEOMETRY
    err = capsys.readouterr().err
    assert err.count("refine mesh") == 1


def test_study_csv(tmp_path):
    path, out = write_config(tmp_path, "mesh.sizes = 8, 16, 32\nscheme = pg, pp\nstudy.interpolation = true")
    assert main(["study", "--config", str(path)]) == 0
    for name in ("pg", "pp", "interpolant"):
        rows = read_csv(out / f"errors_{name}.csv")
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [int(r["N"]) for r in rows] == [8, 16, 32]
        assert rows[0]["e0_rate"] == "" and rows[0]["e1_rate"] == ""
        for a, b in zip(rows[:-1], rows[1:]):
            for col in ("e0", "e1"):
                assert float(b[f"{col}_rate"]) == pytest.approx(np.log2(float(a[col]) / float(b[col])), abs=1e-10)
    pg = read_csv(out / "errors_pg.csv")
    assert float(pg[-1]["e0_rate"]) > 0.8
    assert all(float(r["solve_residual"]) <= 1e-10 for r in pg)


def test_study_byte_identical(tmp_path):
    path, out = write_config(tmp_path, "mesh.sizes = 8, 16\nscheme = c")
    assert main(["study", "--config", str(path)]) == 0
    first = (out / "errors_c.csv").read_bytes()
    assert main(["study", "--config", str(path)]) == 0
    assert (out / "errors_c.csv").read_bytes() == first


def test_output_env_override(tmp_path, monkeypatch):
    path, out = write_config(tmp_path, "mesh.n = 8")
    other = tmp_path / "elsewhere"
    monkeypatch.setenv(OUTPUT_ENV, str(other))
    assert main(["solve", "--config", str(path)]) == 0
    assert (other / "solve_pg_N8.csv").exists() and not out.exists()
    x = np.loadtxt(other / "solution_pg_N8.txt")
    assert x.ndim == 1 and len(x) == 3 * 8 * 8 + 2 * 8


def test_matched_any_scheme_converges(tmp_path):
    body = "mesh.sizes = 8, 16, 32\nscheme = pg, pp, c\ncoeff.mu_plus = 1\ncoeff.beta_plus = 1"
    path, out = write_config(tmp_path, body)
    assert main(["study", "--config", str(path)]) == 0
    for s in ("pg", "pp", "c"):
        assert float(read_csv(out / f"errors_{s}.csv")[-1]["e0_rate"]) > 0.85


def test_diagnose_default_passes(tmp_path):
    path, out = write_config(tmp_path, "diagnose.random_elements = 500")
    assert main(["diagnose", "--config", str(path)]) == 0
    lines = (out / "diagnostics.txt").read_text().splitlines()
    assert lines and all(l.startswith("PASS") for l in lines)


def test_diagnose_contrast_50(tmp_path):
    path, out = write_config(tmp_path, "coeff.beta_plus = 50\ndiagnose.random_elements = 200")
    assert main(["diagnose", "--config", str(path)]) == 0
    text = (out / "diagnostics.txt").read_text()
    line = [l for l in text.splitlines() if "infsup_positivity_prediction" in l][0]
    assert line.startswith("PASS") and "non-positive as predicted" in line


def test_diagnose_matched_zero_gap(tmp_path):
    path, out = write_config(tmp_path, "coeff.mu_plus = 1\ncoeff.beta_plus = 1\ndiagnose.random_elements = 100")
    assert main(["diagnose", "--config", str(path)]) == 0
    line = [l for l in (out / "diagnostics.txt").read_text().splitlines() if "ife_equals_standard" in l][0]
    assert "worst=0.000e+00" in line


def test_diagnose_failure_exit_code(tmp_path, monkeypatch):
    from hcurl_ife import cli
    from hcurl_ife.diagnostics import CheckResult

    monkeypatch.setattr(cli, "run_checks", lambda *a, **k: [CheckResult("x", 1.0, 0.0, False)])
    path, _ = write_config(tmp_path, "")
    assert main(["diagnose", "--config", str(path)]) == EXIT_CHECK_FAILED
