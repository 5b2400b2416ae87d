import csv
import math

import numpy as np
import pytest

from dpgbem import experiments as ex
from dpgbem.cli import main
from dpgbem.exceptions import LoadError
from dpgbem.experiments import (COLUMNS, ConvergenceRecord, CostWarning, ExperimentConfig,
                                emit_csv, emit_gnuplot, eoc, run_experiment, slopes)


def record_from(errors, counts, column="energy_err_sq"):
    rows = [{"level": k, "num_triangles": n, "h_min": 1.0 / 2 ** k, column: e}
            for k, (e, n) in enumerate(zip(errors, counts))]
    return ConvergenceRecord(1, rows)


@pytest.mark.parametrize("rate", [0.5, 1.0, 1.5])
def test_eoc_of_power_law(rate):
    n = np.array([12, 48, 192, 768])
    s = eoc(record_from(3.0 * n ** -rate, n))
    np.testing.assert_allclose(s, rate, rtol=1e-12)


def test_eoc_against_h():
    n = np.array([4, 16, 64])
    rec = record_from([1.0, 0.5, 0.25], n)
    np.testing.assert_allclose(eoc(rec, against="h"), 1.0)
    with pytest.raises(ValueError):
        eoc(rec, against="dofs")


def test_eoc_constant_and_degenerate():
    n = [4, 16, 64]
    np.testing.assert_allclose(eoc(record_from([2.0, 2.0, 2.0], n)), 0.0)
    s = slopes([1.0, 0.0, 0.5], n)
    assert np.all(np.isnan(s))
    assert len(slopes([1.0], [4])) == 0


def test_emit_csv_empty_record(tmp_path):
    path = emit_csv(ConvergenceRecord(1), tmp_path / "e.csv")
    assert path.read_text() == ",".join(COLUMNS) + "\n"


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def screen_runs(tmp_path_factory):
    d = tmp_path_factory.mktemp("runs")
    paths = [d / "a.csv", d / "b.csv"]
    for p in paths:
        run_experiment(ExperimentConfig(experiment=3, levels=3, out=str(p)))
    return paths


def test_csv_rows_populated(screen_runs):
    rows = read_csv(screen_runs[0])
    assert len(rows) == 3
    assert [int(r["level"]) for r in rows] == [0, 1, 2]
    assert [int(r["num_triangles"]) for r in rows] == [4, 16, 64]
    for r in rows:
        assert all(r[c] != "" for c in COLUMNS)
        assert all(math.isfinite(float(r[c])) for c in COLUMNS)


def test_runs_are_deterministic(screen_runs):
    a, b = (read_csv(p) for p in screen_runs)
    for ra, rb in zip(a, b):
        for c in COLUMNS:
            if c != "wall_ms":
                assert ra[c] == rb[c]


def test_analytic_load_leaves_error_columns_empty(tmp_path):
    out = tmp_path / "iv.csv"
    rec = run_experiment(ExperimentConfig(experiment=4, levels=2), out=str(out))
    rows = read_csv(out)
    assert len(rows) == 2
    for r in rows:
        assert r["l2_phi"] == r["l2_sigma"] == r["l2_sigma_hat"] == ""
        assert float(r["energy_err_sq"]) > 0
    assert rec.nodal_values is None
    assert np.all(np.isnan(rec.column("l2_phi")))


def test_config_round_trip():
    cfg = ExperimentConfig(experiment=1, levels=2, degree_increment=3, tol=1e-9,
                           out="x.csv", quad_profile="accurate", seed=7,
                           nodal_values=(0.5, -1.0))
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", ["experiment=5", "levels=0", "degree_increment=4",
                                  "tol=0", "quad_profile=slow", "colour=red", "levels"])
def test_config_rejects(text):
    with pytest.raises(ValueError):
        ExperimentConfig.from_text(text)


def test_config_comments_and_dashes():
    cfg = ExperimentConfig.from_text("# study\nexperiment = 4  # const load\n"
                                     "degree-increment=1\n\n")
    assert cfg.experiment == 4 and cfg.degree_increment == 1
    assert cfg.geometry == "screen" and cfg.load_kind == "one"


def test_level_cap_warning_and_partial_record(monkeypatch, tmp_path):
    calls = []

    def failing(mesh, cfg, exact=None):
        calls.append(mesh.num_triangles)
        raise LoadError("synthetic failure")

    monkeypatch.setattr(ex, "solve_level", failing)
    out = tmp_path / "partial.csv"
    with pytest.warns(CostWarning):
        with pytest.raises(LoadError) as info:
            run_experiment(ExperimentConfig(experiment=2, levels=6, out=str(out)))
    assert calls == [12]
    assert info.value.record.rows == []
    assert out.read_text() == ",".join(COLUMNS) + "\n"


def test_cli_run_writes_outputs(tmp_path, capsys):
    out, gp, obj = tmp_path / "r.csv", tmp_path / "r.gp", tmp_path / "m.obj"
    code = main(["--experiment", "3", "--levels", "2", "--out", str(out),
                 "--gnuplot", str(gp), "--dump-mesh", str(obj)])
    assert code == 0
    assert len(read_csv(out)) == 2
    text = gp.read_text()
    assert "logscale" in text and str(out) in text and "l2_phi" in text
    lines = obj.read_text().splitlines()
    assert sum(ln.startswith("f ") for ln in lines) == 16
    printed = capsys.readouterr().out
    assert "nodal values" in printed and "EOC" in printed


def test_cli_config_file_with_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "c.csv"
    cfg.write_text(f"experiment=4\nlevels=3\nout={out}\n")
    assert main(["--config", str(cfg), "--levels", "1"]) == 0
    assert len(read_csv(out)) == 1


@pytest.mark.parametrize("argv", [["--levels", "0"], ["--tol", "-1"],
                                  ["--config", "/nonexistent/run.cfg"]])
def test_cli_invalid_configuration(argv, capsys):
    assert main(argv) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_cli_rejects_unknown_choice():
    with pytest.raises(SystemExit) as info:
        main(["--experiment", "9"])
    assert info.value.code != 0


def test_cli_gnuplot_needs_out(capsys):
    assert main(["--experiment", "4", "--levels", "1", "--gnuplot", "x.gp"]) == 2


def test_cli_module_error_exit_code(monkeypatch, tmp_path):
    def failing(mesh, cfg, exact=None):
        raise LoadError("synthetic failure")

    monkeypatch.setattr(ex, "solve_level", failing)
    assert main(["--experiment", "4", "--levels", "1"]) == 1


def test_gnuplot_skips_absent_columns(tmp_path):
    rec = record_from([1.0, 0.25], [4, 16])
    text = emit_gnuplot(rec, "r.csv", tmp_path / "p.gp").read_text()
    assert "energy_err_sq" in text and "l2_phi" not in text
