import csv
import io
import math

import numpy as np
import pytest

from squeezedbath import propagator, sweep
from squeezedbath.cli import main, read_config
from squeezedbath.entanglement import BellFamilyState
from squeezedbath.reservoir import ReservoirParams
from squeezedbath.sweep import (
    PRESETS,
    SERIES_COLUMNS,
    SweepSpec,
    axis_values,
    get_preset,
    run_series,
    run_sweep,
    run_validate,
    series_csv,
    sweep_summary_csv,
)

PHI = BellFamilyState.from_beta_sq("phi", 0.5)


def data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def bindings(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            k, v = line[2:].split(" = ", 1)
            out[k] = v
    return out


def test_axis_values_inclusive():
    assert axis_values(0.0, 1.5, 0.1) == pytest.approx([i / 10 for i in range(16)])
    assert len(axis_values(0.05, 0.95, 0.05)) == 19
    assert axis_values(1.0, 1.0, 0.5) == (1.0,)
    with pytest.raises(ValueError):
        axis_values(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        axis_values(0.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(axis="gamma", values=(1.0,)), dict(axis="r", values=()), dict(axis="r", values=(1.0,), t_max=0.0),
     dict(axis="r", values=(1.0,), n_times=9)],
)
def test_sweep_spec_invariants(headline, kwargs):
    with pytest.raises(ValueError):
        SweepSpec(params=headline, initial=PHI, **kwargs)


def test_series_grid_and_columns(headline):
    res = run_series(headline, PHI, t_max=2.0, n_times=101)
    assert res.t[0] == 0.0 and res.t[-1] == 2.0 and res.t.size == 101
    text = series_csv(res)
    rows = list(csv.reader(io.StringIO("\n".join(data_lines(text)))))
    assert tuple(rows[0]) == SERIES_COLUMNS
    assert len(rows) == 102
    assert rows[1][:3] == ["0", "1", "1"]
    # 17 significant digits survive a round trip
    for row, c in zip(rows[1:], res.concurrence):
        assert float(row[1]) == c


def test_series_binding_header(headline):
    text = series_csv(run_series(headline, PHI, n_times=50))
    b = bindings(text)
    assert float(b["lambda"]) == 10.0 and float(b["theta"]) == math.pi / 4
    assert b["family"] == "phi"


def test_trace_and_gamma_k_columns(headline):
    res = run_series(headline, PHI, n_times=200)
    assert np.abs(res.trace - 1).max() <= 1e-8
    assert res.gamma_k[0] == 0.0 and np.all(np.diff(res.gamma_k) > 0)


def test_single_value_sweep_equals_series(headline):
    spec = SweepSpec(params=headline, initial=PHI, axis="r", values=(0.2,), n_times=500)
    (row,) = run_sweep(spec)
    series = run_series(headline, PHI, n_times=500).series
    assert row.esd_time == series.esd_time
    assert row.revival_count == series.revival_count
    assert row.n_dark_intervals == len(series.dark_intervals)


def test_sweep_rows_in_axis_order_with_workers(headline):
    spec = SweepSpec(params=headline, initial=PHI, axis="theta", values=(2.0, 0.5, 1.0), n_times=300)
    serial = run_sweep(spec, workers=1)
    parallel = run_sweep(spec, workers=2)
    assert [r.value for r in serial] == [0.5, 1.0, 2.0]
    assert sweep_summary_csv(spec, serial) == sweep_summary_csv(spec, parallel)


def test_beta_sq_axis_reuses_one_integration(headline):
    sweep._map_matrices.cache_clear()
    spec = SweepSpec(params=headline, initial=PHI, axis="beta_sq", values=(0.2, 0.4, 0.6), n_times=300)
    run_sweep(spec)
    assert sweep._map_matrices.cache_info().misses == 1


def test_point_failure_goes_to_errors_column(headline):
    spec = SweepSpec(params=headline, initial=PHI, axis="omega0", values=(-1.0, 10.0), n_times=300)
    rows = run_sweep(spec)
    assert rows[0].errors and "omega0" in rows[0].errors[0]
    assert not rows[1].errors
    text = sweep_summary_csv(spec, rows)
    assert data_lines(text)[0].split(",")[-1] == "errors"


def test_singular_points_are_flagged(monkeypatch, headline):
    real = propagator.integrate_riccati

    def singular_after_two(params, t_grid, rtol, atol):
        t_grid = np.asarray(t_grid)
        if t_grid[-1] > 2.0:
            raise propagator.PropagatorSingularity(2.0)
        return real(params, t_grid, rtol=rtol, atol=atol)

    monkeypatch.setattr(sweep, "integrate_riccati", singular_after_two)
    sweep._map_matrices.cache_clear()
    res = run_series(headline, PHI, t_max=4.0, n_times=401)
    sweep._map_matrices.cache_clear()
    flags = np.array(res.flags)
    assert np.all(flags[res.t >= 2.0] == "singular")
    assert not np.any(flags[res.t < 2.0] == "singular")
    assert np.all(np.isnan(res.concurrence[res.t >= 2.0]))
    assert res.errors and "2" in res.errors[0]
    assert res.series is not None


def test_grid_refinement_moves_death_less_than_a_step():
    preset = get_preset("fig3")
    for r in (0.2, 0.5, 0.8):
        p = ReservoirParams(preset.lam, preset.omega0, r, preset.theta)
        initial = BellFamilyState.from_beta_sq(preset.family, preset.beta_sq)
        coarse = run_series(p, initial, n_times=1000).series.esd_time
        fine = run_series(p, initial, n_times=2000).series.esd_time
        assert abs(coarse - fine) < 5.0 / 999


def test_preset_bindings():
    assert set(PRESETS) >= {f"fig{i}" for i in (1, 3, 4, 5, 6, 7, 9, 10, 11)}
    fig3 = PRESETS["fig3"]
    assert (fig3.lam, fig3.omega0, fig3.theta, fig3.beta_sq, fig3.axis) == (10, 10, math.pi / 4, 0.5, "r")
    assert (PRESETS["fig8a"].lam, PRESETS["fig8a"].omega0) == (10, 3)
    assert (PRESETS["fig8b"].lam, PRESETS["fig8b"].omega0) == (20, 3)
    assert PRESETS["fig1"].r == 0.2 and PRESETS["fig1"].axis == "theta"
    assert get_preset("fig2") is PRESETS["fig2a"] and PRESETS["fig2b"].axis == "theta"
    with pytest.raises(KeyError):
        get_preset("fig12")


def test_read_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nlambda = 4\nbeta-sq = 0.2  # trailing\nfamily=psi\nn_times = 60\n")
    assert read_config(cfg) == {"lambda": 4.0, "beta_sq": 0.2, "family": "psi", "n_times": 60}
    cfg.write_text("colour = red\n")
    with pytest.raises(ValueError):
        read_config(cfg)


def test_cli_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda = 4\nr = 0.3\nn-times = 60\n")
    assert main(["series", "--config", str(cfg), "--r", "0.1"]) == 0
    out = capsys.readouterr().out
    b = bindings(out)
    assert float(b["lambda"]) == 4.0 and float(b["r"]) == 0.1 and b["n_times"] == "60"
    assert len(data_lines(out)) == 61


def test_cli_series_to_file_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["series", "--n-times", "300", "--family", "psi", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_sweep_summary(capsys):
    assert main(["sweep", "--axis", "r", "--values", "0.8,0.2", "--n-times", "300"]) == 0
    lines = data_lines(capsys.readouterr().out)
    assert lines[0].startswith("r,esd_time,revival_count")
    assert [float(x.split(",")[0]) for x in lines[1:]] == [0.2, 0.8]


def test_cli_sweep_dump_series(capsys):
    assert main(["sweep", "--axis", "beta_sq", "--range", "0.2:0.4:0.2", "--n-times", "50", "--dump-series"]) == 0
    lines = data_lines(capsys.readouterr().out)
    assert lines[0] == "beta_sq," + ",".join(SERIES_COLUMNS)
    assert len(lines) == 1 + 2 * 50


def test_cli_figure_override_and_list(capsys):
    assert main(["figure", "fig3", "--n-times", "40", "--lambda", "5"]) == 0
    out = capsys.readouterr().out
    assert float(bindings(out)["lambda"]) == 5.0 and bindings(out)["preset"] == "fig3"
    assert main(["figure", "list"]) == 0
    assert "fig8b" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [["figure", "fig99"], ["sweep", "--values", "1"], ["sweep", "--axis", "r"], ["series", "--beta-sq", "1"]],
)
def test_cli_errors_exit_nonzero(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_validate_report_deterministic_and_terminal_line():
    a = run_validate(n_cases=4, seed=3).render()
    b = run_validate(n_cases=4, seed=3).render()
    assert a == b
    assert a.splitlines()[-1] in ("PASS", "FAIL")
    assert "limit_r0_gamma_k" in a


def test_validate_exit_status_follows_report(capsys):
    code = main(["validate", "--n-cases", "3", "--seed", "1"])
    last = capsys.readouterr().out.splitlines()[-1]
    assert (code == 0) == (last == "PASS")


def test_validate_needs_a_case():
    with pytest.raises(ValueError):
        run_validate(n_cases=0)
