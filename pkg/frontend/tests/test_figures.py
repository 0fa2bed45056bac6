"""Figure rendering from fixture CSVs."""

import numpy as np
import pytest

from ipinn_plots import FigureJob, InputError, render
from ipinn_plots.cli import main


def test_panels_has_three_subplots(run_dir):
    out = run_dir / "panels.png"
    fig = render(FigureJob("panels", str(run_dir / "field.csv"), str(out)))
    data_axes = [ax for ax in fig.axes if ax.get_title()]
    assert len(data_axes) == 3
    assert out.exists() and out.stat().st_size > 0


def test_lam_history_is_log_scaled(run_dir):
    out = run_dir / "lam.png"
    fig = render(FigureJob("lam_history", str(run_dir / "history.csv"), str(out)))
    ax = fig.axes[0]
    assert ax.get_yscale() == "log"
    assert len(ax.lines) == 2  # ic column is all-nan in the fixture
    assert out.exists() and out.stat().st_size > 0


def test_loss_history_renders(run_dir):
    out = run_dir / "loss.png"
    fig = render(FigureJob("loss_history", str(run_dir / "history.csv"), str(out)))
    assert fig.axes[0].get_yscale() == "log"
    assert out.exists() and out.stat().st_size > 0


def test_matrix_bars_grouped_by_model(run_dir):
    out = run_dir / "matrix.png"
    fig = render(FigureJob("matrix_bars", str(run_dir / "summary.csv"), str(out)))
    ax = fig.axes[0]
    assert len(ax.containers) == 4  # one bar group per model
    assert [t.get_text() for t in ax.get_xticklabels()] == ["3x50", "7x50"]
    assert out.exists() and out.stat().st_size > 0


def test_rendering_is_deterministic(run_dir):
    job = FigureJob("panels", str(run_dir / "field.csv"), str(run_dir / "a.png"))
    f1 = render(job)
    f2 = render(job)
    assert f1.get_size_inches().tolist() == f2.get_size_inches().tolist()
    assert len(f1.axes) == len(f2.axes)


def test_unknown_kind_rejected(run_dir):
    with pytest.raises(InputError):
        FigureJob("sparklines", "x", "y")


def test_schema_mismatch_raises(run_dir, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        render(FigureJob("panels", str(bad), str(tmp_path / "o.png")))
    with pytest.raises(InputError):
        render(FigureJob("lam_history", str(bad), str(tmp_path / "o.png")))


def test_non_grid_field_rejected(run_dir, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,u_exact,u_pred,abs_err\n0,0,1,1,0\n0,1,1,1,0\n1,0,1,1,0\n")
    with pytest.raises(InputError):
        render(FigureJob("panels", str(bad), str(tmp_path / "o.png")))


# ------------------------------------------------------------------- CLI

def test_cli_all_three_kinds(run_dir, capsys):
    assert main(["panels", "--in", str(run_dir / "field.csv"),
                 "--out", str(run_dir / "p.png")]) == 0
    assert main(["history", "--in", str(run_dir / "history.csv"),
                 "--out", str(run_dir / "h.png")]) == 0
    assert main(["history", "--in", str(run_dir / "history.csv"),
                 "--out", str(run_dir / "hl.png"), "--kind", "loss"]) == 0
    assert main(["matrix", "--in", str(run_dir / "summary.csv"),
                 "--out", str(run_dir / "m.png")]) == 0


def test_cli_bad_input_exits_nonzero(run_dir, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["panels", "--in", str(bad),
                 "--out", str(tmp_path / "o.png")]) == 1
    assert "ipinn-plot:" in capsys.readouterr().err


def test_cavity_field_uses_velocity_magnitude(tmp_path):
    rows = ["x,y,u_exact,u_pred,v_exact,v_pred,vel_mag_exact,vel_mag_pred,abs_err"]
    for x in np.linspace(0, 1, 4):
        for y in np.linspace(0, 1, 4):
            rows.append(f"{x},{y},{y},{y},0,0,{y},{y},0.0")
    f = tmp_path / "field.csv"
    f.write_text("\n".join(rows) + "\n")
    fig = render(FigureJob("panels", str(f), str(tmp_path / "c.png")))
    assert "velocity magnitude" in fig.axes[0].get_title()
