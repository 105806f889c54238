import math
import subprocess
import sys

import numpy as np
import pytest

from psmet import InvalidArgumentError, peak_phi0
from psmet.cli import main
from psmet.sweep import (
    LEDGER_COLUMNS,
    RECYCLED_COLUMNS,
    RunConfig,
    build_config,
    coerce_setting,
    emit_csv,
    evaluate_point,
    find_peak,
    parse_number,
    preset_names,
    read_config_file,
    run_ledger,
    run_recycle,
    run_sweep,
    verify_points,
)

PI = math.pi
HEADER = "axis,P_d,P_r,Q_d,Q_r,PdQd,PrQr,F_p,F_tot,Q_j"
# root of d(PdQd)/dphi0 at n = 4, g = 0.05 (tests/generate_reference_values.py)
PDQD_ARGMAX = 2.6410123582447094515


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParseNumber:
    @pytest.mark.parametrize(
        "text,value",
        [
            ("0.5pi", PI / 2),
            ("pi", PI),
            ("-pi", -PI),
            ("pi/2", PI / 2),
            ("2pi", 2 * PI),
            ("0.01pi", 0.01 * PI),
            ("1e-3", 1e-3),
            (" 4 ", 4.0),
            ("1.5*pi", 1.5 * PI),
        ],
    )
    def test_forms(self, text, value):
        assert parse_number(text) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("text", ["abc", "nan", "inf", "pipi", ""])
    def test_rejects(self, text):
        with pytest.raises(InvalidArgumentError):
            parse_number(text)


class TestConfig:
    def test_defaults_are_valid(self):
        cfg = RunConfig()
        assert cfg.steps == 512 and cfg.fd_step == 1e-5 and cfg.trunc_tol == 1e-14

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=-1),
            dict(r=1.0),
            dict(axis="nope"),
            dict(axis="g", start=0.2, stop=0.1),
            dict(axis="g", steps=1),
            dict(format="json"),
            dict(g=math.inf),
            dict(metric="F_x"),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            RunConfig(**kwargs)

    def test_key_aliases(self):
        assert coerce_setting("theta-f", "0.5pi") == ("theta_f", pytest.approx(PI / 2))
        assert coerce_setting("from", "0") == ("start", 0.0)
        assert coerce_setting("steps", "64") == ("steps", 64)
        with pytest.raises(InvalidArgumentError):
            coerce_setting("steps", "6.5")
        with pytest.raises(InvalidArgumentError):
            coerce_setting("colour", "red")

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nn = 2   # trailing\ng = 0.01pi\n\nphi_i = 1\nphi_f = 0.25\n")
        cfg = build_config(path)
        assert (cfg.n, cfg.g, cfg.effective_phi0) == (2.0, pytest.approx(0.01 * PI), 0.75)
        cfg = build_config(path, n=9.0, phi0=PI)
        assert cfg.n == 9.0 and cfg.effective_phi0 == PI

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n 4\n")
        with pytest.raises(InvalidArgumentError, match="bad.cfg:1"):
            read_config_file(path)

    def test_missing_file(self):
        with pytest.raises(InvalidArgumentError):
            build_config("/nonexistent/run.cfg")

    def test_presets_resolve_by_name(self):
        assert {"fig1", "fig2", "fig3", "fig4"} <= set(preset_names())
        for name in preset_names():
            cfg = build_config(name)
            assert cfg.axis is not None


class TestLedgerRows:
    def test_small_g(self):
        row = run_ledger(RunConfig(g=1e-3))
        assert row["F_tot"] == pytest.approx(80, rel=5e-3)

    def test_fixed_postselection(self):
        assert run_ledger(RunConfig(theta_f=0.0, g=0.2))["F_p"] == 0

    def test_peak_phase(self):
        row = run_ledger(RunConfig(g=0.05, phi0=peak_phi0(4, 0.05)))
        assert row["PdQd"] == pytest.approx(80, rel=0.02)
        assert row["F_p"] < 0.8

    def test_degenerate_cells_are_empty(self):
        row = run_ledger(RunConfig(g=0.0))
        assert row["Q_d"] is None
        line = emit_csv([row]).splitlines()[1].split(",")
        assert line[3] == ""
        assert "nan" not in emit_csv([row]).lower()

    def test_recycled_columns(self):
        row = run_recycle(RunConfig(g=0.01 * PI, r=0.9))
        assert row["F_pow"] == pytest.approx(row["F_c"] + row["F_b"], rel=1e-12)
        assert row["F_pow_approx"] == pytest.approx(1.643e3, rel=1e-3)
        assert row["P_c"] + row["P_b"] == pytest.approx(1, abs=1e-12)

    def test_approx_column_only_where_it_applies(self):
        assert run_recycle(RunConfig(g=0.05, r=0.5, phi0=2.0))["F_pow_approx"] is None
        assert run_recycle(RunConfig(g=0.05, r=0.5, theta_i=1.0))["F_pow_approx"] is None


class TestSweep:
    def test_uniform_axis(self):
        rows = run_sweep(RunConfig(axis="g", start=0.01, stop=0.02, steps=5))
        assert np.allclose([r.axis for r in rows], np.linspace(0.01, 0.02, 5), rtol=0, atol=0)

    def test_ledger_maxima_in_theta_f(self):
        rows = run_sweep(build_config("fig1", g=1e-3))
        f_tot = np.array([r["F_tot"] for r in rows])
        xs = np.array([r.axis for r in rows])
        top = xs[f_tot >= f_tot.max() * (1 - 1e-9)]
        assert len(top) == 2
        assert top == pytest.approx([PI / 2, 3 * PI / 2], abs=1e-12)

    def test_transfer_peak_in_phi0(self):
        rows = run_sweep(build_config("fig2"))
        pdqd = np.array([r["PdQd"] for r in rows])
        xs = np.array([r.axis for r in rows])
        spacing = xs[1] - xs[0]
        assert abs(xs[pdqd.argmax()] - peak_phi0(4, 0.05)) <= spacing

    @pytest.mark.parametrize("n", [2, 4])
    def test_recycled_information_rises_with_r(self, n):
        rows = run_sweep(build_config("fig3_r", n=float(n)))
        f_pow = np.array([r["F_pow"] for r in rows])
        assert np.all(np.diff(f_pow) > 0)

    def test_header_and_row_count(self):
        rows = run_sweep(RunConfig(axis="phi0", start=0, stop=1, steps=2))
        text = emit_csv(rows)
        assert text.splitlines()[0] == HEADER
        assert len(text.splitlines()) == 3
        assert text.endswith("\n") and "\r" not in text

    def test_recycled_header(self):
        text = emit_csv([run_recycle(RunConfig(g=0.02, r=0.5))], recycled=True)
        assert text.splitlines()[0].split(",") == ["axis", *LEDGER_COLUMNS, *RECYCLED_COLUMNS]

    def test_tsv_swaps_separator_only(self):
        rows = run_sweep(RunConfig(axis="g", start=0.01, stop=0.02, steps=3))
        assert emit_csv(rows, "tsv") == emit_csv(rows).replace(",", "\t")

    def test_seventeen_significant_digits(self):
        text = emit_csv([evaluate_point(RunConfig(g=0.01 * PI), 0.1)])
        assert float(text.splitlines()[1].split(",")[1]) == run_ledger(RunConfig(g=0.01 * PI))["P_d"]

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            emit_csv([run_ledger(RunConfig())], path=tmp_path / "missing" / "x.csv")


class TestFindPeak:
    def test_transfer_peak(self):
        cfg = RunConfig(g=0.05, axis="phi0")
        res = find_peak(cfg, "PdQd")
        assert res.bracket_width <= 1e-6 and not res.boundary
        assert res.x == pytest.approx(2.642, abs=1e-3)
        assert res.x == pytest.approx(PDQD_ARGMAX, abs=1e-6)

    def test_transfer_peak_matches_closed_form(self):
        # the PdQd argmax sits 1.25e-3 from the dP_d/dg = 0 phase at this g
        res = find_peak(RunConfig(g=0.05, axis="phi0"), "PdQd")
        assert abs(res.x - peak_phi0(4, 0.05)) <= 1e-3

    def test_ledger_peak_in_theta_f(self):
        res = find_peak(RunConfig(g=0.05, axis="theta_f", start=0, stop=PI), "F_tot")
        assert res.x == pytest.approx(PI / 2, abs=1e-3)

    def test_boundary_maximum(self):
        res = find_peak(RunConfig(g=0.01 * PI, axis="r", start=0, stop=0.95), "F_pow")
        assert res.boundary and res.x == 0.95

    def test_unknown_metric(self):
        with pytest.raises(InvalidArgumentError):
            find_peak(RunConfig(axis="g"), "Q_x")


def test_verify_grid_starts_at_configured_point():
    pts = verify_points(RunConfig(points=3, seed=5, r=0.9, g=0.01 * PI))
    assert len(pts) == 3
    assert (pts[0].n, pts[0].g, pts[0].r) == (4.0, 0.01 * PI, 0.9)
    assert pts[1:] == verify_points(RunConfig(points=3, seed=5))[1:]


class TestCli:
    def test_ledger(self, capsys):
        code, out, _ = run_cli(capsys, "ledger", "--g", "1e-3")
        assert code == 0
        header, row = out.splitlines()
        assert header == HEADER
        assert float(row.split(",")[8]) == pytest.approx(80, rel=5e-3)

    def test_sweep_with_pi_literals(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--axis", "theta_f", "--from", "0", "--to", "2pi", "--steps", "5")
        assert code == 0
        assert float(out.splitlines()[-1].split(",")[0]) == 2 * PI

    def test_recycle(self, capsys):
        code, out, _ = run_cli(capsys, "recycle", "--g", "0.01pi", "--r", "0.9")
        assert code == 0
        assert out.splitlines()[0].endswith("F_pow,F_pow_approx")

    def test_peak(self, capsys):
        code, out, _ = run_cli(capsys, "peak", "--axis", "r", "--metric", "F_pow", "--g", "0.01pi")
        assert code == 0
        assert out.splitlines()[1].endswith("true")

    def test_config_with_flag_override(self, capsys, tmp_path):
        out_path = tmp_path / "fig3.csv"
        code, out, _ = run_cli(capsys, "sweep", "--config", "fig3", "--steps", "4", "--out", str(out_path))
        assert code == 0 and out == ""
        assert len(out_path.read_text().splitlines()) == 5

    def test_tsv(self, capsys):
        _, out, _ = run_cli(capsys, "ledger", "--format", "tsv")
        assert out.splitlines()[0] == HEADER.replace(",", "\t")

    @pytest.mark.parametrize(
        "argv",
        [
            ["ledger", "--n", "-2"],
            ["ledger", "--g", "abc"],
            ["sweep", "--axis", "g", "--steps", "1"],
            ["sweep"],
            ["peak"],
            ["ledger", "--config", "/nonexistent.cfg"],
            ["ledger", "--out", "/nonexistent/dir/out.csv"],
        ],
    )
    def test_invalid_arguments_exit_2(self, capsys, argv):
        code, _, err = run_cli(capsys, *argv)
        assert code == 2
        assert "error" in err

    def test_argparse_rejections_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--axis", "colour"])
        assert exc.value.code == 2

    def test_verify_single_point(self, capsys):
        code, out, err = run_cli(capsys, "verify", "--points", "1", "--g", "0.01pi", "--r", "0.9")
        assert code == 0
        assert out.splitlines()[0] == "point,quantity,analytic,oracle,rel_err,status"
        assert "seed 0, 1 points" in err and err.rstrip().endswith("PASS")

    def test_verify_gate_self_test(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--points", "1", "--g", "0.01pi", "--r", "0.9", "--fd-tol", "1e-12")
        assert code == 3
        assert err.rstrip().endswith("FAIL")

    def test_determinism(self, capsys):
        runs = [run_cli(capsys, "sweep", "--config", "fig4", "--steps", "16")[1] for _ in range(2)]
        assert runs[0] == runs[1]

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "psmet", "ledger", "--g", "0.05"], capture_output=True, text=True, check=False
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith(HEADER)
