"""Exit criteria, one test (or one test per clause) each.

A PASS/FAIL line per criterion is printed in the terminal summary by
``conftest.py``.  Runtime limits are asserted alongside the numbers.
"""

import math
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from psmet import (
    DegenerateBranchError,
    MeterSpec,
    MirrorSpec,
    f_pow_approx,
    f_pow_exact,
    fisher_ledger,
    peak_phi0,
    postselect_prob,
    recycled_distribution,
    weak_value,
)
from psmet.fock_oracle import random_points, richardson_limit
from psmet.sweep import build_config, preset_names, run_sweep

from conftest import PI, symmetric

acceptance = pytest.mark.acceptance


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


@acceptance("C1 ledger maximum at theta_f = pi/2, 3pi/2")
def test_c1_ledger_maximum():
    with Timer() as t:
        rows = run_sweep(build_config("fig1", g=1e-3))
    xs = np.array([r.axis for r in rows])
    f_tot = np.array([r["F_tot"] for r in rows])
    spacing = xs[1] - xs[0]
    left, right = xs < PI, xs >= PI
    peaks = [xs[left][f_tot[left].argmax()], xs[right][f_tot[right].argmax()]]
    assert abs(peaks[0] - PI / 2) <= spacing and abs(peaks[1] - 3 * PI / 2) <= spacing
    assert f_tot.max() == pytest.approx(80, rel=5e-3)
    for x in peaks:
        row = rows[int(np.flatnonzero(xs == x)[0])]
        assert row["F_p"] / row["F_tot"] > 0.99
    assert t.elapsed < 5


@acceptance("C2 small-g limit of F_p is 4n(n+1)")
def test_c2_small_g_limit():
    gs = [1e-2, 1e-3, 1e-4]
    with Timer() as t:
        for n in (2, 4, 9):
            m = MeterSpec.from_photon_number(n)
            limit = richardson_limit(gs, [fisher_ledger(symmetric(PI), m, g).f_p for g in gs])
            assert limit == pytest.approx(4 * n * (n + 1), rel=1e-3)
    assert t.elapsed < 1


@acceptance("C3 information transfer at phi0 = pi - n sin 2g - 2g")
def test_c3_information_transfer():
    n, g = 4, 0.05
    m = MeterSpec.from_photon_number(n)
    with Timer() as t:
        peak = fisher_ledger(symmetric(peak_phi0(n, g)), m, g)
        assert peak.f_p <= 1e-6 * 80
        assert peak.pd_qd == pytest.approx(80, rel=0.02)
        for phi0 in np.linspace(0, 2 * PI, 512):
            a = fisher_ledger(symmetric(phi0), m, g)
            b = fisher_ledger(symmetric(phi0 + PI), m, g)
            assert a.pr_qr == pytest.approx(b.pd_qd, rel=1e-10, abs=1e-300)
    assert t.elapsed < 5


@acceptance("C4 weak value")
def test_c4_weak_value():
    from psmet import SelectionSpec

    with Timer() as t:
        for phi0 in (0, PI / 4, PI):
            assert weak_value(symmetric(phi0)) == 1
        assert weak_value(SelectionSpec.with_phi0(PI / 3, 2 * PI / 3, 0)) == pytest.approx(2, abs=1e-12)
    assert t.elapsed < 1


@acceptance("C5 recycling closure and r = 0 reduction")
def test_c5_recycling_closure():
    grid = random_points(100, seed=0)
    with Timer() as t:
        for pt in grid:
            sel, m = pt.selection, pt.meter
            for r in (0, 0.3, 0.6, 0.9, 0.99):
                rec = recycled_distribution(sel, m, pt.g, MirrorSpec(r))
                assert rec.p_c + rec.p_b == pytest.approx(1, abs=1e-10)
            bare = postselect_prob(sel, m, pt.g)
            rec = recycled_distribution(sel, m, pt.g, MirrorSpec(0))
            assert rec.p_c == pytest.approx(bare.p_d, rel=1e-8)
            assert rec.p_b == pytest.approx(bare.p_r, rel=1e-8)
            try:
                f_pow = f_pow_exact(sel, m, pt.g, MirrorSpec(0)).f_pow
            except DegenerateBranchError:
                continue
            assert f_pow == pytest.approx(fisher_ledger(sel, m, pt.g).f_p, rel=1e-8)
    assert t.elapsed < 5


@pytest.fixture(scope="module")
def caption():
    """Exact and approximate recycled information at g = 0.01 pi, r = 0.9."""
    out = {}
    for n in (2, 4):
        m = MeterSpec.from_photon_number(n)
        out[n] = dict(
            f_p=fisher_ledger(symmetric(PI), m, 0.01 * PI).f_p,
            exact=f_pow_exact(symmetric(PI), m, 0.01 * PI, MirrorSpec(0.9)).f_pow,
            approx=f_pow_approx(n, 0.01 * PI, 0.9),
        )
    return out


@acceptance("C6a recycling enhancement F_pow >= F_p over g")
def test_c6a_enhancement():
    with Timer() as t:
        for n in (2, 4):
            m = MeterSpec.from_photon_number(n)
            for g in np.linspace(1e-3, 0.05 * PI, 64):
                f_pow = f_pow_exact(symmetric(PI), m, g, MirrorSpec(0.9)).f_pow
                assert f_pow >= fisher_ledger(symmetric(PI), m, g).f_p
    assert t.elapsed < 10


@acceptance("C6b caption point F_pow / F_p > 10")
def test_c6b_caption_enhancement(caption):
    for n in (2, 4):
        assert caption[n]["exact"] / caption[n]["f_p"] > 10


@acceptance("C6c caption point F_pow_approx within 5% of F_pow_exact")
def test_c6c_caption_approximation(caption):
    gaps = {n: abs(c["approx"] - c["exact"]) / c["exact"] for n, c in caption.items()}
    assert max(gaps.values()) < 0.05, f"relative gaps {gaps}"


@pytest.fixture(scope="module")
def transfer():
    m = MeterSpec.from_photon_number(4)
    t0 = time.perf_counter()
    rows = [f_pow_exact(symmetric(PI), m, 0.01 * PI, MirrorSpec(r)) for r in np.linspace(0, 0.95, 64)]
    return rows, time.perf_counter() - t0


@acceptance("C7a P_c strictly increasing in r")
def test_c7a_pc_increasing(transfer):
    rows, elapsed = transfer
    assert np.all(np.diff([x.p_c for x in rows]) > 0)
    assert elapsed < 10


@acceptance("C7b P_b strictly decreasing in r")
def test_c7b_pb_decreasing(transfer):
    assert np.all(np.diff([x.p_b for x in transfer[0]]) < 0)


@acceptance("C7c F_c increasing in r")
def test_c7c_fc_increasing(transfer):
    assert np.all(np.diff([x.f_c for x in transfer[0]]) >= 0)


@acceptance("C7d F_b decreasing in r")
def test_c7d_fb_decreasing(transfer):
    f_b = np.array([x.f_b for x in transfer[0]])
    assert np.all(np.diff(f_b) <= 0), f"F_b goes from {f_b[0]:.4g} to {f_b[-1]:.4g}"


@acceptance("C8 oracle equivalence on the seeded 100-point grid")
def test_c8_oracle_equivalence(tmp_path):
    out = tmp_path / "verify.csv"
    with Timer() as t:
        proc = subprocess.run(
            [sys.executable, "-m", "psmet", "verify", "--out", str(out)],
            capture_output=True,
            text=True,
            check=False,
        )
    assert proc.returncode == 0, proc.stderr[-2000:]
    assert re.search(r"seed 0, 100 points, .* PASS", proc.stderr)
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    errs = {"prob": 0.0, "fd": 0.0}
    for _, quantity, _, _, rel_err, status in rows:
        if status == "SKIPPED":
            continue
        key = "fd" if quantity in ("P_c", "P_b", "F_pow") else "prob"
        errs[key] = max(errs[key], float(rel_err))
    assert errs["prob"] <= 1e-6 and errs["fd"] <= 1e-5
    assert t.elapsed < 60


@acceptance("C9 presets give byte-identical CSV")
@pytest.mark.parametrize("preset", preset_names())
def test_c9_determinism(preset, tmp_path):
    outputs = []
    for i in range(2):
        path = tmp_path / f"{preset}-{i}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "psmet", "sweep", "--config", preset, "--out", str(path)],
            capture_output=True,
            check=False,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert b"nan" not in outputs[0].lower() and b"inf" not in outputs[0].lower()
