"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from relaydmt import ChannelExponents, d_ddf, d_full_duplex, d_local_csi_bound, d_parallel, d_static_qmf
from relaydmt.cli import main
from relaydmt.curves import parse_curve_csv
from relaydmt.montecarlo import SweepConfig, closed_form_diversity, estimate_outage, with_fit
from relaydmt.solver import (
    OutageRegionSpec,
    ddf_grid_profile,
    dynamic_schedule,
    exponent_cost,
    full_duplex_region,
    grid_profile,
    half_duplex_rate,
    maximum,
    minimum,
    single_relay_vars,
    solve_ddf_exponent,
    solve_global_csi,
    solve_local_csi,
    solve_outage_exponent,
    solve_parallel_dynamic,
    static_qmf_region,
    static_schedule,
    strictness_gap_at,
)

X = ChannelExponents
BATTERY = [(1, 1, 1), (1, 1, 0.2), (1, 1, 1e-9), (2, 1, 0.5), (1, 2, 1.5)]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def _grid(lo, hi, step):
    return np.round(np.arange(lo, hi + step / 2, step), 12)


# -- 1. closed-form battery ------------------------------------------------


def test_criterion_1_closed_forms(report):
    t0 = time.perf_counter()
    tol = 1e-12
    x11, fig = X(1, 1, 1), X(1, 1, 0.2)
    checks = [
        (d_full_duplex(x11, 0.5), 1.0),
        (d_full_duplex(fig, 0.0), 1.2),
        (d_full_duplex(X(2, 1, 0.5), 0.7), 0.3),
        (d_static_qmf(X(1, 2, 1.5), 0.5), 1.5),
        (d_static_qmf(fig, 0.3), 0.6),
        (d_static_qmf(fig, 0.6), 0.0),
        (d_ddf(fig, 0.1), 1.0),
        (d_ddf(fig, 0.4), 1 - 0.8 * 0.4 / 0.6),
        (d_ddf(fig, 0.5), 0.2),
        (d_local_csi_bound(1.0, 0.2, 0.4), 1 - 0.8 * 0.4 / 0.6),
        (d_local_csi_bound(1.0, 0.2, 0.25), 1 - 0.8 * 0.25 / 0.75),
        (d_local_csi_bound(1.0, 0.2, 0.2 + 1e-14), 0.8),
        (d_parallel(0.0), 2.0),
        (d_parallel(1 / 3), 1.5),
        (d_parallel(0.75), 0.5),
    ]
    worst = max(abs(got - want) for got, want in checks)
    rounded = [round(d_ddf(fig, 0.4), 6), round(d_local_csi_bound(1.0, 0.2, 0.4), 6), round(d_local_csi_bound(1.0, 0.2, 0.25), 6)]

    # piece boundaries: each side's formula at the breakpoint, and one-ulp neighbours
    jumps = []
    for a, b, c in [(1, 1, 0.2), (2, 1, 0.5), (1, 2, 0.3), (1, 1, 0.7), (3, 2, 1.0)]:
        x = X(a, b, c)
        p, q = min(a, b), max(a, b)
        for r0 in sorted({min(c, q / 2), q / 2}):
            jumps.append(abs(d_ddf(x, math.nextafter(r0, 0)) - d_ddf(x, math.nextafter(r0, 9))))
        r1 = min(c, q / 2)
        if c < q / 2:
            jumps.append(abs((p + c - 2 * r1) - (p - (q - c) * r1 / (q - r1))))
        if a == b:
            r2 = q / 2
            jumps.append(abs((p - (q - c) * r2 / (q - r2)) - (a * b / r2 - a - b + c)))
    jumps.append(abs((2 - 0.5 / 0.5) - 2 * (1 - 0.5)))
    jumps.append(abs(d_parallel(math.nextafter(0.5, 0)) - d_parallel(math.nextafter(0.5, 1))))
    for x in (fig, X(2, 1, 0.5), X(1, 2, 1.5)):
        for fn in (d_full_duplex, d_static_qmf):
            for r0 in {x.c, min(x.a, x.b), (min(x.a, x.b) + x.c) / 2}:
                jumps.append(abs(fn(x, math.nextafter(r0, 0)) - fn(x, math.nextafter(r0, 9))))
    worst_jump = max(jumps)
    elapsed = time.perf_counter() - t0
    ok = worst < tol and rounded == [0.466667, 0.466667, 0.733333] and worst_jump < tol and elapsed < 1.0
    report(1, ok, f"{len(checks)} worked values, max dev {worst:.1e}; {len(jumps)} boundaries, max jump {worst_jump:.1e}; {elapsed:.2f}s")


# -- 2. oracle equivalence for the single-relay closed forms ---------------


def test_criterion_2_oracle_equivalence(report):
    t0 = time.perf_counter()
    worst_exact = worst_grid = 0.0
    for cfg in BATTERY:
        x = X(*cfg)
        rs = _grid(0.0, max(min(x.a, x.b), x.c), 0.01)
        box = OutageRegionSpec(single_relay_vars(x), ())
        a, b, g = box.vars()
        cases = (
            (full_duplex_region, minimum(maximum(a, g), maximum(b, g)), d_full_duplex),
            (static_qmf_region, half_duplex_rate(0.5, a, b, g), d_static_qmf),
        )
        for region_fn, expr, closed in cases:
            want = np.array([closed(x, float(r)) for r in rs])
            exact = np.array([solve_outage_exponent(region_fn(x, float(r)), exponent_cost(x)).value for r in rs])
            grid = grid_profile(box, expr.le(0.0), exponent_cost(x), rs, 1 / 400)
            worst_exact = max(worst_exact, float(np.max(np.abs(exact - want))))
            worst_grid = max(worst_grid, float(np.max(np.abs(grid - want))))
        if x.c < min(x.a, x.b):
            want = np.array([d_ddf(x, float(r)) for r in rs])
            exact = np.array([solve_ddf_exponent(x, float(r)).value for r in rs])
            worst_exact = max(worst_exact, float(np.max(np.abs(exact - want))))
            worst_grid = max(worst_grid, float(np.max(np.abs(ddf_grid_profile(x, rs) - want))))
    elapsed = time.perf_counter() - t0
    ok = worst_exact < 1e-9 and worst_grid < 1e-3 and elapsed < 60
    report(2, ok, f"exact max dev {worst_exact:.1e} (<1e-9), grid max dev {worst_grid:.1e} (<1e-3); {elapsed:.1f}s")


# -- 3. global CSI ---------------------------------------------------------


def test_criterion_3_global_csi(report):
    t0 = time.perf_counter()
    worst = 0.0
    for c in (0.0, 0.2, 0.5):
        x = X(1, 1, c)
        for r in _grid(0.5, (1 + c) / 2, 0.01):
            v = solve_global_csi(x, float(r)).value
            worst = max(worst, abs(v - (1 + c - 2 * r)))
    v04 = solve_global_csi(X(1, 1, 0.2), 0.4).value
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and abs(v04 - 0.533333) < 1e-3 and v04 > d_ddf(X(1, 1, 0.2), 0.4) and elapsed < 60
    report(3, ok, f"line p+c-2r max dev {worst:.1e}; r=0.4 gives {v04:.6f} vs DDF {d_ddf(X(1, 1, 0.2), 0.4):.6f}; {elapsed:.1f}s")


# -- 4. local CSI ----------------------------------------------------------


def test_criterion_4_local_csi(report):
    t0 = time.perf_counter()
    worst_bound = worst_ddf = 0.0
    count = 0
    for c in (0.1, 0.2):
        for r in _grid(0.0, 0.5, 0.02):
            if not c < r < 0.5:
                continue
            v = float(solve_local_csi(1.0, c, float(r)))
            worst_bound = max(worst_bound, abs(v - d_local_csi_bound(1.0, c, float(r))))
            worst_ddf = max(worst_ddf, abs(v - d_ddf(X(1, 1, c), float(r))))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst_bound < 1e-3 and worst_ddf < 1e-3 and elapsed < 120
    report(4, ok, f"{count} points: vs bound {worst_bound:.1e}, vs DDF {worst_ddf:.1e} (<1e-3); {elapsed:.1f}s")


# -- 5. parallel relays ----------------------------------------------------


def test_criterion_5_parallel(report):
    t0 = time.perf_counter()
    rs = np.round(np.arange(1, 10) * 0.05, 12)
    dyn = max(abs(solve_parallel_dynamic(float(r), dynamic_schedule(float(r))).value - d_parallel(float(r))) for r in rs)
    sta = max(abs(solve_parallel_dynamic(float(r), static_schedule(0.5)).value - (2 - 2 * r)) for r in rs)
    gap = strictness_gap_at(1 / 3, None, 0.0, 1.0)
    elapsed = time.perf_counter() - t0
    ok = dyn < 1e-2 and sta < 1e-2 and gap.degenerate and elapsed < 120
    report(
        5,
        ok,
        f"dynamic max dev {dyn:.1e}, static max dev {sta:.1e} (<1e-2); (0,1,1,1) "
        f"{'flagged' if gap.degenerate else 'not flagged'} (open {gap.open_value:.3f} vs closed {gap.closed_value:.3f}); {elapsed:.1f}s",
    )


# -- 6. Monte Carlo slope bands --------------------------------------------


def test_criterion_6_monte_carlo_slopes(report):
    t0 = time.perf_counter()
    configs = [("fd", X(1, 1, 1), 0.5), ("sqmf", X(1, 1, 1), 0.25), ("sqmf", X(1, 1, 0.2), 0.3), ("ddf", X(1, 1, 0.2), 0.4)]
    parts, ok = [], True
    for scheme, x, r in configs:
        res = with_fit(estimate_outage(SweepConfig(scheme, x, r, samples=10**7, seed=7)))
        d = closed_form_diversity(scheme, x, r)
        inside = abs(res.d_hat - d) <= 0.25 * d
        ok &= inside
        parts.append(f"{scheme}{x.as_tuple()} r={r}: {res.d_hat:.3f} vs {d:.4f} {'in' if inside else 'OUT'}")
    elapsed = time.perf_counter() - t0
    report(6, ok, "; ".join(parts) + f"; {elapsed:.1f}s")


# -- 7. figure reproduction ------------------------------------------------


def test_criterion_7_fig3(report, tmp_path):
    assert main(["fig3", "--out-dir", str(tmp_path)]) == 0
    env = {r: d for r, d, s in parse_curve_csv((tmp_path / "fig3.csv").read_text()) if s == "envelope"}
    assert (tmp_path / "fig3.svg").stat().st_size > 0

    def piece(r):
        if r <= 0.2 or r >= 0.5:
            return 1.2 - 2 * r
        return 1 - 0.8 * r / (1 - r)

    worst = max(abs(d - piece(r)) for r, d in env.items())
    regimes = [
        all(abs(d - (1.2 - 2 * r)) <= 1e-6 for r, d in env.items() if r <= 0.2),
        all(abs(d - (1 - 0.8 * r / (1 - r))) <= 1e-6 for r, d in env.items() if 0.2 < r < 0.5),
        all(abs(d - (1.2 - 2 * r)) <= 1e-6 for r, d in env.items() if 0.5 <= r <= 0.6),
    ]
    cross = abs(env[0.5] - 0.2)
    ok = all(regimes) and cross <= 1e-6 and min(env) == 0.0 and max(env) == 0.6
    report(7, ok, f"{len(env)} envelope rows, regimes {regimes}, max dev {worst:.1e}, d(0.5)={env[0.5]:.6f}")


# -- 8. determinism across worker counts -----------------------------------


def test_criterion_8_determinism(report, tmp_path):
    base = ["simulate", "--scheme", "ddf", "--c", "0.2", "--r", "0.4", "--samples", "300000", "--seed", "7"]
    outs = []
    for workers in ("1", "2", "3"):
        out = tmp_path / f"w{workers}.csv"
        assert main(base + ["--workers", workers, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    report(8, ok, f"CSV byte-identical across 1, 2, 3 workers ({len(outs[0])} bytes)")
