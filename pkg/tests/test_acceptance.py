"""Acceptance checks 1-12.

Each test prints one PASS/FAIL line (visible without ``-s``) and then
asserts the same condition, so a FAIL line always comes with a failing test.
"""

import math
import time
import warnings

import numpy as np
import pytest

from gcye.fredholm import TruncationWarning, cdf_largest, gap_derivatives, gap_nystrom, gap_series
from gcye.kernels import (
    EnsembleConfig,
    KernelHandle,
    SParam,
    kernel_values,
    limit_pq_recurrence_residual,
    phi_psi_recurrence_residual,
)
from gcye.painleve import pv_report, pvi_report
from gcye.ratelab import cdf_rate, hadamard_check, kernel_rate
from gcye.sampler import ChainConfig, ks_distance, run_chain
from gcye.unitary import correspondence_check, smallest_angle_survival

S_SET = [SParam(0), SParam(1), SParam(0.3, 0.4), SParam(-0.25)]
N_LIST = (10, 20, 40, 80)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail} [{elapsed:.1f} s]"
        with capsys.disabled():
            print("\n" + line)
    return emit


def label(s):
    return f"{s.re:g}" if s.im == 0 else f"{s.re:g}{s.im:+g}i"


def test_criterion_01_cauchy_anchor(report):
    t0 = time.perf_counter()
    val = cdf_largest(EnsembleConfig(SParam(0), 1), 1.0)
    elapsed = time.perf_counter() - t0
    err = abs(val - 0.75)
    ok = err < 1e-8 and elapsed < 1
    report(1, ok, f"F(1) = {val:.12f}, error {err:.1e}", elapsed)
    assert ok


def test_criterion_02_sine_kernel(report):
    t0 = time.perf_counter()
    g = np.linspace(0.5, 5, 20)
    X, Y = np.meshgrid(g, g, indexing="ij")
    got = kernel_values(KernelHandle.limit(SParam(0)), X, Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        ref = np.sin(1 / Y - 1 / X) / (math.pi * (X - Y))
    diag = X == Y
    ref[diag] = 1 / (math.pi * X[diag] ** 2)
    err = float(np.max(np.abs(got - ref)))
    elapsed = time.perf_counter() - t0
    ok = err < 1e-12 and elapsed < 1
    report(2, ok, f"max |K - sine form| = {err:.1e} on 20x20", elapsed)
    assert ok


def test_criterion_03_kernel_rate(report):
    t0 = time.perf_counter()
    spreads = {label(s): float(kernel_rate(s, 0.5, N_LIST).spread()[0]) for s in S_SET}
    elapsed = time.perf_counter() - t0
    ok = all(v <= 4 for v in spreads.values()) and elapsed < 60
    detail = ", ".join(f"s={k}: {v:.2f}" for k, v in spreads.items())
    report(3, ok, f"max/min of N*sup gap ({detail})", elapsed)
    assert ok


def test_criterion_04_cdf_rate(report):
    t0 = time.perf_counter()
    spreads = {label(s): cdf_rate(s, [1.0, 2.0, 4.0], N_LIST).spread() for s in S_SET}
    elapsed = time.perf_counter() - t0
    ok = all(np.all(v <= 4) for v in spreads.values()) and elapsed < 300
    detail = ", ".join(f"s={k}: {np.array2string(v, precision=2)}" for k, v in spreads.items())
    report(4, ok, f"max/min of N*|F_N - F_inf| at x=1,2,4 ({detail})", elapsed)
    assert ok


def test_criterion_05_nystrom_vs_series(report):
    t0 = time.perf_counter()
    worst = 0.0
    for s in (SParam(0), SParam(1)):
        kh = KernelHandle.limit(s)
        for t in (4.0, 6.0, 10.0):
            a = gap_nystrom(kh, t)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                b = gap_series(kh, t, kmax=8)
            worst = max(worst, abs(a.value - b.value) / (10 * (a.error_estimate + b.error_estimate)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1 and elapsed < 60
    report(5, ok, f"max |diff| / (10 x combined error) = {worst:.2f}", elapsed)
    assert ok


def test_criterion_06_pvi_residual(report):
    t0 = time.perf_counter()
    grid = np.linspace(4, 20, 17)
    rows = []
    for s in (SParam(0), SParam(1)):
        cfg = EnsembleConfig(s, 20)
        best = pvi_report(cfg, grid).max_relative
        fixed = dict(cheb_adaptive=False, adaptive=False)
        coarse = pvi_report(cfg, grid, cheb_order=32, order=32, **fixed).max_relative
        fine = pvi_report(cfg, grid, cheb_order=64, order=64, **fixed).max_relative
        rows.append((label(s), best, coarse, fine))
    elapsed = time.perf_counter() - t0
    ok = all(b < 1e-3 and f < c for _, b, c, f in rows) and elapsed < 120
    detail = ", ".join(f"s={k}: {b:.1e} (orders 32 -> 64: {c:.1e} -> {f:.1e})" for k, b, c, f in rows)
    report(6, ok, f"N=20, t in [4, 20]: {detail}", elapsed)
    assert ok


def test_criterion_07_pv_residual(report):
    t0 = time.perf_counter()
    tau = np.linspace(0.2, 1, 17)
    res = {label(s): pv_report(s, tau).max_relative for s in (SParam(0), SParam(1), SParam(0.3, 0.4))}
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-3 for v in res.values()) and elapsed < 120
    detail = ", ".join(f"s={k}: {v:.1e}" for k, v in res.items())
    report(7, ok, f"max relative residual on tau in [0.2, 1] ({detail})", elapsed)
    assert ok


def test_criterion_08_derivative_convergence(report):
    t0 = time.perf_counter()
    ts = (1.0, 2.0)
    fields = ("f", "f1", "f2", "f3")
    lim = gap_derivatives(KernelHandle.limit(SParam(0)), ts)
    ref = [lim(t) for t in ts]
    gaps = np.empty((len(N_LIST), len(ts), 4))
    for i, n in enumerate(N_LIST):
        fin = gap_derivatives(KernelHandle.finite(EnsembleConfig(SParam(0), n)), ts)
        for j, t in enumerate(ts):
            b = fin(t)
            gaps[i, j] = [abs(getattr(b, f) - getattr(ref[j], f)) for f in fields]
    scaled = gaps * np.asarray(N_LIST, dtype=float)[:, None, None]
    # least-squares fit of log gap = log C - log N
    c = np.exp(np.log(scaled).mean(axis=0))
    dev = scaled / c
    worst = float(max(dev.max(), 1 / dev.min()))
    slope = np.polyfit(np.log(N_LIST), np.log(gaps.reshape(len(N_LIST), -1)), 1)[0]
    elapsed = time.perf_counter() - t0
    ok = worst <= 3 and elapsed < 300
    report(8, ok, f"largest factor off the fitted C/N trend = {worst:.2f} "
                  f"(observed gap ~ N^{slope.mean():.2f})", elapsed)
    assert ok


def test_criterion_09_monte_carlo(report):
    t0 = time.perf_counter()
    cfg = EnsembleConfig(SParam(0), 5)
    batch = run_chain(ChainConfig(cfg, 4000, 500, seed=2024, n_chains=128))
    d = ks_distance(batch, cfg)
    elapsed = time.perf_counter() - t0
    ok = batch.ess >= 1e4 and d < 0.01 and elapsed < 300
    report(9, ok, f"ESS = {batch.ess:.0f}, KS = {d:.4f}, acceptance {batch.acceptance_rate:.2f}", elapsed)
    assert ok


def test_criterion_10_structural_invariants(report):
    t0 = time.perf_counter()
    worst_eig, worst_had = math.inf, 0.0
    for s in S_SET:
        for kh in (KernelHandle.limit(s), KernelHandle.finite(EnsembleConfig(s, 10))):
            eig, had = hadamard_check(kh, n_sets=1000, seed=10)
            worst_eig, worst_had = min(worst_eig, eig), max(worst_had, had)
    elapsed = time.perf_counter() - t0
    ok = worst_eig >= -1e-10 and worst_had <= 1 + 1e-10 and elapsed < 60
    report(10, ok, f"min eig/trace = {worst_eig:.1e}, max det/prod(diag) = {worst_had:.2e}", elapsed)
    assert ok


def test_criterion_11_recurrences(report):
    t0 = time.perf_counter()
    xs = np.concatenate([-np.geomspace(0.3, 10, 25), np.geomspace(0.3, 10, 25)])
    worst_fin = max(phi_psi_recurrence_residual(x, EnsembleConfig(SParam(1), n))
                    for n in (5, 20, 80) for x in xs)
    worst_lim = max(limit_pq_recurrence_residual(x, s)
                    for s in (SParam(1), SParam(0.3, 0.4)) for x in xs)
    elapsed = time.perf_counter() - t0
    ok = worst_fin < 1e-8 and worst_lim < 1e-8 and elapsed < 10
    report(11, ok, f"phi/psi residual {worst_fin:.1e}, limit residual {worst_lim:.1e}", elapsed)
    assert ok


def test_criterion_12_unitary_correspondence(report):
    t0 = time.perf_counter()
    variation = max(correspondence_check(s).variation for s in (SParam(0), SParam(1)))
    diff = 0.0
    for s in (SParam(0), SParam(1)):
        for n in (5, 10):
            for y in (0.5, math.pi / 2, 2.5):
                val, direct = smallest_angle_survival(y, EnsembleConfig(s, n), with_check=True)
                diff = max(diff, abs(val - direct))
    elapsed = time.perf_counter() - t0
    ok = variation < 1e-6 and diff < 1e-5 and elapsed < 60
    report(12, ok, f"ratio variation {variation:.1e}, survival dual gap {diff:.1e}", elapsed)
    assert ok
