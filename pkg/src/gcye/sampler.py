"""Metropolis-Hastings sampling of the eigenvalue density.

Many independent chains are advanced together as rows of one array.  Each
sweep visits the N coordinates in a random order and proposes an additive
Cauchy move for one coordinate at a time, either in x itself or in the
angle 2 arctan(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtri
from scipy.stats import rankdata

from ._parallel import pmap
from .errors import DegenerateChain, DomainError, NumericalError
from .fredholm import cdf_largest, handle_for
from .kernels import EnsembleConfig, SParam, weight_log

CHAINS_PER_BLOCK = 64
TARGET_ACCEPT = 0.3
TUNE_EVERY = 25


@dataclass(frozen=True)
class ChainConfig:
    cfg: EnsembleConfig
    n_steps: int
    burn_in: int
    thin: int = 1
    step_scale: float = 1.0
    seed: int = 0
    n_chains: int = 1

    def __post_init__(self):
        if self.n_steps < 1 or not 0 <= self.burn_in < self.n_steps:
            raise DomainError("need 0 <= burn_in < n_steps")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if not self.step_scale > 0:
            raise DomainError("step_scale must be positive")
        if self.n_chains < 1:
            raise DomainError("n_chains must be >= 1")


@dataclass(frozen=True)
class SampleBatch:
    draws: np.ndarray = field(repr=False)
    acceptance_rate: float
    seed: int
    n_chains: int = 1
    ess: float = float("nan")

    @property
    def size(self) -> int:
        return len(self.draws)


def log_density(xs, cfg: EnsembleConfig) -> float:
    """Unnormalised log of the joint eigenvalue density (-inf at coincidences)."""
    xs = np.asarray(xs, dtype=float).ravel()
    if len(xs) != cfg.n_dim:
        raise DomainError(f"expected {cfg.n_dim} points, got {len(xs)}")
    diff = np.abs(xs[:, None] - xs[None, :])[np.triu_indices(len(xs), 1)]
    if np.any(diff == 0):
        return -math.inf
    return float(2 * np.log(diff).sum() + np.sum(weight_log(xs, cfg)))


def _initial_state(n, n_chains, rng):
    # Cauchy quantiles, jittered per chain so no two chains start identically
    base = np.tan(np.pi * ((np.arange(n) + 0.5) / n - 0.5))
    return base[None, :] + 0.1 * rng.standard_normal((n_chains, n))


def _run_block(cfg: EnsembleConfig, cc: ChainConfig, n_chains: int, seed_seq):
    # Each sweep uses one of two symmetric random walks, chosen by a coin:
    # additive Cauchy moves in x, or wrapped Cauchy moves in phi = 2 arctan(x).
    # In phi the points are spread almost evenly over the circle, which lets
    # the far-out largest eigenvalue move at large N; the target density in
    # phi carries the Jacobian dx/dphi = (1 + x^2) / 2.  Each walk has its
    # own step scale, tuned during burn-in.
    rng = np.random.default_rng(seed_seq)
    n = cfg.n_dim
    x = _initial_state(n, n_chains, rng)
    logw = weight_log(x, cfg)
    scales = [cc.step_scale, cc.step_scale]
    keep = []
    accepted = proposed = 0
    window = np.zeros((2, 2))
    rows = np.arange(n_chains)
    for step in range(cc.n_steps):
        kind = int(rng.integers(2))
        scale = scales[kind]
        for j in rng.permutation(n):
            xj = x[:, j]
            jump = scale * rng.standard_cauchy(n_chains)
            if kind == 0:
                prop = xj + jump
                jac = 0.0
            else:
                phi = np.mod(2 * np.arctan(xj) + jump + np.pi, 2 * np.pi) - np.pi
                prop = np.tan(phi / 2)
                jac = np.log1p(prop * prop) - np.log1p(xj * xj)
            lw_new = weight_log(prop, cfg)
            others = np.delete(x, j, axis=1)
            with np.errstate(divide="ignore"):
                dv = 2 * (np.log(np.abs(others - prop[:, None])).sum(axis=1)
                          - np.log(np.abs(others - xj[:, None])).sum(axis=1))
            log_ratio = dv + lw_new - logw[:, j] + jac
            ok = np.log(rng.random(n_chains)) < log_ratio
            x[rows[ok], j] = prop[ok]
            logw[rows[ok], j] = lw_new[ok]
            if step < cc.burn_in:
                window[kind] += (ok.sum(), n_chains)
            else:
                accepted += int(ok.sum())
                proposed += n_chains
        if step < cc.burn_in and (step + 1) % TUNE_EVERY == 0:
            for k in (0, 1):
                if window[k, 1]:
                    rate = window[k, 0] / window[k, 1]
                    scales[k] *= math.exp(2.0 * (rate - TARGET_ACCEPT))
            scales[1] = min(scales[1], math.pi)
            window[:] = 0
        if step >= cc.burn_in and (step - cc.burn_in) % cc.thin == 0:
            keep.append(x.max(axis=1) / n)
    return np.array(keep).T, accepted, proposed


def integrated_autocorr_time(trace) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    trace = np.atleast_2d(np.asarray(trace, dtype=float))
    m = trace.shape[1]
    if m < 4:
        return 1.0
    y = trace - trace.mean(axis=1, keepdims=True)
    nfft = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(y, nfft, axis=1)
    acf = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :m].mean(axis=0)
    if acf[0] <= 0:
        return 1.0
    rho = acf / acf[0]
    tau = 1.0
    for w in range(1, m):
        tau = 1 + 2 * rho[1:w + 1].sum()
        if w >= 5 * tau:
            break
    return max(float(tau), 1.0)


def _rank_normal(traces):
    # lambda_1 is heavy tailed, so autocorrelations are taken on normal scores
    r = rankdata(traces, axis=None).reshape(traces.shape)
    return ndtri((r - 0.375) / (traces.size + 0.25))


def run_chain(cc: ChainConfig) -> SampleBatch:
    """Sample max(eigenvalues)/N from ``cc.n_chains`` independent chains.

    Chains are grouped in blocks of up to 64; block b uses the generator
    seeded by the b-th child of ``SeedSequence(seed)``, so the draws depend
    only on the configuration, never on the thread count.  The step scale
    is tuned during burn-in towards 30% acceptance and then frozen.
    """
    sizes = [min(CHAINS_PER_BLOCK, cc.n_chains - i)
             for i in range(0, cc.n_chains, CHAINS_PER_BLOCK)]
    seeds = np.random.SeedSequence(cc.seed).spawn(len(sizes))
    blocks = pmap(lambda a: _run_block(cc.cfg, cc, *a), list(zip(sizes, seeds)))
    traces = np.vstack([b[0] for b in blocks])
    accepted = sum(b[1] for b in blocks)
    proposed = sum(b[2] for b in blocks)
    rate = accepted / proposed
    if rate < 0.01 or rate > 0.99:
        raise DegenerateChain(f"acceptance rate {rate:.3f} after burn-in")
    tau = integrated_autocorr_time(_rank_normal(traces))
    return SampleBatch(traces.ravel(), rate, cc.seed, cc.n_chains, traces.size / tau)


def _reference_cdf(kind, lo, hi, points=160):
    """Monotone interpolant of the CDF in log x, and the x where it starts.

    The grid is walked downwards from ``hi``.  It stops once F falls below
    1e-12 (smaller x then get F = 0) or once the kernel can no longer be
    evaluated reliably, which for the limit kernel happens below x ~ 0.15;
    in that case the interpolant starts at the last good point.
    """
    xs = np.geomspace(lo, hi, points)[::-1]
    kh = handle_for(kind)
    vals = []
    floor = lo
    for x in xs:
        try:
            v = cdf_largest(kh, float(x))
        except NumericalError:
            floor = float(x) * (1 + 1e-12)
            break
        vals.append(v)
        if v < 1e-12:
            break
    if len(vals) < 2:
        raise NumericalError(f"reference CDF could not be tabulated on [{lo:.3g}, {hi:.3g}]")
    good = xs[:len(vals)][::-1]
    vals = np.maximum.accumulate(np.array(vals[::-1]))
    if vals[0] < 1e-12:
        floor = lo
        good = np.concatenate(([min(lo, good[0]) * 0.5], good))
        vals = np.concatenate(([0.0], vals))
    interp = PchipInterpolator(np.log(good), vals, extrapolate=False)
    return interp, max(floor, float(good[0]))


def ks_distance(batch: SampleBatch, kind, cdf=None, lower_quantile: float = 1e-3) -> float:
    """Kolmogorov-Smirnov distance between the draws and the law of lambda_1/N.

    ``kind`` is an EnsembleConfig (finite N) or an s value (limit law).  Only
    the positive draws above their ``lower_quantile`` enter the supremum,
    since the gap probability is computed for x > 0 only; the cut moves up
    further if the reference CDF cannot be evaluated there.  The reference
    CDF is tabulated on a geometric grid and interpolated monotonically,
    unless a callable ``cdf`` is supplied.
    """
    d = np.sort(np.asarray(batch.draws, dtype=float))
    if d.size == 0:
        raise DomainError("empty sample batch")
    n = d.size
    pos = d[d > 0]
    if pos.size == 0:
        raise DomainError("no positive draws")
    lo = float(np.quantile(pos, lower_quantile))
    hi = float(pos[-1])
    if cdf is None:
        interp, lo = _reference_cdf(kind, lo, hi)
        cdf = lambda x: interp(np.log(x))
    start = np.searchsorted(d, lo)
    xs = d[start:]
    ranks = np.arange(start, n)
    f = np.asarray(cdf(xs), dtype=float)
    return float(max(np.max((ranks + 1) / n - f), np.max(f - ranks / n)))


def sample_from_cdf(kind, n_draws: int, seed: int = 0, lo: float = 1e-2, hi: float = 1e3) -> SampleBatch:
    """Inverse-CDF draws from the law of lambda_1/N (test hook).

    The CDF is only tabulated on [lo, hi].  Draws whose uniform falls below
    F(lo) are returned as -1 (the law is not computed there, and only their
    count matters to ``ks_distance``); draws above F(hi) get a 1/x tail.
    """
    xs = np.geomspace(lo, hi, 400)
    kh = handle_for(kind)
    vals = np.array(pmap(lambda x: cdf_largest(kh, float(x)), xs))
    keep = np.concatenate(([True], np.diff(vals) > 0))
    xs, vals = xs[keep], vals[keep]
    u = np.random.default_rng(seed).random(n_draws)
    out = np.full(n_draws, -1.0)
    mid = (u >= vals[0]) & (u <= vals[-1])
    out[mid] = np.exp(PchipInterpolator(vals, np.log(xs))(u[mid]))
    top = u > vals[-1]
    out[top] = hi * (1 - vals[-1]) / (1 - u[top])
    return SampleBatch(out, 0.5, seed, 1, float(n_draws))
