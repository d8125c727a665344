"""sigma and theta functions built from gap determinants, and ODE residuals.

``sigma`` lives in raw eigenvalue units, sigma(t) = (1+t^2) d/dt log F_N(t/N),
and satisfies a sigma-form Painleve VI equation.  ``theta`` uses tau = 1/t
with the scaled kernel, theta(tau) = tau d/dtau log F(1/tau), and in the
large-N limit satisfies a sigma-form Painleve V equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .fredholm import GapDerivatives, handle_for
from .kernels import EnsembleConfig, KernelHandle, SParam


@dataclass(frozen=True)
class SigmaSample:
    t: float
    sigma: float
    sigma1: float
    sigma2: float


@dataclass(frozen=True)
class ThetaSample:
    tau: float
    theta: float
    theta1: float
    theta2: float


@dataclass(frozen=True)
class ResidualReport:
    grid: list
    residuals: list
    normalizers: list
    max_relative: float

    @classmethod
    def from_pairs(cls, grid, pairs):
        res = [float(r) for r, _ in pairs]
        nrm = [float(n) for _, n in pairs]
        rel = [r / n if n > 0 else 0.0 for r, n in zip(res, nrm)]
        return cls([float(g) for g in grid], res, nrm, float(max(rel)))

    @property
    def passed(self) -> bool:
        return self.max_relative < 1e-3


def _check_interval(lo, hi, name):
    lo, hi = float(lo), float(hi)
    if not 0 < lo < hi:
        raise DomainError(f"{name} must satisfy 0 < lo < hi (got [{lo}, {hi}])")
    return lo, hi


class SigmaFunction:
    """t -> SigmaSample on a raw-variable interval, backed by one interpolant."""

    def __init__(self, cfg: EnsembleConfig, t_interval, cheb_order=32, cheb_adaptive=True,
                 **gap_kwargs):
        a, b = _check_interval(*t_interval, "t_interval")
        self.cfg = cfg
        n = cfg.n_dim
        self.deriv = GapDerivatives(KernelHandle.finite(cfg), (a / n, b / n), cheb_order,
                                    gap_kwargs, adaptive=cheb_adaptive)

    def __call__(self, t: float) -> SigmaSample:
        n = self.cfg.n_dim
        _, g1, g2, g3 = (float(v) for v in self.deriv.log_derivatives(t / n))
        w = 1 + t * t
        s0 = w * g1 / n
        s1 = 2 * t * g1 / n + w * g2 / n ** 2
        s2 = 2 * g1 / n + 4 * t * g2 / n ** 2 + w * g3 / n ** 3
        return SigmaSample(float(t), s0, s1, s2)


def sigma_from_gap(cfg: EnsembleConfig, t_interval, cheb_order: int = 32, **gap_kwargs) -> SigmaFunction:
    return SigmaFunction(cfg, t_interval, cheb_order, **gap_kwargs)


class ThetaFunction:
    """tau -> ThetaSample for a finite ensemble or the limit kernel."""

    def __init__(self, kind, tau_interval, cheb_order=32, cheb_adaptive=True, **gap_kwargs):
        lo, hi = _check_interval(*tau_interval, "tau_interval")
        self.kernel = handle_for(kind)
        self.deriv = GapDerivatives(self.kernel, (1 / hi, 1 / lo), cheb_order, gap_kwargs,
                                    adaptive=cheb_adaptive)

    def __call__(self, tau: float) -> ThetaSample:
        u = 1.0 / tau
        _, g1, g2, g3 = (float(v) for v in self.deriv.log_derivatives(u))
        th = -u * g1
        th1 = u * u * (g1 + u * g2)
        th2 = -u * u * (2 * u * g1 + 4 * u * u * g2 + u ** 3 * g3)
        return ThetaSample(float(tau), th, th1, th2)


def theta_from_gap(kind, tau_interval, cheb_order: int = 32, **gap_kwargs) -> ThetaFunction:
    return ThetaFunction(kind, tau_interval, cheb_order, **gap_kwargs)


def sigma_pvi_terms(sample: SigmaSample, cfg: EnsembleConfig) -> np.ndarray:
    """The six monomial groups of the sigma-form Painleve VI equation.

    The leading group is (1+t^2)^2 sigma''^2.  With a single power of
    (1+t^2) the equation already fails for N = 1, s = 0, where
    sigma = 1 / (pi/2 + arctan t) in closed form.
    """
    t, s0, s1, s2 = sample.t, sample.sigma, sample.sigma1, sample.sigma2
    r, m, n = cfg.s.re, cfg.s.im, cfg.n_dim
    w = 1 + t * t
    return np.array([
        w * w * s2 * s2,
        4 * w * s1 ** 3,
        -8 * t * s1 * s1 * s0,
        4 * s0 * s0 * (s1 - r * r),
        8 * (t * r * r - r * m - n * m) * s0 * s1,
        4 * (2 * t * m * (n + r) - m * m - t * t * r * r + n * (2 * r + n)) * s1 * s1,
    ])


def sigma_pvi_residual(sample: SigmaSample, cfg: EnsembleConfig):
    """(|LHS|, sum of term magnitudes) for the Painleve VI equation."""
    terms = sigma_pvi_terms(sample, cfg)
    return abs(float(terms.sum())), float(np.abs(terms).sum())


def theta_pv_terms(sample: ThetaSample, s) -> np.ndarray:
    """Monomials of the real form of the theta Painleve V equation.

    With B = tau theta' - theta, r = Re s and m = Im s, expanding
    -tau^2 theta''^2 = [2B + theta'^2 + 2m theta']^2
                       - theta'^2 (theta' - 2is)(theta' + 2i conj(s))
    gives tau^2 theta''^2 + 4 (B^2 + theta'^2 B - r^2 theta'^2 + 2m theta' B) = 0.
    """
    s = SParam.of(s)
    tau, th, th1, th2 = sample.tau, sample.theta, sample.theta1, sample.theta2
    b = tau * th1 - th
    return np.array([
        tau * tau * th2 * th2,
        4 * b * b,
        4 * th1 * th1 * b,
        -4 * s.re ** 2 * th1 * th1,
        8 * s.im * th1 * b,
    ])


def theta_pv_residual(sample: ThetaSample, s):
    terms = theta_pv_terms(sample, s)
    return abs(float(terms.sum())), float(np.abs(terms).sum())


def theta_pv_complex_lhs(sample: ThetaSample, s) -> complex:
    """The unexpanded complex form, tau^2 theta''^2 + RHS.  Used as a cross-check."""
    s = SParam.of(s).value
    tau, th, th1, th2 = sample.tau, sample.theta, sample.theta1, sample.theta2
    sb = s.conjugate()
    rhs = (2 * (tau * th1 - th) + th1 ** 2 + 1j * (sb - s) * th1) ** 2 \
        - th1 ** 2 * (th1 - 2j * s) * (th1 + 2j * sb)
    return tau * tau * th2 * th2 + rhs


def sigma_from_theta(sample: ThetaSample, n_dim: int) -> SigmaSample:
    """sigma at t = N/tau from theta at tau (chain rule, no new numerics)."""
    tau, th, th1, th2 = sample.tau, sample.theta, sample.theta1, sample.theta2
    n = n_dim
    t = n / tau
    s0 = -th * (tau / n + n / tau)
    s1 = (tau * tau / n ** 2) * (tau * th1 + th) + (tau * th1 - th)
    # d/dt = -(tau^2 / N) d/dtau
    ds1 = (4 * tau * tau * th1 + 2 * tau * th + tau ** 3 * th2) / n ** 2 + tau * th2
    s2 = -(tau * tau / n) * ds1
    return SigmaSample(t, s0, s1, s2)


def pvi_report(cfg: EnsembleConfig, t_grid: Sequence[float], cheb_order=32, **gap_kwargs) -> ResidualReport:
    t_grid = np.asarray(t_grid, dtype=float)
    sf = sigma_from_gap(cfg, (t_grid.min(), t_grid.max()), cheb_order, **gap_kwargs)
    return ResidualReport.from_pairs(t_grid, [sigma_pvi_residual(sf(t), cfg) for t in t_grid])


def pv_report(kind, tau_grid: Sequence[float], cheb_order=32, **gap_kwargs) -> ResidualReport:
    tau_grid = np.asarray(tau_grid, dtype=float)
    tf = theta_from_gap(kind, (tau_grid.min(), tau_grid.max()), cheb_order, **gap_kwargs)
    s = kind.s if isinstance(kind, EnsembleConfig) else SParam.of(kind)
    return ResidualReport.from_pairs(tau_grid, [theta_pv_residual(tf(x), s) for x in tau_grid])


def pvi_in_theta(sample: ThetaSample, cfg: EnsembleConfig) -> float:
    """Painleve VI left-hand side at t = N/tau, divided by N^2, written in theta.

    As N grows this tends to the Painleve V left-hand side; the remainder
    is a polynomial in 1/N.
    """
    n = cfg.n_dim
    return float(sigma_pvi_terms(sigma_from_theta(sample, n), cfg).sum()) / n ** 2


def pv_lhs(sample: ThetaSample, s) -> float:
    return float(theta_pv_terms(sample, s).sum())


def rescaled_expansion_check(cfg: EnsembleConfig, tau: float, n_list=(20, 40, 80),
                             cheb_order: int = 32, window: float = 0.2) -> list:
    """[|P0(theta_N)|, |LHS_N1|, |LHS_N2|, ...] at ``tau``.

    P0 is the Painleve V left-hand side evaluated on theta for ``cfg``; each
    LHS_N is ``pvi_in_theta`` on theta_N for N in ``n_list`` (same s).  The
    theta functions come from interpolants on [tau(1-window), tau(1+window)].
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive (got {tau})")
    span = (tau * (1 - window), tau * (1 + window))
    p0 = abs(pv_lhs(theta_from_gap(cfg, span, cheb_order)(tau), cfg.s))
    out = [p0]
    for n in n_list:
        c = EnsembleConfig(cfg.s, int(n))
        out.append(abs(pvi_in_theta(theta_from_gap(c, span, cheb_order)(tau), c)))
    return out
