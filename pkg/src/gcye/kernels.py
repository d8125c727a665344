"""Weight, orthogonal polynomials and correlation kernels of the ensemble.

The finite-N kernel is always evaluated in its scaled form
``K_[N](x, y) = N K_N(N x, N y)`` through the pair (P_N, Q_N), whose
normalising constants and weight factors are combined in log space; the
raw polynomial route (``p_tilde``, ``p_monic``, ``weight_log``) is kept
for small-N cross checks and diagnostics.

All kernel-level functions accept numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError
from .specfun import hyp1f1_sums, hyp2f1_poly, hyp2f1_poly_reflected

DEFAULT_DIAG_SWITCH = 1e-6
DEFAULT_TOL = 1e-14
IMAG_RESIDUE_MAX = 1e-10


@dataclass(frozen=True)
class SParam:
    """Deformation parameter s, admissible when Re s > -1/2."""

    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError("s must be finite")
        if self.re <= -0.5:
            raise DomainError(f"Re s must exceed -1/2 (got {self.re})")

    @classmethod
    def of(cls, s) -> "SParam":
        if isinstance(s, SParam):
            return s
        s = complex(s)
        return cls(s.real, s.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def conj(self) -> complex:
        return complex(self.re, -self.im)

    @property
    def abs2(self) -> float:
        return self.re * self.re + self.im * self.im


@dataclass(frozen=True)
class EnsembleConfig:
    s: SParam
    n_dim: int

    def __post_init__(self):
        if not isinstance(self.s, SParam):
            object.__setattr__(self, "s", SParam.of(self.s))
        if int(self.n_dim) != self.n_dim or self.n_dim < 1:
            raise DomainError(f"matrix size must be a positive integer (got {self.n_dim})")
        object.__setattr__(self, "n_dim", int(self.n_dim))


@dataclass(frozen=True)
class PQPair:
    p_val: np.ndarray
    p_deriv: np.ndarray
    q_val: np.ndarray
    q_deriv: np.ndarray


def kernel_prefactor(s: SParam) -> float:
    """(1/2pi) Gamma(s+1) Gamma(conj(s)+1) / (Gamma(2Re s+1) Gamma(2Re s+2))."""
    lg = 2.0 * special.loggamma(s.value + 1.0).real
    lg -= special.gammaln(2 * s.re + 1) + special.gammaln(2 * s.re + 2)
    return math.exp(lg) / (2 * math.pi)


def _check_nonzero(x):
    x = np.asarray(x, dtype=float)
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise DomainError("kernel arguments must be finite and nonzero")
    return x


# ---------------------------------------------------------------- raw scale

def weight_log(x, cfg: EnsembleConfig):
    """log w_H(x) = -(Re s + N) log(1+x^2) + 2 Im s arctan(x)."""
    x = np.asarray(x, dtype=float)
    s = cfg.s
    out = -(s.re + cfg.n_dim) * np.log1p(x * x) + 2 * s.im * np.arctan(x)
    return float(out) if out.ndim == 0 else out


def p_monic(m: int, x, cfg: EnsembleConfig):
    """Monic orthogonal polynomial p_m for the weight w_H (raw variable)."""
    N, s = cfg.n_dim, cfg.s
    if m < 0 or m > N:
        raise DomainError(f"p_monic needs 0 <= m <= N (m={m}, N={N})")
    a = 2 * s.re + 2 * N - 2 * m
    if a <= 0:
        raise DomainError(f"p_{m} undefined: 2Re s + 2N - 2m = {a} <= 0")
    x = np.asarray(x, dtype=float)
    zeta = 2.0 / (1.0 + 1j * x)
    out = (x - 1j) ** m * hyp2f1_poly(m, s.value + N - m, a, zeta)
    return complex(out) if out.ndim == 0 else out


def p_tilde(x, cfg: EnsembleConfig):
    """(x-i)^N 2F1[-N, s; 2Re s+1; 2/(1+ix)], defined for every admissible s."""
    N, s = cfg.n_dim, cfg.s
    x = np.asarray(x, dtype=float)
    zeta = 2.0 / (1.0 + 1j * x)
    out = (x - 1j) ** N * hyp2f1_poly(N, s.value, 2 * s.re + 1, zeta)
    return complex(out) if out.ndim == 0 else out


def _p_and_deriv(m, x, h, a, n_dim=None):
    # (x-i)^m 2F1[-m, h; a; 2/(1+ix)] and its x-derivative
    zeta = 2.0 / (1.0 + 1j * x)
    f, kf = hyp2f1_poly_reflected(m, h, a, zeta, with_derivative=True)
    base = (x - 1j) ** m
    dbase = m * (x - 1j) ** (m - 1) if m > 0 else 0.0
    return base * f, dbase * f - 0.5j * base * kf * zeta


# ------------------------------------------------------------ scaled pair

def log_d_prime(N: int, s: SParam) -> float:
    """log of sqrt(Gamma(2Re s+N+1) / (N^(2Re s+1) Gamma(N))), which tends to 0."""
    return 0.5 * (special.gammaln(2 * s.re + N + 1)
                  - (2 * s.re + 1) * math.log(N) - special.gammaln(N))


def _phi_scaled(x, N, s: SParam, eps: int):
    """Sgn(x)^N Phi_N and its derivative for eps = N - n in {0, 1}."""
    n = N - eps
    h = s.value + eps
    a = 2 * s.re + 1 + eps
    zeta = 2.0 / (1.0 + 1j * N * x)
    f, kf = hyp2f1_poly_reflected(n, h, a, zeta, with_derivative=True)
    df = kf * zeta * (-0.5j * N)

    alpha = (N - s.value) / 2 - eps
    beta = -(s.conj + N) / 2
    u = 1j / (N * x)
    sgn = np.sign(x)
    logpref = (log_d_prime(N, s) + math.pi * s.im * sgn / 2
               + s.re * np.log(2.0 / np.abs(x))
               + alpha * np.log1p(-u) + beta * np.log1p(u))
    pref = np.exp(logpref)
    if eps:
        pref = pref * (2.0 / x)
    dlog = (-(eps + s.re) / x
            + alpha * (u / x) / (1 - u)
            - beta * (u / x) / (1 + u))
    return pref * f, pref * (dlog * f + df)


def eval_pq_scaled(x, cfg: EnsembleConfig) -> PQPair:
    """Sign-adjusted (P_N, P_N', Q_N, Q_N') of the scaled finite-N kernel.

    Returns Sgn(x)^N times each function, which is what enters the kernel on
    same-sign arguments and what converges to the limit pair.
    """
    x = _check_nonzero(x)
    N, s = cfg.n_dim, cfg.s
    p, dp = _phi_scaled(x, N, s, 0)
    q, dq = _phi_scaled(x, N, s, 1)
    return PQPair(p, dp, q, dq)


def eval_pq_limit(x, s: SParam, tol: float = DEFAULT_TOL) -> PQPair:
    """(P, P', Q, Q') of the limit kernel, via Kummer series in 2i/x."""
    x = _check_nonzero(x)
    s = SParam.of(s)
    z = 2j / x
    sgn = np.sign(x)
    base = np.exp(s.re * np.log(2.0 / np.abs(x)) - 1j / x + math.pi * s.im * sgn / 2)
    out = []
    for eps in (0, 1):
        f, kf, _, _ = hyp1f1_sums(s.value + eps, 2 * s.re + 1 + eps, z, tol,
                                  with_derivative=True)
        pref = base * (2.0 / x) if eps else base
        dlog = -(s.re + eps) / x + 1j / (x * x)
        out.append((pref * f, pref * (dlog * f - kf / x)))
    return PQPair(out[0][0], out[0][1], out[1][0], out[1][1])


# ------------------------------------------------------------------ handle

@dataclass(frozen=True)
class KernelHandle:
    """Evaluator for K_[N] (``n_dim`` set) or K_inf (``n_dim`` None)."""

    s: SParam
    n_dim: Optional[int] = None
    diag_switch: float = DEFAULT_DIAG_SWITCH
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "s", SParam.of(self.s))
        if self.n_dim is not None:
            EnsembleConfig(self.s, self.n_dim)
        if self.diag_switch <= 0 or self.tol <= 0:
            raise DomainError("diag_switch and tol must be positive")

    @classmethod
    def finite(cls, cfg: EnsembleConfig, **kw) -> "KernelHandle":
        return cls(cfg.s, cfg.n_dim, **kw)

    @classmethod
    def limit(cls, s, **kw) -> "KernelHandle":
        return cls(SParam.of(s), None, **kw)

    @property
    def is_limit(self) -> bool:
        return self.n_dim is None

    @property
    def config(self) -> EnsembleConfig:
        if self.n_dim is None:
            raise AttributeError("limit kernel has no ensemble config")
        return EnsembleConfig(self.s, self.n_dim)

    @property
    def prefactor(self) -> float:
        return kernel_prefactor(self.s)

    def pq(self, x) -> PQPair:
        if self.n_dim is None:
            return eval_pq_limit(x, self.s, self.tol)
        return eval_pq_scaled(x, self.config)

    def __call__(self, x, y):
        return kernel_values(self, x, y)

    def matrix(self, xs):
        return correlation_matrix(self, xs)


def _realify(val, scale):
    resid = np.abs(val.imag)
    bad = resid > IMAG_RESIDUE_MAX * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad):
        worst = float(np.max(resid / np.maximum(scale, np.finfo(float).tiny)))
        raise NumericalError(f"kernel has imaginary residue {worst:.2e} (relative)")
    return val.real


def _combine(c, px, qx, py, qy, dx):
    num = px * qy - qx * py
    scale = c * (np.abs(px * qy) + np.abs(qx * py)) / np.abs(dx)
    return c * num / dx, scale


def _wronskian(c, pair: PQPair):
    val = c * (pair.p_deriv * pair.q_val - pair.q_deriv * pair.p_val)
    scale = c * (np.abs(pair.p_deriv * pair.q_val) + np.abs(pair.q_deriv * pair.p_val))
    return val, scale


def kernel_values(kh: KernelHandle, x, y):
    """Vectorised real kernel values on same-sign, nonzero arguments."""
    x = _check_nonzero(x)
    y = _check_nonzero(y)
    x, y = np.broadcast_arrays(x, y)
    if np.any(x * y <= 0):
        raise DomainError("kernel arguments must share the same sign")
    c = kh.prefactor
    out = np.empty(x.shape)
    near = np.abs(x - y) <= kh.diag_switch * np.maximum(np.abs(x), np.abs(y))
    if np.any(~near):
        xo, yo = x[~near], y[~near]
        a, b = kh.pq(xo), kh.pq(yo)
        val, scale = _combine(c, a.p_val, a.q_val, b.p_val, b.q_val, xo - yo)
        out[~near] = _realify(val, scale)
    if np.any(near):
        mid = 0.5 * (x[near] + y[near])
        val, scale = _wronskian(c, kh.pq(mid))
        out[near] = _realify(val, scale)
    return float(out) if out.ndim == 0 else out


def kernel_eval(kh: KernelHandle, x: float, y: float) -> float:
    return float(kernel_values(kh, x, y))


def correlation_matrix(kh: KernelHandle, pts):
    """Symmetric matrix K(pts_i, pts_j); its determinant is the n-point correlation."""
    pts = _check_nonzero(np.atleast_1d(pts))
    if not (np.all(pts > 0) or np.all(pts < 0)):
        raise DomainError("correlation points must share the same sign")
    c = kh.prefactor
    pair = kh.pq(pts)
    X, Y = pts[:, None], pts[None, :]
    near = np.abs(X - Y) <= kh.diag_switch * np.maximum(np.abs(X), np.abs(Y))
    dx = np.where(near, 1.0, X - Y)
    val, scale = _combine(c, pair.p_val[:, None], pair.q_val[:, None],
                          pair.p_val[None, :], pair.q_val[None, :], dx)
    out = np.empty(near.shape)
    far = ~near
    out[far] = _realify(val[far], scale[far])
    if np.any(near):
        ii, jj = np.nonzero(near)
        exact = ii == jj
        dval, dscale = _wronskian(c, pair)
        out[ii[exact], jj[exact]] = _realify(dval, dscale)[ii[exact]]
        if np.any(~exact):
            i2, j2 = ii[~exact], jj[~exact]
            mid = 0.5 * (pts[i2] + pts[j2])
            mval, mscale = _wronskian(c, kh.pq(mid))
            out[i2, j2] = _realify(mval, mscale)
    return 0.5 * (out + out.T)


def kernel_diagonal(kh: KernelHandle, xs):
    """K(x, x) via the Wronskian form."""
    xs = _check_nonzero(xs)
    val, scale = _wronskian(kh.prefactor, kh.pq(xs))
    return _realify(val, scale)


# ------------------------------------------------------------ diagnostics

def phi_psi_recurrence_residual(x: float, cfg: EnsembleConfig) -> float:
    """Relative residual of the first-order system for (phi, psi), Re s > 1/2.

    phi = sqrt(C w_H) p_N and psi = sqrt(C w_H) p_{N-1}; the constant C
    drops out of the homogeneous system and is omitted.
    """
    s, N = cfg.s, cfg.n_dim
    if s.re <= 0.5:
        raise DomainError("the (phi, psi) recurrence needs Re s > 1/2")
    x = float(x)
    pN, dpN = _p_and_deriv(N, x, s.value, 2 * s.re)
    pM, dpM = _p_and_deriv(N - 1, x, s.value + 1, 2 * s.re + 2)
    sw = math.exp(0.5 * weight_log(x, cfg))
    dlog = (-(s.re + N) * x + s.im) / (1 + x * x)
    phi, psi = sw * pN, sw * pM
    dphi, dpsi = sw * (dpN + dlog * pN), sw * (dpM + dlog * pM)
    m = 1 + x * x
    A = -x * s.re + s.im * (1 + N / s.re)
    B = s.abs2 / s.re ** 2 * N * (2 * s.re + N) / (2 * s.re + 1)
    C = 2 * s.re + 1
    r1 = abs(m * dphi - A * phi - B * psi) / (abs(m * dphi) + abs(A * phi) + abs(B * psi))
    r2 = abs(m * dpsi + C * phi + A * psi) / (abs(m * dpsi) + abs(C * phi) + abs(A * psi))
    return max(r1, r2)


def limit_pq_recurrence_residual(x: float, s: SParam) -> float:
    """Relative residual of the first-order system satisfied by the limit pair.

    The system is the N -> infinity limit of the (phi, psi) recurrence, so it
    holds for the pair built from p_N rather than p~_N,

        P = P~ + i s / (2 Re s (2 Re s + 1)) * Q,

    together with Q/2 in place of Q:

        x^2 P'     = (-x Re s + Im s / Re s) P + |s|^2 / (Re s^2 (2 Re s + 1)) (Q/2)
        x^2 (Q/2)' = -(2 Re s + 1) P - (-x Re s + Im s / Re s) (Q/2)
    """
    s = SParam.of(s)
    if s.re == 0:
        raise DomainError("the limit recurrence needs Re s != 0")
    pair = eval_pq_limit(np.array([float(x)]), s)
    shift = 1j * s.value / (2 * s.re * (2 * s.re + 1))
    Q, dQ = 0.5 * pair.q_val[0], 0.5 * pair.q_deriv[0]
    P = pair.p_val[0] + 2 * shift * Q
    dP = pair.p_deriv[0] + 2 * shift * dQ
    x = float(x)
    A = -x * s.re + s.im / s.re
    B = s.abs2 / s.re ** 2 / (2 * s.re + 1)
    C = 2 * s.re + 1
    r1 = abs(x * x * dP - A * P - B * Q) / (abs(x * x * dP) + abs(A * P) + abs(B * Q))
    r2 = abs(x * x * dQ + C * P + A * Q) / (abs(x * x * dQ) + abs(C * P) + abs(A * Q))
    return max(r1, r2)
