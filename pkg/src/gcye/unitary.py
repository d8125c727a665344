"""Unitary side: Cayley angles, circular kernels and their link to the Hermitian limit.

Eigenvalues x of the Hermitian ensemble map to angles theta = 2 arccot(x) on
the unit circle.  Kernels here are complex; only off-diagonal values are
implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from ._parallel import pmap
from .errors import DomainError, NumericalError
from .fredholm import cdf_largest, gap_log_derivative
from .kernels import EnsembleConfig, KernelHandle, SParam, kernel_values
from .specfun import hyp1f1_sums, hyp2f1_poly, log_gamma

RATIO_CONSTANCY_TOL = 1e-6


@dataclass(frozen=True)
class AngleVal:
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 2 * math.pi:
            raise DomainError(f"angle {self.theta} outside [0, 2 pi]")


def cayley_angle(a: float) -> AngleVal:
    """theta = 2 arccot(a), in (0, 2 pi)."""
    if not math.isfinite(a):
        raise DomainError("cayley_angle needs a finite argument")
    return AngleVal(2 * math.atan2(1.0, a))


def cot_half(theta) -> float:
    """Inverse of ``cayley_angle``: cot(theta / 2)."""
    th = theta.theta if isinstance(theta, AngleVal) else float(theta)
    if math.sin(th / 2) == 0.0:
        raise DomainError("cot(theta/2) is infinite at theta = 0")
    return math.cos(th / 2) / math.sin(th / 2)


def log_weight_u(theta, s) -> np.ndarray:
    """log w_U(theta) for theta in (-pi, pi) minus {0}.

    With the principal logarithm, (1 - e^{i theta})^conj(s) (1 - e^{-i theta})^s
    equals |2 sin(theta/2)|^(2 Re s) exp(-Im s (pi Sgn(theta) - theta)), a
    positive real number.
    """
    s = SParam.of(s)
    th = np.asarray(theta, dtype=float)
    if np.any(th == 0) or np.any(np.abs(th) >= math.pi):
        raise DomainError("w_U needs theta in (-pi, pi) without 0")
    return 2 * s.re * np.log(np.abs(2 * np.sin(th / 2))) - s.im * (math.pi * np.sign(th) - th)


def log_d_n(n: int, s) -> complex:
    """log d_N(s) through log-gamma; real for every admissible s."""
    s = SParam.of(s)
    r2 = 2 * s.re
    val = (log_gamma(s.conj + 1 + n) - log_gamma(s.conj + 1)
           + log_gamma(s.value + 1 + n) - log_gamma(s.value + 1)
           - log_gamma(r2 + 1 + n) + log_gamma(r2 + 1) - log_gamma(n + 1)
           + log_gamma(1 + s.value) + log_gamma(1 + s.conj) - log_gamma(1 + r2)
           - math.log(2 * math.pi))
    return val


def q_unitary(n: int, s, z, conj: bool = False):
    """Q_N^s(z) = 2F1[s, -N; -N - conj(s); z]; ``conj`` swaps s and conj(s)."""
    s = SParam.of(s)
    a, b = (s.conj, s.value) if conj else (s.value, s.conj)
    return hyp2f1_poly(n, a, -n - b, z)


def _check_pair(alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(alpha == beta):
        raise DomainError("unitary kernels are implemented off the diagonal only")
    return np.broadcast_arrays(alpha, beta)


def kernel_u_finite(alpha, beta, cfg: EnsembleConfig):
    """K_N^U(e^{i alpha}, e^{i beta}) for alpha != beta in (-pi, pi) minus {0}."""
    alpha, beta = _check_pair(alpha, beta)
    n, s = cfg.n_dim, cfg.s
    lw = 0.5 * (log_weight_u(alpha, s) + log_weight_u(beta, s))
    pref = np.exp(log_d_n(n, s).real + lw)
    ea, eb = np.exp(1j * alpha), np.exp(1j * beta)
    half = 0.5 * (alpha - beta)
    num = (np.exp(1j * n * half) * q_unitary(n, s, 1 / ea) * q_unitary(n, s, eb, conj=True)
           - np.exp(-1j * n * half) * q_unitary(n, s, ea, conj=True) * q_unitary(n, s, 1 / eb))
    out = pref * num / (2j * np.sin(half))
    return complex(out) if out.ndim == 0 else out


def _q_limit(s: SParam, z, conj=False):
    h = s.conj if conj else s.value
    val, *_ = hyp1f1_sums(h, 2 * s.re + 1, z)
    return val


def kernel_u_limit(alpha, beta, s):
    """Limit kernel K^U(alpha, beta) for nonzero alpha != beta."""
    alpha, beta = _check_pair(alpha, beta)
    if np.any(alpha == 0) or np.any(beta == 0):
        raise DomainError("K^U needs nonzero arguments")
    s = SParam.of(s)
    r2 = 2 * s.re
    log_e = (log_gamma(s.value + 1) + log_gamma(s.conj + 1) - 2 * log_gamma(r2 + 1)).real
    e = math.exp(log_e) / (2j * math.pi)
    pref = (e * np.abs(alpha * beta) ** s.re
            * np.exp(-0.5 * math.pi * s.im * (np.sign(alpha) + np.sign(beta))))
    half = 0.5 * (alpha - beta)
    num = (np.exp(1j * half) * _q_limit(s, -1j * alpha) * _q_limit(s, 1j * beta, conj=True)
           - np.exp(-1j * half) * _q_limit(s, 1j * alpha, conj=True) * _q_limit(s, -1j * beta))
    out = pref * num / (alpha - beta)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrespondenceRatios:
    with_jacobian: complex
    bare: complex


def correspondence_ratio(x, y, s) -> CorrespondenceRatios:
    """K^U(2/x, 2/y) over K_inf(x, y), with and without sqrt(|d alpha/dx| |d beta/dy|)."""
    x, y = _check_pair(x, y)
    s = SParam.of(s)
    ku = kernel_u_limit(2 / x, 2 / y, s)
    kinf = kernel_values(KernelHandle.limit(s), x, y)
    bare = ku / kinf
    jac = ku * np.sqrt(2 / x ** 2) * np.sqrt(2 / y ** 2) / kinf
    return CorrespondenceRatios(jac, bare)


@dataclass(frozen=True)
class CorrespondenceReport:
    s: SParam
    selected: str
    constant: complex
    variation_jacobian: float
    variation_bare: float

    @property
    def variation(self) -> float:
        return self.variation_jacobian if self.selected == "with_jacobian" else self.variation_bare


def _variation(vals):
    m = np.abs(vals)
    return float((m.max() - m.min()) / m.mean())


def correspondence_check(s, lo: float = 0.5, hi: float = 5.0, size: int = 10,
                         tol: float = RATIO_CONSTANCY_TOL) -> CorrespondenceReport:
    """Decide which of the two ratios is constant in modulus on a size x size grid.

    Grid points with x = y are skipped.  Raises NumericalError unless exactly
    one ratio varies by less than ``tol`` (relative).
    """
    s = SParam.of(s)
    g = np.linspace(lo, hi, size)
    X, Y = np.meshgrid(g, g, indexing="ij")
    off = X != Y
    r = correspondence_ratio(X[off], Y[off], s)
    vj, vb = _variation(r.with_jacobian), _variation(r.bare)
    ok = [name for name, v in (("with_jacobian", vj), ("bare", vb)) if v < tol]
    if len(ok) != 1:
        raise NumericalError(f"ratio constancy undecided: variations {vj:.2e} (jacobian), {vb:.2e} (bare)")
    vals = r.with_jacobian if ok[0] == "with_jacobian" else r.bare
    const = complex(np.mean(np.abs(vals)))
    return CorrespondenceReport(s, ok[0], const, vj, vb)


def sigma_resolvent(cfg: EnsembleConfig, t: float) -> float:
    """sigma(t) = (1+t^2) d/dt log F_N in raw units, from the resolvent diagonal."""
    n = cfg.n_dim
    val, _ = gap_log_derivative(KernelHandle.finite(cfg), t / n)
    return (1 + t * t) * val / n


def smallest_angle_survival(y, cfg: EnsembleConfig, sigma_fn=None, nodes: int = 48,
                            with_check: bool = False):
    """P[theta_1 >= y] = exp(-1/2 int_0^y sigma(cot(phi/2)) dphi) for y in (0, pi).

    ``sigma_fn`` maps raw t to sigma(t) and defaults to the resolvent form.
    With ``with_check`` returns ``(value, direct)`` where ``direct`` is
    P[lambda_1 <= cot(y/2)] from the gap determinant.
    """
    yv = y.theta if isinstance(y, AngleVal) else float(y)
    if not 0 < yv < math.pi:
        raise DomainError(f"y must lie in (0, pi) (got {yv})")
    if sigma_fn is None:
        sigma_fn = lambda t: sigma_resolvent(cfg, t)
    u, w = roots_legendre(nodes)
    phi = 0.5 * yv * (u + 1)
    sig = np.array(pmap(lambda p: sigma_fn(1 / math.tan(p / 2)), phi))
    integral = 0.5 * yv * float(np.dot(w, sig))
    val = math.exp(-0.5 * integral)
    if not with_check:
        return val
    direct = cdf_largest(cfg, cot_half(yv) / cfg.n_dim)
    return val, direct
