"""Gap probabilities det(I - K) on (t, inf) and their t-derivatives.

The production path is a Nystrom discretisation.  ``gap_series`` sums the
alternating correlation-function series on a tensorised quadrature and is
meant as an independent check, not for routine use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.special import roots_legendre

from ._parallel import pmap
from .errors import DomainError, IllConditioned, NoConvergence, NumericalError, TruncationWarning
from .kernels import EnsembleConfig, KernelHandle, SParam

MAP_KINDS = ("rational", "tanh_sinh")
MAX_QUAD_ORDER = 1280
GAP_TOL = 1e-10
GAP_FAIL_TOL = 1e-6
SERIES_KMAX = 8
CHEB_MAX_ORDER = 256
CHEB_TAIL_TOL = 1e-8
CHEB_TARGET = 1e-12


@dataclass(frozen=True)
class Quadrature:
    t: float
    map_kind: str
    scale: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    order: int

    def integrate(self, f: Callable) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class GapResult:
    t: float
    value: float
    method: str
    error_estimate: float
    order_used: int


@dataclass(frozen=True)
class DerivativeBundle:
    t: float
    f: float
    f1: float
    f2: float
    f3: float


def build_quadrature(t: float, order: int, map_kind: str = "rational",
                     scale: Optional[float] = None, tail_decay: float = 0.5) -> Quadrature:
    """Nodes and weights for integrals over (t, inf).

    ``rational``: Gauss-Legendre on (-1, 1) pushed through
    x = t + L (1+u)/(1-u).  ``tanh_sinh``: trapezoid rule in u for the
    double-exponential map x = t + L exp(pi/2 sinh u), which copes with slow
    algebraic tails; ``tail_decay`` is the smallest exponent d such that the
    integrand decays like x^(-1-d), and sets the upper truncation.
    L defaults to 1 + t.
    """
    if not t > 0:
        raise DomainError(f"quadrature needs t > 0 (got {t})")
    if order < 8:
        raise DomainError("quadrature order must be at least 8")
    if map_kind not in MAP_KINDS:
        raise DomainError(f"unknown map kind {map_kind!r}")
    L = float(scale) if scale is not None else 1.0 + t
    if L <= 0:
        raise DomainError("map scale must be positive")

    if map_kind == "rational":
        u, w = roots_legendre(order)
        nodes = t + L * (1 + u) / (1 - u)
        weights = w * 2 * L / (1 - u) ** 2
    else:
        lo = 4.0
        hi = math.asinh(80.0 / (math.pi * tail_decay))
        u = np.linspace(-lo, hi, order)
        h = u[1] - u[0]
        e = np.exp(0.5 * math.pi * np.sinh(u))
        nodes = t + L * e
        weights = h * L * 0.5 * math.pi * np.cosh(u) * e
    return Quadrature(float(t), map_kind, L, nodes, weights, int(order))


def default_map_kind(kh) -> str:
    """``rational`` when 2 Re s is a non-negative integer, else ``tanh_sinh``.

    The diagonal decays like x^(-2 Re s - 2); through the rational map that
    becomes an endpoint factor (1-u)^(2 Re s), which Gauss-Legendre only
    handles well when the exponent is a non-negative integer.
    """
    s = getattr(kh, "s", None)
    if s is None:
        return "rational"
    two_re = 2 * s.re
    if two_re >= 0 and abs(two_re - round(two_re)) < 1e-12:
        return "rational"
    return "tanh_sinh"


def _quad(kh, t, order, map_kind):
    kind = map_kind or default_map_kind(kh)
    s = getattr(kh, "s", None)
    decay = 0.5 if s is None else min(0.5, 2 * s.re + 1)
    return build_quadrature(t, order, kind, tail_decay=decay)


def operator_matrix(kh, quad: Quadrature) -> np.ndarray:
    """Symmetrised W^(1/2) K W^(1/2) on the quadrature nodes."""
    sw = np.sqrt(quad.weights)
    return sw[:, None] * kh.matrix(quad.nodes) * sw[None, :]


def _det_i_minus(A):
    sign, logdet = np.linalg.slogdet(np.eye(len(A)) - A)
    return float(sign) * math.exp(logdet)


def _clip_probability(v):
    if v > 1.0:
        if v - 1.0 > 1e-12:
            raise NumericalError(f"gap probability {v!r} exceeds 1")
        return 1.0
    return v


def gap_nystrom(kh, t: float, order: int = 40, map_kind: Optional[str] = None,
                adaptive: bool = True, tol: float = GAP_TOL,
                max_order: int = MAX_QUAD_ORDER) -> GapResult:
    """det(I - K) restricted to (t, inf) by Nystrom discretisation.

    The error estimate is the change between ``order/2`` and ``order`` nodes;
    when ``adaptive`` the order doubles until it drops below ``tol`` or
    reaches ``max_order``.
    """
    if not t > 0:
        raise DomainError(f"gap probability needs t > 0 (got {t})")
    prev = _det_i_minus(operator_matrix(kh, _quad(kh, t, max(8, order // 2), map_kind)))
    while True:
        val = _det_i_minus(operator_matrix(kh, _quad(kh, t, order, map_kind)))
        err = abs(val - prev)
        if not adaptive or err < tol or order >= max_order:
            break
        prev = val
        order = min(2 * order, max_order)
    if adaptive and err > GAP_FAIL_TOL:
        raise NoConvergence(f"Nystrom gap at t={t} stalled with error {err:.2e}")
    if not val > 0:
        raise NumericalError(f"det(I - K) at t={t} came out non-positive ({val:.3e})")
    return GapResult(float(t), _clip_probability(val), "nystrom", err, order)


def elementary_symmetric(A: np.ndarray, kmax: int) -> np.ndarray:
    """e_0..e_kmax of the eigenvalues of A from power traces (Newton identities).

    For a Nystrom matrix A, k! e_k(A) equals the tensor-product quadrature of
    the k-point correlation function over (t, inf)^k, because repeated nodes
    give vanishing determinants.
    """
    p = np.empty(kmax + 1)
    M = np.eye(len(A))
    for j in range(1, kmax + 1):
        M = M @ A
        p[j] = np.trace(M)
    e = np.zeros(kmax + 1)
    e[0] = 1.0
    for k in range(1, kmax + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i]
        e[k] = acc / k
    return e


def _series_value(A, kmax):
    e = elementary_symmetric(A, kmax)
    terms = np.array([(-1) ** k * e[k] for k in range(kmax + 1)])
    return float(terms.sum()), abs(float(terms[-1]))


def gap_series(kh, t: float, kmax: int = SERIES_KMAX, order: int = 60,
               map_kind: Optional[str] = None, scale_factor: float = 0.5) -> GapResult:
    """Truncated series 1 + sum_k (-1)^k/k! int rho_k over (t, inf)^k.

    Uses its own quadrature (map scale ``scale_factor * (1 + t)``) so that it
    does not share a discretisation with ``gap_nystrom``.  The error estimate
    adds the last retained term to the change from halving the order.
    """
    if not t > 0:
        raise DomainError(f"gap probability needs t > 0 (got {t})")
    if not 1 <= kmax <= SERIES_KMAX:
        raise DomainError(f"kmax must lie in [1, {SERIES_KMAX}]")
    kind = map_kind or default_map_kind(kh)
    s = getattr(kh, "s", None)
    decay = 0.5 if s is None else min(0.5, 2 * s.re + 1)
    L = scale_factor * (1 + t)
    vals = []
    for n in (order // 2, order):
        q = build_quadrature(t, n, kind, scale=L, tail_decay=decay)
        vals.append(_series_value(operator_matrix(kh, q), kmax))
    (v_half, _), (val, last) = vals
    if last > 1e-8:
        warnings.warn(f"series truncated at k={kmax} with last term {last:.2e}",
                      TruncationWarning, stacklevel=2)
    err = last + abs(val - v_half)
    return GapResult(float(t), _clip_probability(val), "series", err, order)


def series_log_derivative_terms(kh, t: float, kmax: int = SERIES_KMAX, order: int = 60,
                                map_kind: Optional[str] = None) -> np.ndarray:
    """Terms (-1)^k/k! int rho_{k+1}(t, x_1..x_k) dx, k = 0..kmax-1.

    Their sum is F'(t).  With the bordered matrix M = [[K(t,t), k^T], [k, A]]
    the k-fold quadrature equals k! (e_{k+1}(M) - e_{k+1}(A)).
    """
    q = _quad(kh, t, order, map_kind)
    A = operator_matrix(kh, q)
    border = _border(kh, t, q)
    M = np.empty((len(A) + 1, len(A) + 1))
    M[0, 0] = float(kh.matrix(np.array([t]))[0, 0])
    M[0, 1:] = border
    M[1:, 0] = border
    M[1:, 1:] = A
    eM = elementary_symmetric(M, kmax)
    eA = elementary_symmetric(A, kmax)
    return np.array([(-1) ** k * (eM[k + 1] - eA[k + 1]) for k in range(kmax)])


def _border(kh, t, q):
    pts = np.concatenate(([t], q.nodes))
    row = kh.matrix(pts)[0, 1:]
    return row * np.sqrt(q.weights)


def gap_log_derivative(kh, t: float, order: int = 40, map_kind: Optional[str] = None,
                       tol: float = GAP_TOL, max_order: int = MAX_QUAD_ORDER):
    """d/dt log det(I - K)|_(t,inf) = R(t, t), the resolvent diagonal at t.

    Returns ``(value, error_estimate)``, adaptive in the quadrature order like
    ``gap_nystrom``.
    """
    if not t > 0:
        raise DomainError(f"gap probability needs t > 0 (got {t})")
    ktt = float(kh.matrix(np.array([t]))[0, 0])

    def at(n):
        q = _quad(kh, t, n, map_kind)
        A = operator_matrix(kh, q)
        b = _border(kh, t, q)
        return ktt + float(b @ np.linalg.solve(np.eye(len(A)) - A, b))

    prev = at(max(8, order // 2))
    while True:
        val = at(order)
        err = abs(val - prev)
        if err < tol * max(1.0, abs(val)) or order >= max_order:
            break
        prev, order = val, min(2 * order, max_order)
    return val, err


class GapDerivatives:
    """Chebyshev interpolant of log F on [a, b] with derivatives up to order 3.

    The fit runs on [a, b] widened by ``pad`` times its width on each side
    (never below a/2): derivatives of an interpolant are least accurate at
    the ends of its domain, so the requested window is kept away from them.

    With ``adaptive`` the degree doubles from ``cheb_order`` until the
    trailing coefficients fall below 1e-12 of the largest one, stop
    improving, or the degree reaches 256.
    """

    def __init__(self, kh, interval, cheb_order: int = 32, gap_kwargs: Optional[dict] = None,
                 pad: float = 0.15, adaptive: bool = True):
        a, b = map(float, interval)
        if not 0 < a < b:
            raise DomainError(f"need 0 < a < b (got [{a}, {b}])")
        if cheb_order < 16:
            raise DomainError("cheb_order must be at least 16")
        self.kh = kh
        self.interval = (a, b)
        width = b - a
        lo, hi = max(a - pad * width, a / 2), b + pad * width
        self.fit_interval = (lo, hi)
        gap_kwargs = dict(gap_kwargs or {})

        def logf(ts):
            res = pmap(lambda tt: gap_nystrom(kh, float(tt), **gap_kwargs), np.ravel(ts))
            return np.log([r.value for r in res]).reshape(np.shape(ts))

        n = cheb_order
        prev_tail = math.inf
        while True:
            cheb = Chebyshev.interpolate(logf, n, domain=[lo, hi])
            c = np.abs(cheb.coef)
            tail = float(c[-3:].max() / max(c.max(), np.finfo(float).tiny))
            if (not adaptive or tail <= CHEB_TARGET or n >= CHEB_MAX_ORDER
                    or tail > 0.1 * prev_tail):
                break
            prev_tail = tail
            n = min(2 * n, CHEB_MAX_ORDER)
        if tail > CHEB_TAIL_TOL:
            raise IllConditioned(f"log F not resolved on [{a}, {b}]: tail ratio {tail:.2e}")
        self.order = n
        self.tail_ratio = tail
        self.interp_error = float(c[-3:].sum())
        self._g = [cheb] + [cheb.deriv(m) for m in (1, 2, 3)]

    def log_derivatives(self, t):
        """(log F, (log F)', (log F)'', (log F)''') at t."""
        a, b = self.interval
        if np.any(np.asarray(t) < a - 1e-12 * b) or np.any(np.asarray(t) > b * (1 + 1e-12)):
            raise DomainError(f"t outside the fitted interval [{a}, {b}]")
        return tuple(g(t) for g in self._g)

    def __call__(self, t: float) -> DerivativeBundle:
        g0, g1, g2, g3 = (float(v) for v in self.log_derivatives(t))
        f = math.exp(g0)
        return DerivativeBundle(float(t), f, f * g1, f * (g2 + g1 * g1),
                                f * (g3 + 3 * g1 * g2 + g1 ** 3))


def gap_derivatives(kh, t_interval, cheb_order: int = 32, pad: float = 0.15,
                    adaptive: bool = True, **gap_kwargs) -> GapDerivatives:
    return GapDerivatives(kh, t_interval, cheb_order, gap_kwargs, pad, adaptive)


Kind = Union[EnsembleConfig, SParam, complex, float]


def handle_for(kind: Kind, **kw) -> KernelHandle:
    """Finite-N handle for an EnsembleConfig, otherwise the limit handle."""
    if isinstance(kind, KernelHandle):
        return kind
    if isinstance(kind, EnsembleConfig):
        return KernelHandle.finite(kind, **kw)
    return KernelHandle.limit(SParam.of(kind), **kw)


def cdf_largest(kind: Kind, x: float, **gap_kwargs) -> float:
    """P[lambda_1(N)/N <= x] (finite kind) or its N -> inf limit (s alone)."""
    if not x > 0:
        raise DomainError(f"cdf_largest needs x > 0 (got {x})")
    return gap_nystrom(handle_for(kind), float(x), **gap_kwargs).value
