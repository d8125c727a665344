"""Convergence-rate experiments: kernel and CDF gaps between finite N and the limit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Chebyshev

from ._parallel import pmap
from .errors import DomainError
from .fredholm import cdf_largest
from .kernels import EnsembleConfig, KernelHandle, SParam, kernel_values

DEFAULT_N_LIST = (10, 20, 40, 80)
BOUNDED_RATIO = 4.0
POINTS_PER_DECADE = 25


@dataclass(frozen=True)
class RateTable:
    """Gaps indexed [n, x]; ``scaled_gaps`` is ``raw_gaps`` times N."""

    s: SParam
    x_grid: np.ndarray
    n_list: tuple
    raw_gaps: np.ndarray
    scaled_gaps: np.ndarray

    @classmethod
    def build(cls, s, x_grid, n_list, raw):
        raw = np.asarray(raw, dtype=float).reshape(len(n_list), len(x_grid))
        ns = np.asarray(n_list, dtype=float)[:, None]
        return cls(SParam.of(s), np.asarray(x_grid, dtype=float), tuple(int(n) for n in n_list),
                   raw, raw * ns)

    def spread(self) -> np.ndarray:
        """max/min of N * gap over N, one value per x column."""
        sg = self.scaled_gaps
        with np.errstate(divide="ignore"):
            return sg.max(axis=0) / sg.min(axis=0)

    def bounded(self, ratio: float = BOUNDED_RATIO) -> bool:
        return bool(np.all(self.spread() <= ratio))


def geometric_grid(lo: float, hi: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    n = max(2, int(round(per_decade * np.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


def _square_grid(x0, grid_size):
    g = np.geomspace(x0, 20 * x0, grid_size)
    return np.meshgrid(g, g, indexing="ij")


def kernel_rate(s, x0: float, n_list: Sequence[int] = DEFAULT_N_LIST, grid_size: int = 33) -> RateTable:
    """sup over [x0, 20 x0]^2 of |K_[N] - K_inf| (xy)^(Re s + 1), for each N."""
    if not x0 > 0:
        raise DomainError(f"x0 must be positive (got {x0})")
    s = SParam.of(s)
    X, Y = _square_grid(x0, grid_size)
    weight = (X * Y) ** (s.re + 1)
    lim = kernel_values(KernelHandle.limit(s), X, Y)

    def gap(n):
        fin = kernel_values(KernelHandle.finite(EnsembleConfig(s, n)), X, Y)
        return float(np.max(np.abs(fin - lim) * weight))

    return RateTable.build(s, [x0], n_list, pmap(gap, n_list))


def cdf_rate(s, x_points: Sequence[float], n_list: Sequence[int] = DEFAULT_N_LIST) -> RateTable:
    """|P[lambda_1(N)/N <= x] - F_inf(x)| for each N and x."""
    xs = np.asarray(x_points, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("all x points must be positive")
    s = SParam.of(s)
    lim = KernelHandle.limit(s)
    f_inf = np.array(pmap(lambda x: cdf_largest(lim, float(x)), xs))

    def row(n):
        kh = KernelHandle.finite(EnsembleConfig(s, n))
        return [cdf_largest(kh, float(x)) for x in xs]

    fin = np.array(pmap(row, n_list))
    return RateTable.build(s, xs, n_list, np.abs(fin - f_inf[None, :]))


def _second_derivatives(kh, xs):
    """P'' and Q'' on ``xs`` by Chebyshev differentiation in log x of P', Q'."""
    lo, hi = np.log(xs.min()) - 0.05, np.log(xs.max()) + 0.05

    def fit(part):
        def f(u):
            pair = kh.pq(np.exp(u))
            return getattr(pair, part)
        re = Chebyshev.interpolate(lambda u: f(u).real, 96, domain=[lo, hi])
        im = Chebyshev.interpolate(lambda u: f(u).imag, 96, domain=[lo, hi])
        u = np.log(xs)
        return (re.deriv()(u) + 1j * im.deriv()(u)) / xs

    return fit("p_deriv"), fit("q_deriv")


def kernel_partial(kh: KernelHandle, x, y, p: int, q: int) -> np.ndarray:
    """d^p/dx^p d^q/dy^q K(x, y) for p + q <= 2, off the diagonal.

    Orders up to one (in each variable) use the analytic P', Q'.  For p or
    q equal to 2, P'' and Q'' come from one Chebyshev differentiation.
    """
    if p < 0 or q < 0 or p + q > 2:
        raise DomainError("need p, q >= 0 with p + q <= 2")
    if q > p:
        return kernel_partial(kh, y, x, q, p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    if np.any(x == y):
        raise DomainError("kernel_partial is evaluated off the diagonal only")
    c = kh.prefactor
    a, b = kh.pq(x), kh.pq(y)
    d = x - y
    n0 = c * (a.p_val * b.q_val - a.q_val * b.p_val)
    if p == 0:
        out = n0 / d
    elif (p, q) == (1, 0):
        nx = c * (a.p_deriv * b.q_val - a.q_deriv * b.p_val)
        out = nx / d - n0 / d ** 2
    elif (p, q) == (1, 1):
        nx = c * (a.p_deriv * b.q_val - a.q_deriv * b.p_val)
        ny = c * (a.p_val * b.q_deriv - a.q_val * b.p_deriv)
        nxy = c * (a.p_deriv * b.q_deriv - a.q_deriv * b.p_deriv)
        out = nxy / d + nx / d ** 2 - ny / d ** 2 - 2 * n0 / d ** 3
    else:
        flat = np.unique(x)
        p2, q2 = _second_derivatives(kh, flat)
        idx = np.searchsorted(flat, x)
        nx = c * (a.p_deriv * b.q_val - a.q_deriv * b.p_val)
        nxx = c * (p2[idx] * b.q_val - q2[idx] * b.p_val)
        out = nxx / d - 2 * nx / d ** 2 + 2 * n0 / d ** 3
    scale = np.maximum(np.abs(out), 1e-300)
    if np.any(np.abs(out.imag) > 1e-6 * scale):
        raise DomainError("kernel derivative has a large imaginary part")
    return out.real


def derivative_bound_scan(kh: KernelHandle, x0: float, p: int = 0, q: int = 0,
                          x_max: float = None, grid_size: int = 25) -> float:
    """sup of |d^(p+q) K| x^(Re s + p + 1) y^(Re s + q + 1) over [x0, x_max]^2.

    The y grid sits at the geometric midpoints of the x grid, so no point
    lies on the diagonal.
    """
    if not x0 > 0:
        raise DomainError(f"x0 must be positive (got {x0})")
    x_max = 20 * x0 if x_max is None else float(x_max)
    gx = np.geomspace(x0, x_max, grid_size)
    gy = np.sqrt(gx[:-1] * gx[1:])
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    r = kh.s.re
    vals = kernel_partial(kh, X, Y, p, q) * X ** (r + p + 1) * Y ** (r + q + 1)
    return float(np.max(np.abs(vals)))


def hadamard_check(kh: KernelHandle, n_sets: int = 1000, size: int = 6, lo: float = 0.3,
                   hi: float = 30.0, seed: int = 0):
    """Smallest eigenvalue ratio and worst Hadamard ratio over random point sets.

    Returns ``(min over sets of lambda_min / trace, max over sets of
    det / prod(diag))``; a PSD kernel gives the first >= 0 (up to rounding)
    and the second <= 1.
    """
    rng = np.random.default_rng(seed)
    worst_eig = np.inf
    worst_had = 0.0
    for _ in range(n_sets):
        pts = np.exp(rng.uniform(np.log(lo), np.log(hi), size))
        m = kh.matrix(pts)
        ev = np.linalg.eigvalsh(m)
        tr = float(np.trace(m))
        worst_eig = min(worst_eig, ev[0] / tr)
        diag = np.prod(np.diag(m))
        if diag > 0:
            worst_had = max(worst_had, float(np.prod(ev)) / diag)
    return float(worst_eig), float(worst_had)
