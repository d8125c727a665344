"""Complex special functions used by the kernel evaluators.

Everything here works in plain double precision.  The hypergeometric
routines accumulate terms through their ratio recurrence, so no factorial
or Pochhammer product is ever formed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NoConvergence, PoleError

MAX_SERIES_TERMS = 100_000


@dataclass(frozen=True)
class SeriesResult:
    value: complex
    terms_used: int
    tail_estimate: float


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex ``z``.

    Raises
    ------
    PoleError
        If ``z`` is a non-positive integer.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == np.floor(z.real):
        raise PoleError(f"log_gamma has a pole at z={z.real:g}")
    return complex(special.loggamma(z))


def log_gamma_real(x: float) -> float:
    """log |Gamma(x)| for real positive ``x`` (fast path for normalisations)."""
    if x <= 0.0 and x == np.floor(x):
        raise PoleError(f"log_gamma has a pole at x={x:g}")
    return float(special.gammaln(x))


def pochhammer(x, n: int) -> complex:
    """Rising factorial (x)_n = x (x+1) ... (x+n-1), with (x)_0 = 1."""
    if n < 0:
        raise ValueError("pochhammer needs n >= 0")
    x = complex(x)
    out = 1.0 + 0.0j
    for j in range(n):
        out *= x + j
    return out


def hyp2f1_poly(n: int, h, c, zeta, with_derivative: bool = False):
    """Terminating 2F1[-n, h; c; zeta] for array ``zeta``.

    ``c`` may be any complex number for which (c)_k never vanishes for
    k <= n.  With ``with_derivative`` the companion sum
    sum_k k * term_k (i.e. zeta * d/dzeta of the series) is also returned.
    """
    if n < 0:
        raise ValueError("hyp2f1_poly needs n >= 0")
    zeta = np.asarray(zeta, dtype=complex)
    h = complex(h)
    c = complex(c)
    term = np.ones_like(zeta)
    total = term.copy()
    ktotal = np.zeros_like(zeta)
    for k in range(n):
        term = term * (((k - n) * (h + k)) / ((c + k) * (k + 1))) * zeta
        total += term
        if with_derivative:
            ktotal += (k + 1) * term
    if with_derivative:
        return total, ktotal
    return total


def hyp2f1_poly_reflected(n: int, h, c, zeta, with_derivative: bool = False):
    """Terminating 2F1[-n, h; c; zeta] evaluated through the series in 1 - zeta.

    Uses 2F1[-n, h; c; z] = (c-h)_n / (c)_n * 2F1[-n, h; h-c-n+1; 1-z].
    On the circle |zeta - 1| = 1 the direct series in zeta loses about
    n log10(1 + |zeta|) digits to cancellation near zeta = 2, while the
    reflected one stays accurate.  Falls back to the direct series when a
    reflected denominator vanishes.  The optional second output is again
    zeta * d/dzeta of the polynomial.
    """
    h = complex(h)
    c = complex(c)
    c2 = h - c - n + 1
    if any(abs(c2 + k) == 0 for k in range(n)) or any(abs(c + k) == 0 for k in range(n)):
        return hyp2f1_poly(n, h, c, zeta, with_derivative)
    zeta = np.asarray(zeta, dtype=complex)
    const = 1.0 + 0.0j
    for j in range(n):
        const *= (c - h + j) / (c + j)
    w = 1.0 - zeta
    g, kg = hyp2f1_poly(n, h, c2, w, with_derivative=True)
    if not with_derivative:
        return const * g
    with np.errstate(divide="ignore", invalid="ignore"):
        kf = np.where(w == 0, 0.0, -const * zeta * kg / np.where(w == 0, 1.0, w))
    if np.any(w == 0) and n > 0:
        # zeta = 1 exactly: fall back to the direct derivative there
        _, kd = hyp2f1_poly(n, h, c, zeta, with_derivative=True)
        kf = np.where(w == 0, kd, kf)
    return const * g, kf


def hyp2f1_terminating(n: int, h, a: float, zeta):
    """Polynomial 2F1[-n, h; a; zeta] with real a > 0.

    Works for scalar or array ``zeta``; a scalar input gives a Python complex.
    """
    if a <= 0:
        raise ValueError("hyp2f1_terminating requires a > 0")
    out = hyp2f1_poly(n, h, a, zeta)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def hyp1f1_sums(h, a, z, tol: float = 1e-14, with_derivative: bool = False):
    """Vectorised 1F1[h; a; z] series.

    Terms are summed until three consecutive ones fall below
    ``tol * |partial sum|`` at every point.  Returns
    ``(value, ksum, terms_used, tail)`` where ``ksum = sum_k k * term_k``
    (zero unless ``with_derivative``) and ``tail`` is the largest final
    term magnitude relative to the sum.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = np.asarray(z, dtype=complex)
    h = complex(h)
    a = complex(a)
    term = np.ones_like(z)
    total = term.copy()
    ktotal = np.zeros_like(z)
    small_run = 0
    k = 0
    while True:
        term = term * ((h + k) / ((a + k) * (k + 1))) * z
        k += 1
        total += term
        if with_derivative:
            ktotal += k * term
        mag = np.abs(term) * (k if with_derivative else 1)
        scale = np.maximum(np.abs(total), np.finfo(float).tiny)
        rel = mag / scale
        worst = float(np.max(rel)) if rel.size else 0.0
        if worst < tol:
            small_run += 1
            if small_run >= 3:
                return total, ktotal, k + 1, worst
        else:
            small_run = 0
        if k >= MAX_SERIES_TERMS:
            raise NoConvergence(f"1F1 series did not converge in {k} terms")


def hyp1f1(h, a: float, z, tol: float = 1e-14) -> SeriesResult:
    """Kummer series 1F1[h; a; z] for scalar complex arguments."""
    value, _, used, tail = hyp1f1_sums(h, a, complex(z), tol)
    value = complex(value)
    return SeriesResult(value, used, tail * abs(value))
