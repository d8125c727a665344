import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcye.errors import DomainError, NumericalError
from gcye.kernels import EnsembleConfig, KernelHandle, SParam, kernel_values
from gcye.unitary import (
    AngleVal,
    cayley_angle,
    correspondence_check,
    correspondence_ratio,
    cot_half,
    kernel_u_finite,
    kernel_u_limit,
    log_d_n,
    log_weight_u,
    smallest_angle_survival,
)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_cayley_round_trip(a):
    th = cayley_angle(a)
    assert 0 < th.theta < 2 * math.pi
    assert cot_half(th) == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_angle_domain():
    with pytest.raises(DomainError):
        AngleVal(-0.1)
    with pytest.raises(DomainError):
        cot_half(0.0)
    with pytest.raises(DomainError):
        cayley_angle(float("inf"))


def test_unitary_weight_matches_principal_log_form():
    s = SParam(0.4, -0.7)
    th = np.array([-2.5, -0.3, 0.2, 3.0])
    direct = np.exp(s.conj * np.log(1 - np.exp(1j * th)) + s.value * np.log(1 - np.exp(-1j * th)))
    assert np.all(np.abs(direct.imag) < 1e-12 * np.abs(direct))
    np.testing.assert_allclose(np.exp(log_weight_u(th, s)), direct.real, rtol=1e-12)


def test_unitary_weight_domain():
    with pytest.raises(DomainError):
        log_weight_u(0.0, SParam(1))


def test_log_d_n_is_real_and_cue_value():
    # s = 0: d_N = 1/(2 pi)
    assert complex(log_d_n(5, SParam(0))).imag == 0
    assert math.exp(log_d_n(5, SParam(0)).real) == pytest.approx(1 / (2 * math.pi), rel=1e-13)
    assert abs(complex(log_d_n(5, SParam(0.3, 0.4))).imag) < 1e-12


def test_cue_dirichlet_kernel():
    a, b, n = 0.3, 1.1, 2
    ref = math.sin(n * (a - b) / 2) / math.sin((a - b) / 2) / (2 * math.pi)
    got = kernel_u_finite(a, b, EnsembleConfig(SParam(0), n))
    assert abs(got - ref) < 1e-14


def test_limit_sine_reduction():
    a, b = 1.0, 2.0
    ref = math.sin((a - b) / 2) / (math.pi * (a - b))
    assert abs(kernel_u_limit(a, b, SParam(0)) - ref) < 1e-14


@pytest.mark.parametrize("s", [SParam(0.3, 0.4), SParam(1), SParam(-0.25, 0.5)])
def test_unitary_kernels_hermitian(s):
    rng = np.random.default_rng(2)
    for _ in range(10):
        a, b = rng.uniform(0.1, 3, 2) * rng.choice([-1, 1], 2)
        k = kernel_u_finite(a, b, EnsembleConfig(s, 6))
        assert abs(k - np.conj(kernel_u_finite(b, a, EnsembleConfig(s, 6)))) < 1e-12 * abs(k)
        k = kernel_u_limit(a, b, s)
        assert abs(k - np.conj(kernel_u_limit(b, a, s))) < 1e-12 * abs(k)


@pytest.mark.parametrize("s", [SParam(1), SParam(0.3, 0.4)])
def test_unitary_scaling_limit(s):
    alpha = np.array([1.0, 0.5, -1.2])
    beta = np.array([2.0, 2.5, -0.3])
    lim = kernel_u_limit(alpha, beta, s)
    errs = [np.max(np.abs(kernel_u_finite(alpha / n, beta / n, EnsembleConfig(s, n)) / n - lim))
            for n in (10, 20, 40, 80)]
    assert all(errs[i] / errs[i + 1] >= 1.5 for i in range(3))


def test_unitary_kernel_off_diagonal_only():
    with pytest.raises(DomainError):
        kernel_u_limit(1.0, 1.0, SParam(0))


@pytest.mark.parametrize("s", [SParam(0), SParam(1), SParam(-0.25), SParam(2.5)])
def test_correspondence_real_s(s):
    rep = correspondence_check(s)
    assert rep.selected == "with_jacobian"
    assert rep.variation < 1e-8
    assert rep.variation_bare > 0.1
    assert abs(rep.constant) == pytest.approx(1, rel=1e-10)


def test_correspondence_complex_s_pairs_with_conjugate():
    s = SParam(0.3, 0.4)
    with pytest.raises(NumericalError):
        correspondence_check(s)
    g = np.linspace(0.5, 5, 10)
    X, Y = np.meshgrid(g, g, indexing="ij")
    off = X != Y
    x, y = X[off], Y[off]
    ku = kernel_u_limit(2 / x, 2 / y, s)
    kbar = kernel_values(KernelHandle.limit(SParam(s.re, -s.im)), x, y)
    ratio = ku * np.sqrt(2 / x ** 2) * np.sqrt(2 / y ** 2) / kbar
    np.testing.assert_allclose(np.abs(ratio), 1, rtol=1e-10)


def test_correspondence_ratio_fields():
    x, y = 0.7, 3.1
    r = correspondence_ratio(x, y, SParam(1))
    assert abs(r.with_jacobian) == pytest.approx(1, rel=1e-12)
    assert r.bare == pytest.approx(r.with_jacobian * x * y / 2, rel=1e-14)


def test_smallest_angle_survival_two_routes():
    val, direct = smallest_angle_survival(math.pi / 2, EnsembleConfig(SParam(0), 10), with_check=True)
    assert val == pytest.approx(direct, abs=1e-5)
    assert 0 < val < 1


def test_smallest_angle_survival_cauchy():
    # N = 1, s = 0: the angle is uniform on (0, 2 pi)
    y = 1.3
    val = smallest_angle_survival(y, EnsembleConfig(SParam(0), 1))
    assert val == pytest.approx(1 - y / (2 * math.pi), abs=1e-10)


def test_smallest_angle_survival_domain():
    with pytest.raises(DomainError):
        smallest_angle_survival(3.5, EnsembleConfig(SParam(0), 3))
