import numpy as np
import pytest

from gcye.errors import DomainError
from gcye.kernels import EnsembleConfig, KernelHandle, SParam, kernel_values
from gcye.ratelab import (
    RateTable,
    cdf_rate,
    derivative_bound_scan,
    geometric_grid,
    hadamard_check,
    kernel_partial,
    kernel_rate,
)


def test_rate_table_invariants():
    t = RateTable.build(SParam(0), [1.0, 2.0], [10, 20], [[0.1, 0.2], [0.06, 0.1]])
    np.testing.assert_allclose(t.scaled_gaps, [[1.0, 2.0], [1.2, 2.0]])
    np.testing.assert_allclose(t.spread(), [1.2, 1.0])
    assert t.bounded(4)
    assert not t.bounded(1.1)


def test_geometric_grid_density():
    g = geometric_grid(0.5, 50)
    assert len(g) == 51
    assert g[0] == pytest.approx(0.5) and g[-1] == pytest.approx(50)


def test_kernel_rate_complex_s_bounded():
    table = kernel_rate(SParam(0.3, 0.4), 0.5, grid_size=17)
    assert table.raw_gaps.shape == (4, 1)
    assert np.all(np.diff(table.raw_gaps[:, 0]) < 0)
    assert table.bounded(4)


def test_kernel_rate_domain():
    with pytest.raises(DomainError):
        kernel_rate(SParam(0), 0.0)
    with pytest.raises(DomainError):
        cdf_rate(SParam(0), [1.0, -1.0])


def test_cdf_rate_gap_below_c_over_n():
    table = cdf_rate(SParam(0), [2.0], n_list=(10, 20))
    c = table.scaled_gaps[0, 0]
    assert table.raw_gaps[1, 0] < c / 20 * 1.01


@pytest.mark.parametrize("p,q", [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)])
@pytest.mark.parametrize("kh", [KernelHandle.limit(SParam(0.3, 0.4)),
                                KernelHandle.finite(EnsembleConfig(SParam(1), 12))])
def test_kernel_partial_matches_finite_differences(kh, p, q):
    x, y, h = 1.3, 2.9, 1e-4

    def k(dx, dy):
        return kernel_values(kh, x + dx, y + dy)

    fd = {
        (1, 0): (k(h, 0) - k(-h, 0)) / (2 * h),
        (0, 1): (k(0, h) - k(0, -h)) / (2 * h),
        (1, 1): (k(h, h) - k(h, -h) - k(-h, h) + k(-h, -h)) / (4 * h * h),
        (2, 0): (k(h, 0) - 2 * k(0, 0) + k(-h, 0)) / (h * h),
        (0, 2): (k(0, h) - 2 * k(0, 0) + k(0, -h)) / (h * h),
    }[(p, q)]
    got = kernel_partial(kh, x, y, p, q)
    assert got == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_kernel_partial_zeroth_order_is_kernel():
    kh = KernelHandle.limit(SParam(1))
    assert kernel_partial(kh, 0.7, 1.9, 0, 0) == pytest.approx(kernel_values(kh, 0.7, 1.9), rel=1e-14)


def test_kernel_partial_domain():
    kh = KernelHandle.limit(SParam(1))
    with pytest.raises(DomainError):
        kernel_partial(kh, 1.0, 1.0, 1, 0)
    with pytest.raises(DomainError):
        kernel_partial(kh, 1.0, 2.0, 2, 1)


def test_derivative_bound_limit_finite():
    val = derivative_bound_scan(KernelHandle.limit(SParam(1)), 0.5, 1, 0, x_max=10)
    assert np.isfinite(val) and val > 0


@pytest.mark.parametrize("p,q", [(0, 0), (1, 0), (1, 1)])
def test_derivative_bound_uniform_in_n(p, q):
    vals = [derivative_bound_scan(KernelHandle.finite(EnsembleConfig(SParam(0), n)), 0.5, p, q)
            for n in (10, 40)]
    assert max(vals) <= 2 * min(vals)


@pytest.mark.parametrize("kh", [KernelHandle.limit(SParam(-0.25)),
                                KernelHandle.finite(EnsembleConfig(SParam(0.3, 0.4), 15))])
def test_hadamard_check(kh):
    eig, had = hadamard_check(kh, n_sets=200, seed=1)
    assert eig >= -1e-10
    assert had <= 1 + 1e-9
