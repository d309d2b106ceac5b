import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebres.errors import KTooSmall
from ebres.kernels import (R0, dR0_dx, dR0_dxdy, dR0_dy, operator_kernels, r0, r0_neumann,
                           separable_factors)

ks = st.builds(complex, st.floats(-12, 12), st.floats(-12, 12)).filter(lambda k: abs(k) > 0.1)
X, Y = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9) ** 2, indexing="ij")


@settings(max_examples=30, deadline=None)
@given(ks)
def test_R0_from_second_order_kernels(k):
    ref = (r0(X, Y, k) - r0(X, Y, 1j * k)) / (2 * k ** 2)
    assert np.allclose(R0(X, Y, k), ref, rtol=1e-11, atol=1e-11 * np.max(np.abs(ref)))


@settings(max_examples=30, deadline=None)
@given(ks)
def test_mixed_derivative_from_neumann_kernels(k):
    ref = 0.5 * (r0_neumann(X, Y, k) + r0_neumann(X, Y, 1j * k))
    assert np.allclose(dR0_dxdy(X, Y, k), ref, rtol=1e-11, atol=1e-11 * np.max(np.abs(ref)))


@pytest.mark.parametrize("k", [1.5 + 0.5j, -3 + 2j, 4 - 4j])
def test_derivatives_by_finite_differences(k):
    x, y, h = 0.63, 0.27, 1e-5
    fd_x = (R0(x + h, y, k) - R0(x - h, y, k)) / (2 * h)
    fd_y = (R0(x, y + h, k) - R0(x, y - h, k)) / (2 * h)
    fd_xy = (dR0_dx(x, y + h, k) - dR0_dx(x, y - h, k)) / (2 * h)
    assert fd_x == pytest.approx(dR0_dx(x, y, k), rel=1e-7)
    assert fd_y == pytest.approx(dR0_dy(x, y, k), rel=1e-7)
    assert fd_xy == pytest.approx(dR0_dxdy(x, y, k), rel=1e-7)


@pytest.mark.parametrize("k", [1.5 + 0.5j, -3 + 2j])
def test_boundary_conditions(k):
    y = 0.4
    assert abs(R0(0.0, y, k)) < 1e-15

    def d2(h):
        return (R0(2 * h, y, k) - 2 * R0(h, y, k) + R0(0.0, y, k)) / h ** 2

    # one-sided difference is first order; extrapolate once
    assert abs(2 * d2(5e-4) - d2(1e-3)) < 1e-5 * abs(dR0_dx(0.0, y, k))


@pytest.mark.parametrize("k", [1.5 + 0.5j, -3 + 2j])
def test_resolvent_equation(k):
    # (d_x^4 - k^4) R0 = 0 away from the diagonal
    x, y, h = 0.7, 0.2, 2e-3
    f = lambda t: R0(t, y, k)
    d4 = (f(x - 2 * h) - 4 * f(x - h) + 6 * f(x) - 4 * f(x + h) + f(x + 2 * h)) / h ** 4
    assert abs(d4 - k ** 4 * f(x)) < 1e-4 * abs(k ** 4 * f(x))


@settings(max_examples=30, deadline=None)
@given(ks)
def test_backends_agree(k):
    a = operator_kernels(X, Y, k, backend="numba")
    b = operator_kernels(X, Y, k, backend="numpy")
    assert np.allclose(a, b, rtol=1e-14, atol=1e-14 * np.max(np.abs(b)))


@settings(max_examples=30, deadline=None)
@given(ks)
def test_operator_kernels_match_definitions(k):
    K = operator_kernels(X, Y, k, backend="numpy")
    for got, ref in zip(K, [-dR0_dxdy(X, Y, k), dR0_dx(X, Y, k), -dR0_dy(X, Y, k), R0(X, Y, k)]):
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-12 * np.max(np.abs(ref)))


@settings(max_examples=30, deadline=None)
@given(ks, st.sampled_from(["numba", "numpy"]))
def test_kinked_plus_separable_is_full(k, backend):
    full = operator_kernels(X, Y, k, backend=backend)
    kink = operator_kernels(X, Y, k, backend=backend, kinked=True)
    al, be, al4, be4 = separable_factors(k)
    E, E4 = np.exp(1j * k * X) * np.exp(1j * k * Y), np.exp(-k * X) * np.exp(-k * Y)
    for idx, (r, s) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        sep = al[r] * be[s] * E + al4[r] * be4[s] * E4
        assert np.allclose(kink[idx] + sep, full[idx], rtol=1e-10, atol=1e-12 * np.max(np.abs(full)))


def test_small_k_rejected():
    with pytest.raises(KTooSmall):
        R0(0.1, 0.2, 1e-4, k_min=1e-3)
    with pytest.raises(KTooSmall):
        r0(0.1, 0.2, 0.0)
