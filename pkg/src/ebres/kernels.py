"""Free resolvent kernels of ``d^4`` on the half-line.

The boundary conditions are ``y(0) = y''(0) = 0``. With ``s = x - y`` and
``S = x + y`` the kernels are

* ``r0 = (i/2k) (e^{ik|s|} - e^{ikS})``, the Dirichlet kernel of ``-d^2``;
* ``r0_neumann = (i/2k) (e^{ik|s|} + e^{ikS})``, the Neumann kernel;
* ``R0 = (i/4k^3) (e^{ik|s|} - e^{ikS} + i e^{-k|s|} - i e^{-kS})``,
  the kernel of ``(d^4 - k^4)^{-1}``, equal to ``(r0(k) - r0(ik)) / 2k^2``.

The Nystrom blocks use the operator kernels

* ``K11 = -d_x d_y R0``, the kernel of ``d R0 d``;
* ``K12 = d_x R0``;
* ``K21 = -d_y R0``, the kernel of ``R0 d``;
* ``K22 = R0``.

Each exponential is formed from its grouped argument, so the largest
modulus that can occur is ``exp(2 gamma (|Re k| + |Im k|))``.
"""
import cmath

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .errors import KTooSmall

__all__ = [
    "r0", "r0_neumann", "R0", "dR0_dx", "dR0_dy", "dR0_dxdy",
    "operator_kernels", "separable_factors", "check_k",
]


def check_k(k, k_min):
    """Raise :class:`KTooSmall` when ``|k| < k_min``."""
    if k_min is not None and abs(k) < k_min:
        raise KTooSmall(k, k_min)
    if k == 0:
        raise KTooSmall(k, k_min or 0.0)


def _args(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.abs(x - y), x + y, np.sign(x - y)


def r0(x, y, k, k_min=None):
    """Dirichlet resolvent kernel ``(i/2k)(e^{ik|x-y|} - e^{ik(x+y)})``."""
    check_k(k, k_min)
    a, S, _ = _args(x, y)
    return 0.5j / k * (np.exp(1j * k * a) - np.exp(1j * k * S))


def r0_neumann(x, y, k, k_min=None):
    """Neumann resolvent kernel ``(i/2k)(e^{ik|x-y|} + e^{ik(x+y)})``."""
    check_k(k, k_min)
    a, S, _ = _args(x, y)
    return 0.5j / k * (np.exp(1j * k * a) + np.exp(1j * k * S))


def R0(x, y, k, k_min=None):
    """Kernel of ``(d^4 - k^4)^{-1}`` with ``y(0) = y''(0) = 0``."""
    check_k(k, k_min)
    a, S, _ = _args(x, y)
    return 0.25j / k ** 3 * (np.exp(1j * k * a) - np.exp(1j * k * S)
                             + 1j * np.exp(-k * a) - 1j * np.exp(-k * S))


def dR0_dx(x, y, k, k_min=None):
    """``d R0 / dx`` with ``sign(0) = 0`` on the diagonal."""
    check_k(k, k_min)
    a, S, sg = _args(x, y)
    return -0.25 / k ** 2 * (sg * np.exp(1j * k * a) - np.exp(1j * k * S)
                             - sg * np.exp(-k * a) + np.exp(-k * S))


def dR0_dy(x, y, k, k_min=None):
    """``d R0 / dy``, equal to ``dR0_dx(y, x, k)``."""
    return dR0_dx(y, x, k, k_min)


def dR0_dxdy(x, y, k, k_min=None):
    """Mixed partial ``d^2 R0 / dx dy``.

    Equals ``(r0_neumann(k) + r0_neumann(ik)) / 2`` and is continuous
    across the diagonal.
    """
    check_k(k, k_min)
    a, S, _ = _args(x, y)
    return 0.25 / k * (1j * np.exp(1j * k * a) + 1j * np.exp(1j * k * S)
                       + np.exp(-k * a) + np.exp(-k * S))


# ---------------------------------------------------------------------------
# operator kernels for matrix assembly
# ---------------------------------------------------------------------------

def _kernels_numpy(X, Y, k, kinked):
    a = np.abs(X - Y)
    sg = np.sign(X - Y)
    e1 = np.exp(1j * k * a)
    e3 = np.exp(-k * a)
    c1, c2, c3 = -0.25 / k, -0.25 / k ** 2, 0.25j / k ** 3
    out = np.empty((4,) + a.shape, dtype=complex)
    if kinked:
        out[0] = c1 * (1j * e1 + e3)
        out[1] = c2 * sg * (e1 - e3)
        out[2] = out[1]
        out[3] = c3 * (e1 + 1j * e3)
        return out
    S = X + Y
    e2 = np.exp(1j * k * S)
    e4 = np.exp(-k * S)
    out[0] = c1 * (1j * (e1 + e2) + e3 + e4)
    out[1] = c2 * (sg * (e1 - e3) - e2 + e4)
    out[2] = c2 * (sg * (e1 - e3) + e2 - e4)
    out[3] = c3 * (e1 - e2 + 1j * (e3 - e4))
    return out


@njit
def _kernels_flat(X, Y, k, kinked, out):
    ik = 1j * k
    c1 = -0.25 / k
    c2 = -0.25 / (k * k)
    c3 = 0.25j / (k * k * k)
    for m in range(X.size):
        s = X[m] - Y[m]
        a = abs(s)
        sg = 1.0 if s > 0.0 else (-1.0 if s < 0.0 else 0.0)
        e1 = cmath.exp(ik * a)
        e3 = cmath.exp(-k * a)
        if kinked:
            out[0, m] = c1 * (1j * e1 + e3)
            out[1, m] = c2 * sg * (e1 - e3)
            out[2, m] = out[1, m]
            out[3, m] = c3 * (e1 + 1j * e3)
        else:
            S = X[m] + Y[m]
            e2 = cmath.exp(ik * S)
            e4 = cmath.exp(-k * S)
            out[0, m] = c1 * (1j * (e1 + e2) + e3 + e4)
            out[1, m] = c2 * (sg * (e1 - e3) - e2 + e4)
            out[2, m] = c2 * (sg * (e1 - e3) + e2 - e4)
            out[3, m] = c3 * (e1 - e2 + 1j * (e3 - e4))


def _kernels_compiled(X, Y, k, kinked):
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    shape = X.shape
    Xf = np.ascontiguousarray(X).ravel()
    Yf = np.ascontiguousarray(Y).ravel()
    out = np.empty((4, Xf.size), dtype=np.complex128)
    _kernels_flat(Xf, Yf, complex(k), bool(kinked), out)
    return out.reshape((4,) + shape)


def operator_kernels(X, Y, k, backend=None, kinked=False):
    """Stack ``[K11, K12, K21, K22]`` evaluated at broadcast points ``(X, Y)``.

    Parameters
    ----------
    X, Y : array_like
        Broadcastable evaluation points.
    k : complex
        Spectral parameter, nonzero.
    backend : {"numba", "numpy", None}
        ``None`` selects numba unless disabled through the environment.
    kinked : bool
        Keep only the ``|x - y|`` exponentials. The dropped ``(x + y)``
        part is the rank-two kernel returned by :func:`separable_factors`.

    Returns
    -------
    ndarray, shape ``(4,) + broadcast shape``
    """
    if backend is None:
        backend = "numba" if NUMBA_ENABLED else "numpy"
    if backend == "numba":
        return _kernels_compiled(X, Y, k, kinked)
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    return _kernels_numpy(X, Y, complex(k), kinked)


def separable_factors(k):
    """Coefficients of the ``(x + y)`` part of the operator kernels.

    Returns
    -------
    (alpha, beta, alpha4, beta4) : tuple of ndarray, shape (2,)
        ``K_rs - K_rs^kinked = alpha_r beta_s e^{ikx} e^{iky}
        + alpha4_r beta4_s e^{-kx} e^{-ky}``.
    """
    k = complex(k)
    alpha = np.array([1.0, -1j / k])
    beta = np.array([-0.25j / k, 0.25 / k ** 2])
    alpha4 = np.array([1.0, -1.0 / k])
    beta4 = np.array([-0.25 / k, -0.25 / k ** 2])
    return alpha, beta, alpha4, beta4
