"""Second-order oracle: the Jost function of ``h = -d^2 - p`` on the half-line.

``d(k) = f+(0, k)``, where ``f+`` solves ``-y'' - p y = k^2 y`` with
``f+(x, k) = exp(ikx)`` for ``x >= gamma``. When ``q = p'' + p^2`` and
``p(0) = p'(0) = 0`` the fourth-order operator is ``h^2``, and then
``D(k) = d(ik) d(k)``. The ODE route shares no code with the Nystrom
determinant, so agreement between the two is real evidence.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .coeffs import CompactCoeff
from .errors import InputError, OdeFailure

__all__ = ["JostEval", "jost_d", "oracle_D", "jost_constant", "count_eigenvalues",
           "jost_solution"]


@dataclass(frozen=True)
class JostEval:
    """Jost function value.

    Attributes
    ----------
    k : complex
    d : complex
        ``f+(0, k)``.
    ode_tolerance : float
    """

    k: complex
    d: complex
    ode_tolerance: float


def jost_solution(p: CompactCoeff, k, tol=1e-11, x_end=0.0):
    """``(f+(x_end, k), f+'(x_end, k))`` by backward DOP853 integration.

    The integration restarts at every breakpoint of ``p``, so each step
    sees a polynomial right-hand side.
    """
    k = complex(k)
    gamma = p.support_end
    y = np.array([cmath.exp(1j * k * gamma), 1j * k * cmath.exp(1j * k * gamma)], dtype=complex)
    if p.is_zero:
        return complex(cmath.exp(1j * k * x_end)), complex(1j * k * cmath.exp(1j * k * x_end))
    bp = p.breakpoints
    for j in range(len(bp) - 2, -1, -1):
        a, b = bp[j], bp[j + 1]
        if b <= x_end:
            break
        lo = max(a, x_end)
        piece = p.pieces[j]

        def rhs(x, Y, piece=piece):
            return np.array([Y[1], -(k * k + piece(x)) * Y[0]])

        span = b - lo
        osc = abs(k) + np.sqrt(max(p.sup_norm(), 0.0))
        sol = solve_ivp(rhs, (b, lo), y, method="DOP853", rtol=tol, atol=tol * 1e-3 * max(1.0, np.max(np.abs(y))),
                        max_step=max(span / 8.0, 0.0) if osc * span < 8 else np.inf)
        if not sol.success:
            raise OdeFailure(f"Jost integration failed on [{lo}, {b}] at k = {k}: {sol.message}")
        y = sol.y[:, -1]
    return complex(y[0]), complex(y[1])


def jost_d(p: CompactCoeff, k, tol: float = 1e-11) -> JostEval:
    """Jost function ``d(k) = f+(0, k)``.

    Parameters
    ----------
    p : CompactCoeff
        Potential ``p`` in ``-y'' - p y = k^2 y``.
    k : complex
        Nonzero spectral parameter.
    tol : float
        Relative tolerance of the integrator.

    Returns
    -------
    JostEval
    """
    k = complex(k)
    if k == 0:
        raise InputError("k must be nonzero")
    return JostEval(k, jost_solution(p, k, tol)[0], tol)


def oracle_D(p: CompactCoeff, k, tol: float = 1e-11) -> complex:
    """``d(ik) d(k)``, the determinant of the squared case ``q = p'' + p^2``."""
    k = complex(k)
    return jost_d(p, 1j * k, tol).d * jost_d(p, k, tol).d


def jost_constant(c: float, gamma: float, k) -> complex:
    """Closed-form ``d(k)`` for ``p = c`` on ``[0, gamma]``.

    Inside the well ``y = e^{ik gamma} (cos w(x - gamma) + ik sin w(x - gamma) / w)``
    with ``w^2 = k^2 + c``.
    """
    k = complex(k)
    w2 = k * k + c
    w = cmath.sqrt(w2)
    # cos(w g) and sin(w g)/w are entire in w^2
    cg = cmath.cos(w * gamma)
    sinc = gamma if w == 0 else cmath.sin(w * gamma) / w
    return complex(cmath.exp(1j * k * gamma) * (cg - 1j * k * sinc))


def count_eigenvalues(p: CompactCoeff, tol: float = 1e-11) -> int:
    """Number of negative eigenvalues of ``-d^2 - p`` with a Dirichlet condition.

    Sturm oscillation: zeros on ``(0, inf)`` of the zero-energy solution
    with ``y(0) = 0, y'(0) = 1``; beyond ``gamma`` the solution is linear.
    """
    gamma = p.support_end
    y = np.array([0.0, 1.0])
    crossings = 0
    bp = p.breakpoints
    for j in range(len(bp) - 1):
        a, b = bp[j], bp[j + 1]
        piece = p.pieces[j]
        sol = solve_ivp(lambda x, Y: np.array([Y[1], -piece(x) * Y[0]]), (a, b), y,
                        method="DOP853", rtol=tol, atol=tol * 1e-3, dense_output=True)
        if not sol.success:
            raise OdeFailure(sol.message)
        xs = np.linspace(a, b, 4000)[1:]
        vals = sol.sol(xs)[0]
        sgn = np.sign(vals)
        crossings += int(np.count_nonzero(sgn[1:] * sgn[:-1] < 0))
        if j == 0 and sgn.size and vals[0] == 0:
            pass
        y = sol.y[:, -1]
    if y[0] * y[1] < 0:
        crossings += 1
    return crossings
