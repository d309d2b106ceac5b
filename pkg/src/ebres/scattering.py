"""Scattering matrix ``S(k)``, the matrix ``Omega(k)`` and the scattering phase.

With ``c_k = pi / (2i k^3)``:

* ``S = 1 + c_k (A0 - A1)``, where ``A0 = psi_1 psi_2`` and
  ``A1 = psi_1 Y0 (I + Y0)^{-1} psi_2``;
* ``Omega = I + c_k (Omega0 - Omega1)``, where ``Omega0 = Psi_1 Psi_2`` and
  ``Omega1 = Psi_1 Y0 (I + Y0)^{-1} Psi_2``, with
  ``Psi_1 = (psi_1(ik); psi_1(k))`` and ``Psi_2 = (i psi_2(ik), psi_2(k))``.

These satisfy ``D(ik) = D(k) S(k)`` and ``D(-k) = D(k) det Omega(k)``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coeffs import CoeffPair
from .errors import InputError, NoConvergence, PhaseJump
from .fredholm import (DetOptions, build_Y0, det_D, moment, phi_vectors,
                       solve_system)
from .kernels import check_k

__all__ = [
    "ScatteringEval", "PhaseTrace", "psi_functionals", "A0", "A1", "B_of_k",
    "S_matrix", "Omega", "scattering_eval", "scattering_phase", "c_k",
    "identity_residual_S", "identity_residual_Omega",
]


def c_k(k) -> complex:
    """``pi / (2i k^3)``."""
    k = complex(k)
    return np.pi / (2j * k ** 3)


@dataclass(frozen=True)
class ScatteringEval:
    """Scattering data at one ``k``.

    Attributes
    ----------
    k : complex
    S : complex
    A0, A1, B : complex
    Omega : ndarray, shape (2, 2)
    detOmega : complex
    order : int
        Nodes per panel of the Nystrom grid used.
    """

    k: complex
    S: complex
    A0: complex
    A1: complex
    B: complex
    Omega: Optional[np.ndarray]
    detOmega: Optional[complex]
    order: int


def psi_functionals(coeffs: CoeffPair, k, order: int = 64, scheme: str = "gauss"):
    """Discrete ``psi_1(k)`` (row) and ``psi_2(k)`` (column).

    The weight splitting matches :func:`~ebres.fredholm.build_Y0` with the
    same ``scheme``, so ``psi_1 @ psi_2`` approximates ``A0(k)``.
    """
    check_k(k, coeffs.k_min)
    return phi_vectors(coeffs, k, order, scheme)


def A0(coeffs: CoeffPair, k) -> complex:
    """``(q0 - 2 p0 k^2 - int (2k^2 p + q) cos 2kx dx) / pi``; entire in ``k``."""
    k = complex(k)
    cos2 = lambda x: np.cos(2 * k * x)
    val = coeffs.q0 - 2 * coeffs.p0 * k * k
    if not coeffs.p.is_zero:
        val -= 2 * k * k * moment(coeffs.p, cos2, abs(k))
    if not coeffs.q.is_zero:
        val -= moment(coeffs.q, cos2, abs(k))
    return complex(val / np.pi)


def B_of_k(coeffs: CoeffPair, k) -> complex:
    """``(2/pi) int (-2i k^2 p ch(kx) cos(kx) + i q sh(kx) sin(kx)) dx``."""
    k = complex(k)
    val = 0j
    if not coeffs.p.is_zero:
        val += -2j * k * k * moment(coeffs.p, lambda x: np.cosh(k * x) * np.cos(k * x), abs(k))
    if not coeffs.q.is_zero:
        val += 1j * moment(coeffs.q, lambda x: np.sinh(k * x) * np.sin(k * x), abs(k))
    return complex(2.0 / np.pi * val)


def _A1_at(coeffs, k, order, scheme="split"):
    blk = build_Y0(coeffs, k, order=order, scheme=scheme)
    if blk.matrix.size == 0:
        return 0j
    u, v = phi_vectors(coeffs, k, order, scheme)
    Mv = blk.matrix @ v
    return complex(u @ solve_system(blk, Mv))


def _Omega1_at(coeffs, k, order, scheme="split"):
    blk = build_Y0(coeffs, k, order=order, scheme=scheme)
    if blk.matrix.size == 0:
        return np.zeros((2, 2), complex)
    u1, v1 = phi_vectors(coeffs, k, order, scheme)
    ui, vi = phi_vectors(coeffs, 1j * k, order, scheme)
    U = np.vstack([ui, u1])
    V = np.column_stack([1j * vi, v1])
    return U @ solve_system(blk, blk.matrix @ V)


def _converge(fn, start, max_order, tol):
    order = start
    prev = fn(order)
    while 2 * order <= max_order:
        order *= 2
        cur = fn(order)
        if np.max(np.abs(np.asarray(cur) - np.asarray(prev))) <= tol * max(1.0, np.max(np.abs(cur))):
            return cur, order
        prev = cur
    raise NoConvergence(0j, cur, prev, order)


def A1(coeffs: CoeffPair, k, order: Optional[int] = None, tol: float = 1e-12,
       max_order: int = 512) -> complex:
    """``psi_1 Y0 (I + Y0)^{-1} psi_2`` from one LU solve per order.

    With ``order=None`` the order is doubled from 32 until successive
    values agree to ``tol``.
    """
    k = complex(k)
    check_k(k, coeffs.k_min)
    if order is not None:
        return _A1_at(coeffs, k, order)
    return _converge(lambda n: _A1_at(coeffs, k, n), 32, max_order, tol)[0]


def S_matrix(coeffs: CoeffPair, k, order: Optional[int] = None) -> ScatteringEval:
    """``S(k) = 1 + c_k (A0 - A1)``."""
    k = complex(k)
    check_k(k, coeffs.k_min)
    a0 = A0(coeffs, k)
    if order is None:
        a1, order = _converge(lambda n: _A1_at(coeffs, k, n), 32, 512, 1e-12)
    else:
        a1 = _A1_at(coeffs, k, order)
    S = 1.0 + c_k(k) * (a0 - a1)
    return ScatteringEval(k, complex(S), a0, complex(a1), 0j, None, None, order)


def Omega(coeffs: CoeffPair, k, order: Optional[int] = None) -> ScatteringEval:
    """``Omega(k) = I + c_k (Omega0 - Omega1)`` and its determinant."""
    k = complex(k)
    check_k(k, coeffs.k_min)
    a0k, a0ik, b = A0(coeffs, k), A0(coeffs, 1j * k), B_of_k(coeffs, k)
    Om0 = np.array([[1j * a0ik, b], [1j * b, a0k]])
    if order is None:
        Om1, order = _converge(lambda n: _Omega1_at(coeffs, k, n), 32, 512, 1e-12)
    else:
        Om1 = _Omega1_at(coeffs, k, order)
    Om = np.eye(2) + c_k(k) * (Om0 - Om1)
    det = Om[0, 0] * Om[1, 1] - Om[0, 1] * Om[1, 0]
    return ScatteringEval(k, 0j, a0k, 0j, b, Om, complex(det), order)


def scattering_eval(coeffs: CoeffPair, k, order: Optional[int] = None) -> ScatteringEval:
    """``S`` and ``Omega`` together."""
    s = S_matrix(coeffs, k, order)
    o = Omega(coeffs, k, order or s.order)
    return ScatteringEval(s.k, s.S, s.A0, s.A1, o.B, o.Omega, o.detOmega, s.order)


def identity_residual_S(coeffs: CoeffPair, k, opts: DetOptions = DetOptions(route="direct", tol=1e-9, on_fail="return")) -> float:
    """``|D(ik) - D(k) S(k)| / max(|D(ik)|, 1)`` with both determinants factorised directly."""
    lhs = det_D(coeffs, 1j * complex(k), opts).value
    rhs = det_D(coeffs, k, opts).value * S_matrix(coeffs, k).S
    return float(abs(lhs - rhs) / max(abs(lhs), 1.0))


def identity_residual_Omega(coeffs: CoeffPair, k, opts: DetOptions = DetOptions(route="direct", tol=1e-9, on_fail="return")) -> float:
    """``|D(-k) - D(k) det Omega(k)| / max(|D(-k)|, 1)`` with direct factorisations."""
    lhs = det_D(coeffs, -complex(k), opts).value
    rhs = det_D(coeffs, k, opts).value * Omega(coeffs, k).detOmega
    return float(abs(lhs - rhs) / max(abs(lhs), 1.0))


@dataclass(frozen=True)
class PhaseTrace:
    """Scattering phase on an increasing grid of positive ``k``.

    Attributes
    ----------
    k : ndarray
    phi : ndarray
        Real phase with ``S = exp(-2 pi i phi)``, continuous in ``k`` and
        anchored to the principal branch at the largest ``k``.
    S : ndarray
    """

    k: np.ndarray
    phi: np.ndarray
    S: np.ndarray


def scattering_phase(coeffs: CoeffPair, k_grid, order: Optional[int] = None,
                     max_refine: int = 12) -> PhaseTrace:
    """Unwind ``phi = (i / 2 pi) log S`` from the largest grid point downward.

    Intervals where ``arg S`` moves by more than ``pi / 2`` are bisected
    (at most ``max_refine`` times); the returned grid contains the
    inserted points.

    Raises
    ------
    PhaseJump
        If a step stays above ``pi / 2`` after refinement.
    """
    ks = np.asarray(k_grid, dtype=float)
    if ks.ndim != 1 or ks.size == 0 or np.any(np.diff(ks) <= 0) or ks[0] <= 0:
        raise InputError("k_grid must be increasing and positive")
    Sval = {float(k): S_matrix(coeffs, k, order).S for k in ks}
    pts = list(ks)
    out_k = [pts[-1]]
    cur_phase = -cmath.phase(Sval[pts[-1]]) / (2 * np.pi)
    out_phi = [cur_phase]
    i = len(pts) - 1
    while i > 0:
        hi, lo = pts[i], pts[i - 1]
        stack = [(lo, hi, 0)]
        seg = []
        # depth-first bisection from hi down to lo
        while stack:
            a, b, depth = stack.pop()
            for x in (a, b):
                if x not in Sval:
                    Sval[x] = S_matrix(coeffs, x, order).S
            step = abs(cmath.phase(Sval[a] / Sval[b]))
            if step > np.pi / 2:
                if depth >= max_refine:
                    raise PhaseJump(f"k in [{a}, {b}]", step)
                m = 0.5 * (a + b)
                stack.append((a, m, depth + 1))
                stack.append((m, b, depth + 1))
            else:
                seg.append(a)
        for a in seg:
            prev_S = Sval[out_k[-1]]
            d = cmath.phase(Sval[a] / prev_S)
            cur_phase = cur_phase - d / (2 * np.pi)
            out_k.append(a)
            out_phi.append(cur_phase)
        i -= 1
    order_idx = np.argsort(out_k)
    k_arr = np.asarray(out_k)[order_idx]
    return PhaseTrace(k_arr, np.asarray(out_phi)[order_idx], np.array([Sval[k] for k in k_arr]))
