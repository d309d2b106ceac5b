"""Hadamard data of ``D`` and the trace formulas in terms of its zeros.

With ``m`` the pole order of ``D`` at the origin,

* ``D(k) = alpha k^-m e^{beta k} prod (1 - k/z) e^{k/z}``;
* ``4k^4 Tr(R0(k) - R(k)) = k D'(k)/D(k) = -m + beta k + k^2 sum 1/(z (k - z))``;
* ``phi'(k) = ((1 - i) beta + sum (k/z) (1/(ik - z) + 1/(k - z))) / (2 pi i)``
  for the scattering phase ``S = exp(-2 pi i phi)``.

Sums run over zeros ``|z| < r`` and are reported with a tail estimate
``4 gamma |k|^2 / (pi r)``. It comes from the zero density
``4 gamma / pi`` of the asymptotic lattice.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .coeffs import CoeffPair
from .errors import IncompleteZeroSet, InputError, SingularAtResonance
from .fredholm import _Factor, build_Y0, log_det, quadrant
from .rootfind import DetEvaluator, ResonanceSet, ResonanceZero, winding_number
from .scattering import S_matrix

__all__ = [
    "HadamardData", "TraceValue", "hadamard_fit", "trace_lhs", "trace_solve",
    "trace_rhs", "phase_derivative_rhs", "phase_derivative_fd", "log_derivative",
]


def _wrap(d: float) -> float:
    return (d + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class HadamardData:
    """Fitted Hadamard factorisation.

    Attributes
    ----------
    m : int
        Pole order of ``D`` at ``0``, either 0 or 1.
    alpha, beta : complex
    zeros : ResonanceSet
    radius : float
        Zeros with ``|z| < radius`` enter the product.
    gamma : float
        Support end of the coefficients; sets the tail estimate.
    fit_radius : float
        Circle on which ``alpha`` and ``beta`` were fitted.
    reconstruction_residual : float
        ``max |D / D_hadamard - 1|`` on ``|k| = radius / 3``.
    tail_budget : float
        Tail estimate ``4 gamma rho^2 / (2 pi radius)`` at ``rho = radius / 3``.
    m_slope : float
        Raw slope estimate behind ``m``.
    beta_reference : complex or None
        ``(i - 1) gamma`` when ``p`` jumps at ``gamma``, else ``None``.
    """

    m: int
    alpha: complex
    beta: complex
    zeros: ResonanceSet
    radius: float
    gamma: float
    fit_radius: float = 0.0
    reconstruction_residual: float = 0.0
    tail_budget: float = 0.0
    m_slope: float = 0.0
    beta_reference: Optional[complex] = None

    def _inside(self, radius=None):
        r = self.radius if radius is None else radius
        return [(z.k, z.multiplicity) for z in self.zeros.zeros if abs(z.k) < r]

    def log_D(self, k, radius=None) -> complex:
        """``log`` of the truncated product on an arbitrary branch."""
        k = complex(k)
        val = cmath.log(self.alpha) - self.m * cmath.log(k) + self.beta * k
        for z, mult in self._inside(radius):
            val += mult * (cmath.log(1 - k / z) + k / z)
        return val

    def reflected(self) -> "HadamardData":
        """Data of ``k -> conj D(i conj k)``: zeros ``i conj z``, ``beta -> -i conj beta``."""
        zs = tuple(ResonanceZero(1j * np.conj(z.k), z.multiplicity, f"K{quadrant(1j * np.conj(z.k))}",
                                 z.residual, z.scale) for z in self.zeros.zeros)
        return replace(self, alpha=complex(np.conj(self.alpha)), beta=complex(-1j * np.conj(self.beta)),
                       zeros=ResonanceSet(zs, (), self.zeros.region))

    def to_dict(self) -> dict:
        c = lambda z: [z.real, z.imag] if z is not None else None
        return {"m": self.m, "alpha": c(self.alpha), "beta": c(self.beta), "radius": self.radius,
                "gamma": self.gamma, "fit_radius": self.fit_radius,
                "reconstruction_residual": self.reconstruction_residual,
                "tail_budget": self.tail_budget, "m_slope": self.m_slope,
                "beta_reference": c(self.beta_reference), "zeros": self.zeros.to_dict()}


def _mean_log_abs(ev, r, n=16):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    return float(np.mean([ev.log(r * np.exp(1j * t)).real for t in th]))


def _pick_fit_radius(target, zs, lo):
    # keep the fit circle away from zeros so the sampled log stays smooth
    r = target
    mods = np.abs(zs) if len(zs) else np.array([])
    for _ in range(50):
        if mods.size == 0 or np.min(np.abs(mods - r)) > 0.05 * r:
            return r
        r *= 0.93
        if r < lo:
            break
    return target


def hadamard_fit(coeffs: CoeffPair, resonances: ResonanceSet, radius: float, order: int = 64,
                 fit_radius: Optional[float] = None, samples: int = 256,
                 check: bool = True) -> HadamardData:
    """Fit ``m``, ``alpha`` and ``beta`` given the zeros inside ``radius``.

    ``m`` is the rounded slope of the mean of ``-log|D|`` against
    ``log |k|`` between circles of radius ``2 k_min`` and ``4 k_min``. On
    the circle ``|k| = fit_radius`` (default ``radius / 2``) the function
    ``log(k^m D) - sum (log(1 - k/z) + k/z)`` is analytic, so its least
    squares fit by ``c0 + c1 k`` returns ``log alpha`` and ``beta``
    whatever the zeros outside the circle are.

    Raises
    ------
    IncompleteZeroSet
        If ``check`` and the winding count on ``|k| = radius`` (minus the
        small circle around the origin) differs from the supplied
        multiplicities.
    """
    gamma = coeffs.gamma
    if coeffs.is_free:
        return HadamardData(0, 1.0 + 0j, 0j, resonances, float(radius), gamma)
    ev = DetEvaluator(coeffs, order)
    r_in = max(coeffs.k_min, 1e-2)
    inside = [z for z in resonances.zeros if abs(z.k) < radius]
    if check:
        n_list = sum(z.multiplicity for z in inside if abs(z.k) > r_in)
        w = (winding_number(coeffs, 0j, radius, evaluator=ev, refinement=2 ** 16).winding
             - winding_number(coeffs, 0j, r_in, evaluator=ev).winding)
        if w != n_list:
            raise IncompleteZeroSet(f"{n_list} zeros supplied inside |k| < {radius} "
                                    f"but the winding count is {w}")
    r1 = 2 * coeffs.k_min
    slope = -(_mean_log_abs(ev, 2 * r1) - _mean_log_abs(ev, r1)) / math.log(2.0)
    small = sum(z.multiplicity for z in inside if abs(z.k) < 2 * r1)
    m = int(min(1, max(0, round(slope + small))))
    zs = np.array([z.k for z in inside], dtype=complex)
    mult = np.array([z.multiplicity for z in inside], dtype=float)
    rho = fit_radius or _pick_fit_radius(0.5 * radius, zs, 2 * r_in)
    th = 2 * np.pi * np.arange(samples) / samples
    k = rho * np.exp(1j * th)
    L = np.array([ev.log(kk) for kk in k]) + m * np.log(k)
    for z, mu in zip(zs, mult):
        L -= mu * (np.log(1 - k / z) + k / z)
    L = L.real + 1j * np.unwrap(L.imag)
    A = np.column_stack([np.ones(samples), k])
    c = np.linalg.lstsq(A, L, rcond=None)[0]
    alpha, beta = complex(np.exp(c[0])), complex(c[1])
    ref = complex((1j - 1) * gamma) if coeffs.p_plus != 0 else None
    if ref is not None and abs(beta - ref) > 0.1 * abs(ref):
        warnings.warn(f"fitted beta = {beta:.6g} differs from (i - 1) gamma = {ref:.6g}", stacklevel=2)
    had = HadamardData(m, alpha, beta, resonances, float(radius), gamma, float(rho), 0.0,
                       0.0, float(slope), ref)
    rt = radius / 3.0
    kt = rt * np.exp(1j * (th[::4] + 0.1))
    res = 0.0
    for kk in kt:
        d = ev.log(kk) - had.log_D(kk)
        res = max(res, abs(cmath.exp(complex(d.real, _wrap(d.imag))) - 1.0))
    budget = 4 * gamma * rt ** 2 / (2 * math.pi * radius)
    return replace(had, reconstruction_residual=float(res), tail_budget=float(budget))


# ---------------------------------------------------------------------------
# trace formula
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceValue:
    """One side of a trace formula.

    Attributes
    ----------
    k : complex
    value : complex
    tail_bound : float
        Estimated size of the omitted zeros; 0 for exact sides.
    n_terms : int
        Zeros used, with multiplicity.
    radius : float or None
    """

    k: complex
    value: complex
    tail_bound: float = 0.0
    n_terms: int = 0
    radius: Optional[float] = None


def log_derivative(coeffs: CoeffPair, k, order: int = 128, h: Optional[float] = None) -> complex:
    """``D'(k) / D(k)`` by a central difference of ``log D`` with step ``1e-5 (1 + |k|)``."""
    k = complex(k)
    h = h or 1e-5 * (1.0 + abs(k))
    lp = log_det(coeffs, k + h, order)[0]
    lm = log_det(coeffs, k - h, order)[0]
    d = lp - lm
    return complex(d.real, _wrap(d.imag)) / (2 * h)


def trace_lhs(coeffs: CoeffPair, k, order: int = 128) -> TraceValue:
    """``4k^4 Tr(R0 - R) = k D'(k) / D(k)`` for ``k`` in the first quadrant.

    Raises
    ------
    InputError
        If ``k`` is outside the first quadrant.
    SingularAtResonance
        If ``|D(k)| < 1e-10``.
    """
    k = complex(k)
    if quadrant(k) != 1:
        raise InputError(f"trace formula needs k in the first quadrant, got {k}")
    if coeffs.is_free:
        return TraceValue(k, 0j)
    ld = log_det(coeffs, k, order)[0]
    if ld.real < math.log(1e-10):
        raise SingularAtResonance(k, math.inf)
    return TraceValue(k, k * log_derivative(coeffs, k, order))


def trace_solve(coeffs: CoeffPair, k, order: int = 64) -> TraceValue:
    """``4k^4 Tr[(I + Y0)^{-1} Y0' / 4k^3]`` from one factorisation.

    ``Y0'`` is a central difference of the Nystrom matrices; the derivative
    of the split-scheme trace correction is added so that the value
    converges at the same rate as the determinant.
    """
    k = complex(k)
    if coeffs.is_free:
        return TraceValue(k, 0j)
    h = 1e-5 * (1.0 + abs(k))
    blk = build_Y0(coeffs, k, order=order, scheme="split")
    bp = build_Y0(coeffs, k + h, order=order, scheme="split")
    bm = build_Y0(coeffs, k - h, order=order, scheme="split")
    dM = (bp.matrix - bm.matrix) / (2 * h)
    dcorr = (bp.log_correction - bm.log_correction) / (2 * h)
    fac = _Factor(blk)
    tr = np.trace(fac.solve(dM))
    return TraceValue(k, complex(k * (tr + dcorr)))


def _sum_terms(had: HadamardData, radius):
    r = had.radius if radius is None else float(radius)
    if r > had.radius:
        raise InputError(f"truncation radius {r} exceeds the fitted radius {had.radius}")
    zs = had._inside(r)
    return r, zs


def trace_rhs(had: HadamardData, k, radius: Optional[float] = None) -> TraceValue:
    """``-m + beta k + k^2 sum_{|z| < radius} 1/(z (k - z))`` with a tail estimate."""
    k = complex(k)
    r, zs = _sum_terms(had, radius)
    val = -had.m + had.beta * k
    for z, mult in zs:
        val += mult * k * k / (z * (k - z))
    tail = 4 * had.gamma * abs(k) ** 2 / (math.pi * r) if zs or had.gamma else 0.0
    if not had.zeros.zeros:
        tail = 0.0
    return TraceValue(k, complex(val), float(tail), int(sum(mu for _, mu in zs)), r)


def phase_derivative_rhs(had: HadamardData, k: float, radius: Optional[float] = None) -> TraceValue:
    """Scattering-phase derivative from the zeros.

    ``((1 - i) beta + sum (k/z) (1/(ik - z) + 1/(k - z))) / (2 pi i)``. The
    value is real up to truncation; the imaginary part is kept as a check.
    """
    k = complex(k)
    r, zs = _sum_terms(had, radius)
    val = (1 - 1j) * had.beta
    for z, mult in zs:
        val += mult * (k / z) * (1 / (1j * k - z) + 1 / (k - z))
    tail = 2 * 4 * had.gamma * abs(k) / (math.pi * r) / (2 * math.pi) if had.zeros.zeros else 0.0
    return TraceValue(k, complex(val / (2j * math.pi)), float(tail), int(sum(mu for _, mu in zs)), r)


def phase_derivative_fd(coeffs: CoeffPair, k: float, order: int = 64,
                        h: Optional[float] = None) -> float:
    """``phi'(k) = (i / 2 pi) d log S / dk`` by a central difference."""
    k = float(k)
    if k <= 0:
        raise InputError("the scattering phase is defined for k > 0")
    h = h or 1e-5 * (1.0 + k)
    sp = S_matrix(coeffs, k + h, order).S
    sm = S_matrix(coeffs, k - h, order).S
    d = cmath.log(sp / sm)
    return float((1j * d / (2 * math.pi * 2 * h)).real)
