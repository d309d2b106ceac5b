"""Compactly supported piecewise-polynomial coefficients.

A :class:`CompactCoeff` is a real function on ``[0, gamma]`` made of
polynomial pieces stored in the Chebyshev basis of each interval. It
vanishes outside ``[0, gamma]``. Jumps are allowed only at breakpoints
listed in ``jumps``; everywhere else neighbouring pieces must agree.

The module also provides the Liouville transform that turns
Euler-Bernoulli data ``(a, b)`` into the pair ``(p, q)`` of the operator
``d^4 + 2 d p d + q``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial.chebyshev import chebpts2

from .errors import (BoundaryConstraintViolated, DiscontinuityError, InputError,
                     InsufficientSmoothness, NonPositiveCoefficient)

__all__ = [
    "CompactCoeff", "CoeffPair", "BeamCoeffs", "LiouvilleResult",
    "liouville_transform", "liouville_data", "kappa_integral", "square_case_q",
    "MAX_MONOMIAL_DEGREE", "MAX_DEGREE",
]

#: Highest degree accepted for pieces given in the monomial basis.
MAX_MONOMIAL_DEGREE = 16
#: Highest degree accepted for Chebyshev pieces.
MAX_DEGREE = 128
#: Relative tolerance of the continuity check at undeclared breakpoints.
CONTINUITY_RTOL = 1e-12


def _cheb(coef, x0, x1):
    return Chebyshev(np.asarray(coef, dtype=float), domain=[float(x0), float(x1)])


def _trim(c: Chebyshev) -> Chebyshev:
    coef = np.trim_zeros(np.asarray(c.coef, dtype=float), "b")
    if coef.size == 0:
        coef = np.zeros(1)
    return Chebyshev(coef, domain=c.domain)


def _adaptive_cheb(f, x0, x1, tol=1e-15, start=16, max_deg=1024):
    """Chebyshev interpolant of a smooth ``f`` on ``[x0, x1]`` with doubling degree."""
    deg = start
    while True:
        c = Chebyshev.interpolate(f, deg, domain=[x0, x1])
        scale = max(np.max(np.abs(c.coef)), 1e-300)
        if np.max(np.abs(c.coef[-3:])) <= tol * scale or deg >= max_deg:
            return c
        deg *= 2


@dataclass(frozen=True)
class CompactCoeff:
    """Piecewise polynomial supported on ``[0, support_end]``.

    Parameters
    ----------
    breakpoints : tuple of float
        Increasing breakpoints ``0 = b_0 < ... < b_m = support_end``.
    pieces : tuple of numpy.polynomial.Chebyshev
        One polynomial per interval ``[b_j, b_{j+1}]``, with that interval as domain.
    jumps : tuple of float
        Interior breakpoints at which a jump discontinuity is declared.

    Notes
    -----
    At an interior breakpoint the right piece is used. The value at
    ``support_end`` is the left limit, and the function is zero for
    ``x < 0`` and ``x > support_end``.
    """

    breakpoints: tuple
    pieces: tuple
    jumps: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "jumps", tuple(sorted(float(j) for j in self.jumps)))
        if len(bp) < 2:
            raise InputError("a coefficient needs at least one interval")
        if abs(bp[0]) > 0.0 or np.any(np.diff(bp) <= 0):
            raise InputError(f"breakpoints must start at 0 and increase: {bp}")
        if len(self.pieces) != len(bp) - 1:
            raise InputError("number of pieces must equal number of intervals")
        pieces = []
        for c, a, b in zip(self.pieces, bp[:-1], bp[1:]):
            if not isinstance(c, Chebyshev):
                raise InputError("pieces must be numpy Chebyshev objects")
            if not np.allclose(c.domain, [a, b], rtol=0, atol=1e-15 * max(1.0, abs(b))):
                c = c.convert(domain=[a, b], kind=Chebyshev)
            if c.degree() > MAX_DEGREE:
                raise InputError(f"piece degree {c.degree()} exceeds {MAX_DEGREE}")
            if not np.all(np.isfinite(c.coef)):
                raise InputError("non-finite polynomial coefficient")
            pieces.append(_trim(c))
        object.__setattr__(self, "pieces", tuple(pieces))
        self._check_continuity()

    # ------------------------------------------------------------------ build
    @classmethod
    def from_monomial(cls, breakpoints, coeffs, jumps=()):
        """Build from monomial coefficients in powers of ``(x - x0)`` per interval."""
        bp = [float(b) for b in breakpoints]
        pieces = []
        for c, a, b in zip(coeffs, bp[:-1], bp[1:]):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            if c.size - 1 > MAX_MONOMIAL_DEGREE:
                raise InputError(f"monomial degree {c.size - 1} exceeds {MAX_MONOMIAL_DEGREE}")
            poly = Polynomial(c, domain=[a, a + 1.0], window=[0.0, 1.0])
            pieces.append(poly.convert(kind=Chebyshev, domain=[a, b]))
        return cls(tuple(bp), tuple(pieces), tuple(jumps))

    @classmethod
    def from_function(cls, f: Callable, breakpoints, degree=None, jumps=()):
        """Chebyshev interpolation of ``f`` on each interval.

        With ``degree=None`` the degree is chosen adaptively.
        """
        bp = [float(b) for b in breakpoints]
        pieces = []
        for a, b in zip(bp[:-1], bp[1:]):
            if degree is None:
                pieces.append(_adaptive_cheb(f, a, b, max_deg=MAX_DEGREE))
            else:
                pieces.append(Chebyshev.interpolate(f, degree, domain=[a, b]))
        return cls(tuple(bp), tuple(pieces), tuple(jumps))

    @classmethod
    def zero(cls, support_end=1.0):
        """The zero function on ``[0, support_end]``."""
        return cls((0.0, float(support_end)), (_cheb([0.0], 0.0, support_end),))

    @classmethod
    def constant(cls, value, support_end=1.0):
        """``value`` times the indicator of ``[0, support_end]``."""
        return cls((0.0, float(support_end)), (_cheb([float(value)], 0.0, support_end),))

    # --------------------------------------------------------------- queries
    @property
    def support_end(self) -> float:
        return self.breakpoints[-1]

    @property
    def degree(self) -> int:
        return max(c.degree() for c in self.pieces)

    @property
    def is_zero(self) -> bool:
        return all(np.all(c.coef == 0.0) for c in self.pieces)

    def piece_index(self, x, side="right"):
        """Index of the piece that evaluates ``x`` (clipped to valid pieces)."""
        inner = np.asarray(self.breakpoints[1:-1])
        idx = np.searchsorted(inner, x, side=side)
        return idx

    def __call__(self, x, side="right"):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        inside = (x >= 0.0) & (x <= self.support_end)
        if side == "left":
            inside &= x > 0.0
        if np.any(inside):
            xs = x[inside]
            idx = self.piece_index(xs, side=side)
            vals = np.empty(xs.shape)
            for j in np.unique(idx):
                m = idx == j
                vals[m] = self.pieces[j](xs[m])
            out[inside] = vals
        return out if out.ndim else float(out)

    eval = __call__

    def left_limit(self, x) -> float:
        """Limit from the left at ``x`` (0 for ``x <= 0``)."""
        x = float(x)
        if x <= 0.0:
            return 0.0
        if x > self.support_end:
            return 0.0
        j = int(np.searchsorted(self.breakpoints, x, side="left")) - 1
        return float(self.pieces[max(j, 0)](x))

    def right_limit(self, x) -> float:
        """Limit from the right at ``x`` (0 for ``x >= support_end``)."""
        x = float(x)
        if x >= self.support_end or x < 0.0:
            return 0.0
        j = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        return float(self.pieces[j](x))

    def sup_norm(self, samples=64) -> float:
        """Maximum of ``|f|`` on a dense sampling grid."""
        key = ("sup", samples)
        if key not in self._cache:
            m = 0.0
            for c, a, b in zip(self.pieces, self.breakpoints[:-1], self.breakpoints[1:]):
                xs = np.linspace(a, b, samples + max(c.degree(), 1))
                m = max(m, float(np.max(np.abs(c(xs)))))
            self._cache[key] = m
        return self._cache[key]

    def _check_continuity(self):
        scale = max(self.sup_norm(), 1e-300)
        for j, b in enumerate(self.breakpoints[1:-1]):
            if any(abs(b - jb) <= 1e-14 * max(1.0, abs(b)) for jb in self.jumps):
                continue
            left = float(self.pieces[j](b))
            right = float(self.pieces[j + 1](b))
            if abs(left - right) > CONTINUITY_RTOL * max(abs(left), abs(right), scale):
                raise DiscontinuityError(
                    f"undeclared jump at x = {b}: left {left!r}, right {right!r}")

    # -------------------------------------------------------------- calculus
    def derivative(self, m=1) -> "CompactCoeff":
        """Piecewise ``m``-th derivative; every interior breakpoint may jump."""
        pieces = tuple(c.deriv(m) if c.degree() >= m else _cheb([0.0], *c.domain)
                       for c in self.pieces)
        return CompactCoeff(self.breakpoints, pieces, self.breakpoints[1:-1])

    def integral(self) -> float:
        """Integral over ``[0, support_end]``."""
        total = 0.0
        for c, a, b in zip(self.pieces, self.breakpoints[:-1], self.breakpoints[1:]):
            ci = c.integ(lbnd=a)
            total += float(ci(b))
        return total

    def integrate_against(self, g: Callable, order=None) -> float:
        """``int f(x) g(x) dx`` by per-piece Gauss-Legendre quadrature."""
        total = 0.0
        for c, a, b in zip(self.pieces, self.breakpoints[:-1], self.breakpoints[1:]):
            n = order or max(32, c.degree() + 16)
            t, w = np.polynomial.legendre.leggauss(n)
            x = 0.5 * (b - a) * t + 0.5 * (a + b)
            total = total + 0.5 * (b - a) * np.sum(w * c(x) * g(x))
        return total

    # ------------------------------------------------------------ arithmetic
    def _refine(self, other: "CompactCoeff"):
        bp = np.union1d(self.breakpoints, other.breakpoints)
        return bp

    def _restricted(self, a, b) -> Chebyshev:
        if b <= self.support_end + 1e-15 * max(1.0, b):
            mid = 0.5 * (a + b)
            j = int(np.searchsorted(self.breakpoints, mid, side="right")) - 1
            return self.pieces[j].convert(domain=[a, b], kind=Chebyshev)
        return _cheb([0.0], a, b)

    def _binary(self, other, op) -> "CompactCoeff":
        bp = self._refine(other)
        pieces = []
        for a, b in zip(bp[:-1], bp[1:]):
            pieces.append(op(self._restricted(a, b), other._restricted(a, b)))
        jumps = set(self.jumps) | set(other.jumps)
        # breakpoints where either operand ends are jumps of the result
        for e in (self.support_end, other.support_end):
            if e < bp[-1]:
                jumps.add(e)
        return CompactCoeff(tuple(bp), tuple(pieces), tuple(sorted(jumps)))

    def __add__(self, other):
        if np.isscalar(other):
            raise TypeError("adding a constant breaks compact support")
        return self._binary(other, lambda u, v: u + v)

    def __sub__(self, other):
        return self._binary(other, lambda u, v: u - v)

    def __mul__(self, other):
        if np.isscalar(other):
            return CompactCoeff(self.breakpoints, tuple(c * float(other) for c in self.pieces),
                                self.jumps)
        return self._binary(other, lambda u, v: u * v)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # -------------------------------------------------------------------- io
    def to_dict(self, basis=None) -> dict:
        """JSON-ready dictionary.

        The monomial basis (powers of ``x - x0``) is used when every piece
        has degree at most :data:`MAX_MONOMIAL_DEGREE`, otherwise Chebyshev.
        """
        if basis is None:
            basis = "monomial" if self.degree <= MAX_MONOMIAL_DEGREE else "chebyshev"
        pieces = []
        for c, a, b in zip(self.pieces, self.breakpoints[:-1], self.breakpoints[1:]):
            if basis == "monomial":
                coef = c.convert(kind=Polynomial, domain=[a, a + 1.0], window=[0.0, 1.0]).coef
            elif basis == "chebyshev":
                coef = c.coef
            else:
                raise InputError(f"unknown basis {basis!r}")
            pieces.append({"x0": a, "x1": b, "coeffs": [float(v) for v in coef]})
        out = {"support_end": self.support_end, "basis": basis, "pieces": pieces}
        if self.jumps:
            out["jumps"] = list(self.jumps)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CompactCoeff":
        """Inverse of :meth:`to_dict`; gaps between pieces are filled with zeros."""
        try:
            gamma = float(d["support_end"])
            raw = sorted(d["pieces"], key=lambda pc: float(pc["x0"]))
            basis = d.get("basis", "monomial")
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed coefficient specification: {exc}") from exc
        if gamma <= 0:
            raise InputError("support_end must be positive")
        bp, pieces = [0.0], []
        jumps = set(float(j) for j in d.get("jumps", []))
        for pc in raw:
            x0, x1 = float(pc["x0"]), float(pc["x1"])
            coef = np.asarray(pc["coeffs"], dtype=float)
            if x0 < bp[-1] - 1e-15 or x1 <= x0 or x1 > gamma * (1 + 1e-15):
                raise InputError(f"piece [{x0}, {x1}] overlaps or leaves [0, {gamma}]")
            if x0 > bp[-1]:
                pieces.append(_cheb([0.0], bp[-1], x0))
                bp.append(x0)
            if basis == "monomial":
                if coef.size - 1 > MAX_MONOMIAL_DEGREE:
                    raise InputError(f"monomial degree {coef.size - 1} exceeds {MAX_MONOMIAL_DEGREE}")
                c = Polynomial(coef, domain=[x0, x0 + 1.0], window=[0.0, 1.0]).convert(
                    kind=Chebyshev, domain=[x0, x1])
            elif basis == "chebyshev":
                c = _cheb(coef, x0, x1)
            else:
                raise InputError(f"unknown basis {basis!r}")
            pieces.append(c)
            bp.append(x1)
        if bp[-1] < gamma:
            pieces.append(_cheb([0.0], bp[-1], gamma))
            bp.append(gamma)
        bp[-1] = gamma
        return cls(tuple(bp), tuple(pieces), tuple(sorted(jumps)))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "CompactCoeff":
        return cls.from_dict(json.loads(text))


def _undeclared_jumps(c: CompactCoeff, order: int) -> tuple:
    """Interior breakpoints where a derivative up to ``order`` jumps."""
    out = []
    scale = max(c.sup_norm(), 1e-300)
    for j, b in enumerate(c.breakpoints[1:-1]):
        for m in range(order + 1):
            lc = c.pieces[j].deriv(m) if m else c.pieces[j]
            rc = c.pieces[j + 1].deriv(m) if m else c.pieces[j + 1]
            h = (c.breakpoints[j + 2] - c.breakpoints[j]) ** m
            if abs(float(lc(b)) - float(rc(b))) * h > 1e-10 * scale:
                out.append(b)
                break
    return tuple(out)


@dataclass(frozen=True)
class CoeffPair:
    """The coefficient pair ``(p, q)`` with derived scalars.

    Attributes
    ----------
    gamma : float
        Common support end.
    p0, q0 : float
        Integrals of ``p`` and ``q``.
    p_plus : float
        Left limit ``p(gamma - 0)``.
    """

    p: CompactCoeff
    q: CompactCoeff
    gamma: float = field(init=False)
    p0: float = field(init=False)
    q0: float = field(init=False)
    p_plus: float = field(init=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        g = max(self.p.support_end, self.q.support_end)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "p0", self.p.integral())
        object.__setattr__(self, "q0", self.q.integral())
        object.__setattr__(self, "p_plus", self.p.left_limit(g))

    @classmethod
    def free(cls, gamma=1.0):
        """``p = q = 0`` on ``[0, gamma]``."""
        return cls(CompactCoeff.zero(gamma), CompactCoeff.zero(gamma))

    @property
    def is_free(self) -> bool:
        return self.p.is_zero and self.q.is_zero

    @property
    def breakpoints(self) -> np.ndarray:
        """Union of the breakpoints of ``p`` and ``q`` on ``[0, gamma]``."""
        bp = np.union1d(self.p.breakpoints, self.q.breakpoints)
        return bp[bp <= self.gamma]

    @property
    def k_min(self) -> float:
        """Smallest admissible ``|k|``."""
        return 1e-3 / self.gamma

    def to_dict(self) -> dict:
        return {"p": self.p.to_dict(), "q": self.q.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "CoeffPair":
        try:
            p = CompactCoeff.from_dict(d["p"])
            q = CompactCoeff.from_dict(d["q"]) if d.get("q") is not None else CompactCoeff.zero(p.support_end)
        except KeyError as exc:
            raise InputError(f"pair specification lacks {exc}") from exc
        return cls(p, q)


# --------------------------------------------------------------------------
# Euler-Bernoulli front-end
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamCoeffs:
    """Beam data ``a = 1 + a_tilde`` and ``b = 1 + b_tilde``, perturbations on ``[0, 1]``.

    Positivity, the boundary constraint ``(3a'/a + 5b'/b)(0) = 0`` and
    fourfold Sobolev smoothness (continuity of derivatives up to order three,
    including at ``x = 1``) are validated on construction.
    """

    a_tilde: CompactCoeff
    b_tilde: CompactCoeff
    grid_points: int = 2001

    def __post_init__(self):
        for name, c in (("a", self.a_tilde), ("b", self.b_tilde)):
            if c.support_end > 1.0 + 1e-14:
                raise InputError(f"{name} - 1 must be supported in [0, 1]")
            if _undeclared_jumps(c, 3):
                raise InsufficientSmoothness(
                    f"{name} - 1 lacks three continuous derivatives at {_undeclared_jumps(c, 3)}")
            if not c.is_zero:
                for m in range(4):
                    end = c.derivative(m) if m else c
                    val = end.left_limit(c.support_end)
                    if abs(val) > 1e-10 * max(1.0, c.sup_norm()):
                        raise InsufficientSmoothness(
                            f"derivative {m} of {name} - 1 does not vanish at its support end")
        x = np.linspace(0.0, 1.0, self.grid_points)
        for name, c in (("a", self.a_tilde), ("b", self.b_tilde)):
            vals = 1.0 + c(x)
            if np.any(vals <= 0.0):
                i = int(np.argmin(vals))
                raise NonPositiveCoefficient(f"{name}({x[i]:.6g}) = {vals[i]:.6g} <= 0")
        res = self.boundary_residual()
        if abs(res) > 1e-8:
            raise BoundaryConstraintViolated(f"(3a'/a + 5b'/b)(0) = {res:.3g}")

    @classmethod
    def identity(cls):
        return cls(CompactCoeff.zero(1.0), CompactCoeff.zero(1.0))

    def a(self, x):
        return 1.0 + self.a_tilde(x)

    def b(self, x):
        return 1.0 + self.b_tilde(x)

    def boundary_residual(self) -> float:
        da = self.a_tilde.derivative().right_limit(0.0)
        db = self.b_tilde.derivative().right_limit(0.0)
        return 3.0 * da / (1.0 + self.a_tilde.right_limit(0.0)) + 5.0 * db / (1.0 + self.b_tilde.right_limit(0.0))

    @property
    def breakpoints(self) -> np.ndarray:
        bp = np.union1d(self.a_tilde.breakpoints, self.b_tilde.breakpoints)
        return np.union1d(bp[bp <= 1.0], [0.0, 1.0])

    def to_dict(self) -> dict:
        return {"a": self.a_tilde.to_dict(), "b": self.b_tilde.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "BeamCoeffs":
        try:
            return cls(CompactCoeff.from_dict(d["a"]), CompactCoeff.from_dict(d["b"]))
        except KeyError as exc:
            raise InputError(f"beam specification lacks {exc}") from exc


# truncated Taylor-series arithmetic, arrays of shape (npts, L)

def _ts_mul(f, g):
    L = f.shape[1]
    out = np.zeros_like(f)
    for n in range(L):
        out[:, n] = np.sum(f[:, :n + 1] * g[:, n::-1], axis=1)
    return out


def _ts_pow(f, r):
    """``f**r`` for a series with nonzero constant term."""
    L = f.shape[1]
    g = np.zeros_like(f)
    g[:, 0] = f[:, 0] ** r
    for n in range(1, L):
        acc = np.zeros(f.shape[0])
        for j in range(1, n + 1):
            acc += (r * j - (n - j)) * f[:, j] * g[:, n - j]
        g[:, n] = acc / (n * f[:, 0])
    return g


def _ts_deriv(f):
    out = np.zeros_like(f)
    L = f.shape[1]
    for n in range(L - 1):
        out[:, n] = (n + 1) * f[:, n + 1]
    return out


def _taylor(c: CompactCoeff, x, L, offset=0.0, side="right"):
    """Taylor coefficients of ``offset + c`` at each ``x``.

    ``side`` selects the piece used at a breakpoint.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.size, L))
    out[:, 0] = offset
    idx = c.piece_index(x, side=side)
    inside = (x >= 0.0) & (x < c.support_end) if side == "right" else (x > 0.0) & (x <= c.support_end)
    fact = 1.0
    for n in range(L):
        if n:
            fact *= n
        for j in np.unique(idx[inside]):
            m = inside & (idx == j)
            pc = c.pieces[j].deriv(n) if n else c.pieces[j]
            out[m, n] += pc(x[m]) / fact
    return out


@dataclass(frozen=True)
class LiouvilleResult:
    """Output of :func:`liouville_data`.

    Attributes
    ----------
    pair : CoeffPair
        Transformed coefficients in the ``t`` variable.
    alpha, beta, kappa : CompactCoeff
        Logarithmic derivatives ``a_t/a``, ``b_t/b`` and the quadratic form ``kappa``.
    gamma : float
        Transformed length ``int_0^1 (b/a)^{1/4} dx``.
    t_of_x, x_of_t : callable
        The change of variables and its inverse.
    """

    pair: CoeffPair
    alpha: CompactCoeff
    beta: CompactCoeff
    kappa: CompactCoeff
    gamma: float
    t_of_x: Callable
    x_of_t: Callable


def _t_map(beam: BeamCoeffs):
    """Piecewise Chebyshev antiderivative of ``(b/a)^{1/4}`` on the beam breakpoints."""
    bp = beam.breakpoints
    pieces, t_at = [], [0.0]
    for x0, x1 in zip(bp[:-1], bp[1:]):
        rate = _adaptive_cheb(lambda x: (beam.b(x) / beam.a(x)) ** 0.25, x0, x1)
        T = rate.integ(lbnd=x0, k=t_at[-1])
        pieces.append(T)
        t_at.append(float(T(x1)))
    t_at = np.asarray(t_at)

    def t_of_x(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        idx = np.clip(np.searchsorted(bp[1:-1], x, side="right"), 0, len(pieces) - 1)
        out = np.empty(x.shape)
        for j in np.unique(idx):
            m = idx == j
            out[m] = pieces[j](x[m])
        return out if out.ndim else float(out)

    def x_of_t(t, tol=1e-12):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        lo = np.zeros(flat.shape)
        hi = np.ones(flat.shape)
        # monotone bracketing, then Newton polish with t'(x) = (b/a)^{1/4}
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = t_of_x(mid) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-6:
                break
        x = 0.5 * (lo + hi)
        for _ in range(8):
            step = (t_of_x(x) - flat) / (beam.b(x) / beam.a(x)) ** 0.25
            x = np.clip(x - step, lo, hi)
            if np.max(np.abs(step)) < tol * 1e-2:
                break
        return x.reshape(t.shape) if t.ndim else float(x[0])

    return t_of_x, x_of_t, t_at, bp


def _liouville_samples(beam: BeamCoeffs, x, side="right"):
    """alpha, beta, kappa, p and q at beam points ``x``.

    Derivatives in ``t`` are taken on truncated Taylor series in ``x``
    through ``d/dt = (a/b)^{1/4} d/dx``.
    """
    L = 5
    A = _taylor(beam.a_tilde, x, L, offset=1.0, side=side)
    B = _taylor(beam.b_tilde, x, L, offset=1.0, side=side)
    s = _ts_pow(_ts_mul(A, _ts_pow(B, -1.0)), 0.25)   # dx/dt

    def Dt(f):
        return _ts_mul(s, _ts_deriv(f))

    al = [_ts_mul(_ts_deriv(A), _ts_mul(s, _ts_pow(A, -1.0)))]
    be = [_ts_mul(_ts_deriv(B), _ts_mul(s, _ts_pow(B, -1.0)))]
    for _ in range(3):
        al.append(Dt(al[-1]))
        be.append(Dt(be[-1]))
    a = [v[:, 0] for v in al]
    b = [v[:, 0] for v in be]
    e0_dot = (3 * a[1] + 5 * b[1]) / 4
    e1 = [(a[j] + 3 * b[j]) / 8 for j in range(4)]
    e2 = [(3 * a[j] + b[j]) / 8 for j in range(3)]
    kappa = (5 * a[0] ** 2 + 5 * b[0] ** 2 + 6 * a[0] * b[0]) / 32
    p = -(e0_dot + kappa) / 2
    F = (e2[1] + e2[0] ** 2) * e1[0] - e1[2]
    dF = (e2[2] + 2 * e2[0] * e2[1]) * e1[0] + (e2[1] + e2[0] ** 2) * e1[1] - e1[3]
    q = dF + F * e1[0]
    return {"alpha": a[0], "beta": b[0], "kappa": kappa, "p": p, "q": q}


def liouville_data(beam: BeamCoeffs, grid_order: int = 64) -> LiouvilleResult:
    """Liouville transform with the intermediate functions.

    Parameters
    ----------
    beam : BeamCoeffs
        Admissible beam data.
    grid_order : int
        Number of second-kind Chebyshev points per ``t`` interval.

    Returns
    -------
    LiouvilleResult
    """
    t_of_x, x_of_t, t_at, xb = _t_map(beam)
    gamma = float(t_at[-1])
    nodes = chebpts2(grid_order)
    keys = ("alpha", "beta", "kappa", "p", "q")
    data = {key: [] for key in keys}
    for t0, t1, x0, x1 in zip(t_at[:-1], t_at[1:], xb[:-1], xb[1:]):
        tt = 0.5 * (t1 - t0) * nodes + 0.5 * (t0 + t1)
        xx = np.clip(x_of_t(tt), x0, x1)
        xx[0], xx[-1] = x0, x1
        vals = _liouville_samples(beam, xx[:-1], side="right")
        last = _liouville_samples(beam, xx[-1:], side="left")
        for key in keys:
            v = np.concatenate([vals[key], last[key]])
            data[key].append(Chebyshev.fit(tt, v, grid_order - 1, domain=[t0, t1]))
    bp = tuple(float(t) for t in t_at)
    jumps = bp[1:-1]

    def make(key):
        return CompactCoeff(bp, tuple(data[key]), jumps)

    pair = CoeffPair(make("p"), make("q"))
    return LiouvilleResult(pair, make("alpha"), make("beta"), make("kappa"), gamma, t_of_x, x_of_t)


def liouville_transform(beam: BeamCoeffs, grid_order: int = 64) -> CoeffPair:
    """Transform beam data ``(a, b)`` to the pair ``(p, q)`` in the ``t`` variable.

    Parameters
    ----------
    beam : BeamCoeffs
    grid_order : int
        Chebyshev points of the second kind per interval.

    Returns
    -------
    CoeffPair
        Coefficients supported on ``[0, gamma]`` with
        ``gamma = int_0^1 (b/a)^{1/4} dx``.
    """
    return liouville_data(beam, grid_order).pair


def kappa_integral(beam: BeamCoeffs, grid_order: int = 64) -> float:
    """Borg indicator ``int_0^gamma kappa(t) dt`` (nonnegative)."""
    if beam.a_tilde.is_zero and beam.b_tilde.is_zero:
        return 0.0
    return liouville_data(beam, grid_order).kappa.integral()


def square_case_q(p: CompactCoeff) -> CompactCoeff:
    """``q = p'' + p**2``, the coefficient for which the operator is ``h**2``.

    Raises
    ------
    InsufficientSmoothness
        If a nonzero ``p`` has piecewise degree below two.
    InputError
        If ``p`` or ``p'`` fail to vanish at ``0`` or at ``support_end``.
    """
    if p.is_zero:
        return CompactCoeff.zero(p.support_end)
    if p.degree < 2:
        raise InsufficientSmoothness(f"piecewise degree {p.degree} < 2")
    dp = p.derivative()
    scale = max(p.sup_norm(), 1e-300)
    for name, f in (("p", p), ("p'", dp)):
        for val in (f.right_limit(0.0), f.left_limit(p.support_end)):
            if abs(val) > 1e-10 * scale * max(1.0, p.support_end) ** 2:
                raise InputError(f"{name} must vanish at both ends of the support")
    d2 = p.derivative(2)
    q = d2 + p * p
    jumps = _undeclared_jumps(CompactCoeff(q.breakpoints, q.pieces, q.breakpoints[1:-1]), 0)
    return CompactCoeff(q.breakpoints, q.pieces, jumps)
