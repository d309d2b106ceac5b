"""Zeros of ``D``: argument-principle counts, Newton refinement and seed lattice.

Every count is an integer obtained by tracking ``arg D`` continuously
along a closed contour. Consecutive samples are bisected until their
phase increment is below ``pi / 2``. ``log D`` is evaluated at a fixed
Nystrom order through :func:`~ebres.fredholm.log_det`, so the moduli
``exp(2 gamma |k|)`` met off the first quadrant never overflow.

``D`` has at most a simple pole at ``k = 0``. Contours are therefore
required to stay outside the disc ``|k| < k_min``; a contour that
encloses the origin counts zeros minus the pole order.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .coeffs import CoeffPair
from .errors import (IncompleteZeroSet, InputError, PhaseJump, ZeroJump,
                     ZeroOnContour)
from .fredholm import log_det, quadrant

__all__ = [
    "DetEvaluator", "ContourCount", "ResonanceZero", "ResonanceSet",
    "CountRow", "ForbiddenDomainReport", "NewtonResult",
    "winding_number", "box_winding", "sector_winding", "asymptotic_seeds",
    "newton_refine", "find_resonances", "counting_function",
    "forbidden_domain_check", "MAX_SAMPLES", "ZERO_FLOOR",
]

MAX_SAMPLES = 2 ** 14
ZERO_FLOOR = 1e-12
_STEP = 0.5 * math.pi


class DetEvaluator:
    """Cached ``log D(k)`` at a fixed Nystrom order.

    Parameters
    ----------
    coeffs : CoeffPair
    order : int
        Nodes per panel. The split scheme reaches about ``1e-11`` at 64
        nodes per unit panel up to ``|k| ~ 100``.
    backend : {"numba", "numpy", None}
    """

    def __init__(self, coeffs: CoeffPair, order: int = 64, backend=None):
        self.coeffs = coeffs
        self.order = int(order)
        self.backend = backend
        self._cache: dict = {}
        self.calls = 0

    def log(self, k) -> complex:
        k = complex(k)
        val = self._cache.get(k)
        if val is None:
            self.calls += 1
            val = log_det(self.coeffs, k, self.order, backend=self.backend)[0]
            self._cache[k] = val
        return val

    def __call__(self, k) -> complex:
        z = self.log(k)
        if z.real > 709.0:
            return complex(np.inf)
        return cmath.exp(z)

    def abs(self, k) -> float:
        z = self.log(k)
        return math.exp(min(z.real, 709.0)) if z.real > -745.0 else 0.0


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourCount:
    """Result of one argument-principle count.

    Attributes
    ----------
    center : complex
    radius : float
        Circle radius; for boxes and sectors the radius of the smallest
        enclosing circle about ``center``.
    winding : int
    samples : int
        Number of ``D`` samples on the contour after refinement.
    min_abs_D_on_contour : float
    max_abs_D_on_contour : float
    shape : str
        ``"circle"``, ``"box"`` or ``"sector"``.
    zero_sum : complex
        Trapezoidal estimate of ``(1 / 2 pi i) int k dlog D``, the sum of
        the enclosed zeros minus the enclosed poles. It is only as accurate
        as the phase sampling and serves as a Newton start.
    """

    center: complex
    radius: float
    winding: int
    samples: int
    min_abs_D_on_contour: float
    max_abs_D_on_contour: float = 0.0
    shape: str = "circle"
    zero_sum: complex = 0j


def _wrap(d: float) -> float:
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def _track_piece(ev: DetEvaluator, path: Callable[[float], complex], n0: int, budget: list,
                 stats: list, where):
    """Phase change of ``D`` and ``int k dlog D`` along ``path(t)``, ``t`` in ``[0, 1]``."""
    ts = np.linspace(0.0, 1.0, n0 + 1)
    logs = [ev.log(path(t)) for t in ts]
    budget[0] -= n0 + 1
    total = 0.0
    moment = 0j
    for i in range(n0):
        stack = [(ts[i], logs[i], ts[i + 1], logs[i + 1])]
        while stack:
            t0, l0, t1, l1 = stack.pop()
            d = _wrap(l1.imag - l0.imag)
            if abs(d) < _STEP:
                total += d
                moment += 0.5 * (path(t0) + path(t1)) * complex(l1.real - l0.real, d)
                _note(stats, l0, path(t0))
                continue
            if budget[0] <= 0:
                raise PhaseJump(f"{where}, k = {path(t0)}", abs(d))
            tm = 0.5 * (t0 + t1)
            lm = ev.log(path(tm))
            budget[0] -= 1
            # the left half must be summed first
            stack.append((tm, lm, t1, l1))
            stack.append((t0, l0, tm, lm))
    _note(stats, logs[-1], path(1.0))
    return total, moment


def _note(stats, logval, k):
    if logval.real < stats[0][0]:
        stats[0] = (logval.real, k)
    stats[1] = max(stats[1], logval.real)


def _run_contour(ev: DetEvaluator, pieces, where, center, radius, shape,
                 max_samples=MAX_SAMPLES, check_floor=True) -> ContourCount:
    """Total winding over closed ``pieces``: ``(path, n0, reverse)`` triples."""
    budget = [max_samples]
    stats = [(np.inf, None), -np.inf]
    total = 0.0
    moment = 0j
    for path, n0, reverse in pieces:
        ph, mo = _track_piece(ev, path, n0, budget, stats, where)
        sgn = -1.0 if reverse else 1.0
        total += sgn * ph
        moment += sgn * mo
    lo, k_lo = stats[0]
    mn = math.exp(lo) if lo > -745.0 else 0.0
    mx = math.exp(min(stats[1], 709.0))
    if check_floor and mn < ZERO_FLOOR:
        raise ZeroOnContour(center, radius, k_lo, mn)
    w = total / (2.0 * math.pi)
    return ContourCount(complex(center), float(radius), int(round(w)), max_samples - budget[0],
                        mn, mx, shape, complex(moment / (2j * math.pi)))


def _n_initial(length: float, gamma: float) -> int:
    return int(max(16, math.ceil(2.0 * length * max(gamma, 1.0))))


def _check_origin(coeffs, dist):
    if dist < coeffs.k_min:
        raise InputError(f"contour passes within k_min = {coeffs.k_min:.3g} of the origin")


def winding_number(coeffs: CoeffPair, center, radius: float, refinement: int = MAX_SAMPLES,
                   order: int = 64, evaluator: Optional[DetEvaluator] = None) -> ContourCount:
    """Number of zeros of ``D`` inside the circle ``|k - center| = radius``.

    Parameters
    ----------
    coeffs : CoeffPair
    center : complex
    radius : float
    refinement : int
        Maximum number of samples on the contour.
    order : int
        Nystrom order of each ``D`` evaluation.
    evaluator : DetEvaluator, optional
        Shares cached values between calls.

    Raises
    ------
    ZeroOnContour
        If ``|D| < 1e-12`` at a sample.
    PhaseJump
        If the sample budget runs out before all steps are below ``pi / 2``.
    """
    center = complex(center)
    if radius <= 0:
        raise InputError("radius must be positive")
    _check_origin(coeffs, abs(abs(center) - radius))
    ev = evaluator or DetEvaluator(coeffs, order)
    path = lambda t: center + radius * cmath.exp(2j * math.pi * t)
    n0 = _n_initial(2 * math.pi * radius, coeffs.gamma)
    return _run_contour(ev, [(path, n0, False)], f"circle {center}, {radius}", center, radius,
                        "circle", refinement)


def _segment(a: complex, b: complex):
    return lambda t: a + (b - a) * t


def box_winding(coeffs: CoeffPair, box, refinement: int = MAX_SAMPLES, order: int = 64,
                evaluator: Optional[DetEvaluator] = None) -> ContourCount:
    """Number of zeros inside the rectangle ``box = (x0, x1, y0, y1)``.

    Edges are always parametrised left to right and bottom to top, so
    adjacent boxes share their samples through the evaluator cache.
    """
    x0, x1, y0, y1 = map(float, box)
    if not (x1 > x0 and y1 > y0):
        raise InputError(f"degenerate box {box}")
    _check_origin(coeffs, _dist_box_origin(box))
    ev = evaluator or DetEvaluator(coeffs, order)
    g = coeffs.gamma
    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    nx, ny = _n_initial(x1 - x0, g), _n_initial(y1 - y0, g)
    pieces = [(_segment(c[0], c[1]), nx, False), (_segment(c[1], c[2]), ny, False),
              (_segment(c[3], c[2]), nx, True), (_segment(c[0], c[3]), ny, True)]
    center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    return _run_contour(ev, pieces, f"box {box}", center, abs(c[2] - center), "box", refinement)


def sector_winding(coeffs: CoeffPair, r_inner: float, r_outer: float, theta0: float,
                   theta1: float, refinement: int = 4 * MAX_SAMPLES, order: int = 64,
                   evaluator: Optional[DetEvaluator] = None) -> ContourCount:
    """Zeros in ``r_inner < |k| < r_outer``, ``theta0 < arg k < theta1``.

    Rays are parametrised outward and arcs counter-clockwise so that
    neighbouring sectors reuse samples.
    """
    if not (0 < r_inner < r_outer and theta1 > theta0):
        raise InputError("sector needs 0 < r_inner < r_outer and theta1 > theta0")
    _check_origin(coeffs, r_inner)
    ev = evaluator or DetEvaluator(coeffs, order)
    g = coeffs.gamma
    ray = lambda th: (lambda t: cmath.rect(r_inner + (r_outer - r_inner) * t, th))
    arc = lambda r: (lambda t: cmath.rect(r, theta0 + (theta1 - theta0) * t))
    nr = _n_initial(r_outer - r_inner, g)
    pieces = [(ray(theta0), nr, False),
              (arc(r_outer), _n_initial(r_outer * (theta1 - theta0), g), False),
              (ray(theta1), nr, True),
              (arc(r_inner), _n_initial(r_inner * (theta1 - theta0), g), True)]
    center = cmath.rect(0.5 * (r_inner + r_outer), 0.5 * (theta0 + theta1))
    return _run_contour(ev, pieces, f"sector r in ({r_inner}, {r_outer}), arg in ({theta0}, {theta1})",
                        center, r_outer, "sector", refinement)


def _dist_box_origin(box) -> float:
    x0, x1, y0, y1 = box
    dx = 0.0 if x0 <= 0.0 <= x1 else min(abs(x0), abs(x1))
    dy = 0.0 if y0 <= 0.0 <= y1 else min(abs(y0), abs(y1))
    return math.hypot(dx, dy)


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------


def asymptotic_seeds(p_plus: float, gamma: float, n_range):
    """Leading-order resonance lattice for a jump ``p_plus = p(gamma - 0)``.

    ``k_n = (i pi j_n - log(2 pi n / (gamma |2 p_plus|^(1/2)))) / gamma`` and
    ``k_{-n} = i k_n - pi / (2 gamma)``, with ``j_n = n`` for ``p_plus > 0``
    and ``j_n = n + 1/2`` for ``p_plus < 0``.

    Returns
    -------
    (k_plus, k_minus) : tuple of ndarray
        ``k_plus`` lies in the second quadrant for large ``n`` and
        ``k_minus`` in the third.

    Raises
    ------
    ZeroJump
        If ``p_plus == 0``.
    """
    if p_plus == 0:
        raise ZeroJump("the seed lattice needs a nonzero jump p(gamma - 0)")
    if gamma <= 0:
        raise InputError("gamma must be positive")
    n = np.asarray(list(n_range), dtype=float)
    if np.any(n < 1):
        raise InputError("seed indices start at 1")
    j = n if p_plus > 0 else n + 0.5
    kp = (1j * np.pi * j - np.log(2 * np.pi * n / (gamma * np.sqrt(abs(2.0 * p_plus))))) / gamma
    km = 1j * kp - np.pi / (2 * gamma)
    return kp, km


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NewtonResult:
    """Outcome of :func:`newton_refine`.

    Attributes
    ----------
    k : complex
    residual : float
        ``|D(k)|``.
    iterations : int
    converged : bool
    """

    k: complex
    residual: float
    iterations: int
    converged: bool


def _newton_step(ev: DetEvaluator, k: complex) -> complex:
    """``D(k) / D'(k)`` with ``D'`` by a central difference, scaled by ``D(k)``."""
    h = 1e-5 * (1.0 + abs(k))
    l0 = ev.log(k)
    if l0.real < -745.0:
        return 0j
    dp = cmath.exp(ev.log(k + h) - l0) - cmath.exp(ev.log(k - h) - l0)
    if dp == 0:
        return complex(np.nan)
    return 2 * h / dp


def newton_refine(coeffs: CoeffPair, k0, multiplicity: int = 1, order: int = 64,
                  max_iter: int = 60, tol: float = 1e-12,
                  evaluator: Optional[DetEvaluator] = None) -> NewtonResult:
    """Newton iteration ``k <- k - m D(k) / D'(k)``.

    ``D'`` comes from a central difference with step ``1e-5 (1 + |k|)``.
    Steps are capped at ``1 + |k| / 4``. Convergence means a step below
    ``tol (1 + |k|)``.
    """
    ev = evaluator or DetEvaluator(coeffs, order)
    k = complex(k0)
    for it in range(1, max_iter + 1):
        step = multiplicity * _newton_step(ev, k)
        if not np.isfinite(step):
            break
        lim = 1.0 + abs(k) / 4.0
        if abs(step) > lim:
            step *= lim / abs(step)
        k_new = k - step
        if abs(k_new) < coeffs.k_min:
            return NewtonResult(k, ev.abs(k), it, False)
        k = k_new
        if abs(step) <= tol * (1.0 + abs(k)):
            return NewtonResult(k, ev.abs(k), it, True)
    return NewtonResult(k, ev.abs(k), max_iter, False)


# ---------------------------------------------------------------------------
# resonance sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceZero:
    """One zero of ``D``.

    Attributes
    ----------
    k : complex
    multiplicity : int
    quadrant : str
        ``"K1"`` to ``"K4"``.
    residual : float
        ``|D(k)|``.
    scale : float
        ``max |D|`` on the search contour that isolated the zero.
    """

    k: complex
    multiplicity: int
    quadrant: str
    residual: float
    scale: float = 1.0

    def to_dict(self) -> dict:
        return {"re": self.k.real, "im": self.k.imag, "mult": self.multiplicity,
                "quadrant": self.quadrant, "residual": self.residual, "scale": self.scale}

    @classmethod
    def from_dict(cls, d) -> "ResonanceZero":
        return cls(complex(d["re"], d["im"]), int(d.get("mult", d.get("multiplicity", 1))), str(d["quadrant"]),
                   float(d["residual"]), float(d.get("scale", 1.0)))


@dataclass(frozen=True)
class ResonanceSet:
    """Zeros of ``D`` found in a region, sorted by ``(Re k, Im k)``.

    Attributes
    ----------
    zeros : tuple of ResonanceZero
    unresolved : tuple of dict
        Boxes with a nonzero winding that could not be resolved, each with
        ``box``, ``winding`` and ``reason``.
    region : tuple or None
        Searched rectangle ``(x0, x1, y0, y1)``.
    """

    zeros: tuple = ()
    unresolved: tuple = ()
    region: Optional[tuple] = None

    def __len__(self) -> int:
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    @property
    def ks(self) -> np.ndarray:
        return np.array([z.k for z in self.zeros], dtype=complex)

    @property
    def total_multiplicity(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    def in_quadrant(self, q: str) -> "ResonanceSet":
        return ResonanceSet(tuple(z for z in self.zeros if z.quadrant == q), (), self.region)

    def symmetry_residual(self, coeffs: CoeffPair, order: int = 64) -> float:
        """``max |D(i conj z)| / scale`` over the zeros; small when the set respects the symmetry."""
        ev = DetEvaluator(coeffs, order)
        worst = 0.0
        for z in self.zeros:
            worst = max(worst, ev.abs(1j * np.conj(z.k)) / max(z.scale, 1.0))
        return worst

    def to_dict(self) -> dict:
        return {"zeros": [z.to_dict() for z in self.zeros],
                "unresolved": [dict(u) for u in self.unresolved],
                "region": list(self.region) if self.region is not None else None}

    @classmethod
    def from_dict(cls, d) -> "ResonanceSet":
        reg = d.get("region")
        return cls(tuple(ResonanceZero.from_dict(z) for z in d.get("zeros", [])),
                   tuple(d.get("unresolved", [])), tuple(reg) if reg is not None else None)


def _qname(k) -> str:
    return f"K{quadrant(k)}"


def _inside(k, box, pad=0.0) -> bool:
    x0, x1, y0, y1 = box
    return x0 - pad <= k.real <= x1 + pad and y0 - pad <= k.imag <= y1 + pad


def _split4(box):
    x0, x1, y0, y1 = box
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    return [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]


def _micro_multiplicity(coeffs, ev, k) -> int:
    r = 1e-3 * (1.0 + abs(k))
    try:
        return winding_number(coeffs, k, r, evaluator=ev, refinement=2048).winding
    except (ZeroOnContour, PhaseJump, InputError):
        return 0


def _resolve_box(coeffs, ev, box, seeds, depth, max_depth, excl, grown=False):
    """Zeros and unresolved records inside one box."""
    if _dist_box_origin(box) < excl:
        if depth >= max_depth:
            return [], [{"box": list(box), "winding": None, "reason": "touches the origin exclusion"}]
        out_z, out_u = [], []
        for b in _split4(box):
            z, u = _resolve_box(coeffs, ev, b, seeds, depth + 1, max_depth, excl)
            out_z += z
            out_u += u
        return out_z, out_u
    try:
        cc = box_winding(coeffs, box, evaluator=ev)
    except (ZeroOnContour, PhaseJump) as exc:
        if depth >= max_depth:
            return [], [{"box": list(box), "winding": None, "reason": str(exc)}]
        if isinstance(exc, ZeroOnContour) and not grown:
            # a zero on an edge, often on an axis: enlarge the box past it
            return _resolve_box(coeffs, ev, _grow(box), seeds, depth + 1, max_depth, excl, True)
        return _merge(coeffs, ev, _split4_shifted(box), seeds, depth, max_depth, excl)
    W = cc.winding
    if W == 0:
        return [], []
    starts = [s for s in seeds if _inside(s, box)]
    if W == 1:
        starts.insert(0, cc.zero_sum)
    starts.append(complex(0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3])))
    for s in starts:
        nr = newton_refine(coeffs, s, evaluator=ev)
        if not (nr.converged and _inside(nr.k, box)):
            continue
        m = _micro_multiplicity(coeffs, ev, nr.k)
        if m == W:
            if m > 1:
                nr = newton_refine(coeffs, nr.k, multiplicity=m, evaluator=ev)
            k = _snap_axis(nr.k)
            return [ResonanceZero(k, m, _qname(k), nr.residual, cc.max_abs_D_on_contour)], []
        break
    if depth >= max_depth:
        return [], [{"box": list(box), "winding": W, "reason": "Newton did not isolate all zeros"}]
    return _merge(coeffs, ev, _split4(box), seeds, depth, max_depth, excl)


def _snap_axis(k, rel=1e-11):
    """Zero a real or imaginary part that is rounding noise, so axis zeros get a stable quadrant."""
    re = 0.0 if abs(k.real) < rel * abs(k) else k.real
    im = 0.0 if abs(k.imag) < rel * abs(k) else k.imag
    return complex(re, im)


def _grow(box, frac=0.0731):
    x0, x1, y0, y1 = box
    dx, dy = frac * (x1 - x0), frac * (y1 - y0)
    return (x0 - dx, x1 + dx, y0 - dy, y1 + dy)


def _split4_shifted(box):
    # split off-centre so that a zero sitting on the old midlines moves off the new edges
    x0, x1, y0, y1 = box
    xm = x0 + 0.4321 * (x1 - x0)
    ym = y0 + 0.5678 * (y1 - y0)
    return [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]


def _merge(coeffs, ev, boxes, seeds, depth, max_depth, excl):
    zs, us = [], []
    for b in boxes:
        z, u = _resolve_box(coeffs, ev, b, seeds, depth + 1, max_depth, excl)
        zs += z
        us += u
    return zs, us


def _tile(region, box_size):
    x0, x1, y0, y1 = map(float, region)
    if not (x1 > x0 and y1 > y0):
        raise InputError(f"degenerate region {region}")
    nx = max(1, int(math.ceil((x1 - x0) / box_size)))
    ny = max(1, int(math.ceil((y1 - y0) / box_size)))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    return [(xs[i], xs[i + 1], ys[j], ys[j + 1]) for j in range(ny) for i in range(nx)]


def find_resonances(coeffs: CoeffPair, region, seeds: Optional[Sequence[complex]] = None,
                    box_size: Optional[float] = None, order: int = 64, max_depth: int = 7,
                    threads: int = 1) -> ResonanceSet:
    """All zeros of ``D`` in the rectangle ``region = (x0, x1, y0, y1)``.

    The region is tiled into boxes of side about ``box_size`` (default
    ``2 pi / gamma``). Each box with a nonzero winding gets Newton
    iterations from the seeds it contains and from its centre. A limit
    inside the box is accepted once its micro-contour winding (radius
    ``1e-3 (1 + |k|)``) accounts for the whole box; otherwise the box is
    split in four, down to ``max_depth`` levels. A box whose edge passes
    through a zero is enlarged once by 7.31% per side. Boxes that stay
    unresolved are listed in ``unresolved``. The region is closed.

    Boxes closer to the origin than ``max(k_min, 1e-2)`` are split and
    finally reported as unresolved, since ``D`` may have a pole there.
    """
    if coeffs.is_free:
        return ResonanceSet((), (), tuple(map(float, region)))
    box_size = box_size or 2.0 * math.pi / coeffs.gamma
    region = tuple(map(float, region))
    boxes = _tile(region, box_size)
    seeds = [complex(s) for s in (seeds if seeds is not None else [])]
    excl = max(coeffs.k_min, 1e-2)

    def work(b):
        ev = DetEvaluator(coeffs, order)
        return _resolve_box(coeffs, ev, b, seeds, 0, max_depth, excl)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, boxes))
    else:
        results = [work(b) for b in boxes]
    zeros, unresolved = [], []
    for z, u in results:
        zeros += z
        unresolved += u
    # enlarged boxes may reach past the region
    zeros = [z for z in _dedupe(zeros) if _inside(z.k, region, 1e-9 * (1.0 + abs(z.k)))]
    zeros.sort(key=lambda z: (z.k.real, z.k.imag))
    return ResonanceSet(tuple(zeros), tuple(unresolved), tuple(map(float, region)))


def _dedupe(zeros):
    # a zero on a shared edge can be found from both sides
    out = []
    for z in zeros:
        if any(abs(z.k - o.k) < 1e-8 * (1 + abs(z.k)) for o in out):
            continue
        out.append(z)
    return out


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountRow:
    """Zero counts inside ``|k| < r``.

    Attributes
    ----------
    r : float
    N : int
        Sum of the four quadrant counts.
    N1, N2, N3, N4 : int
    N_circle : int
        Winding of ``D`` on ``|k| = r`` minus that on ``|k| = r_inner``;
        equals ``N`` when no zero lies on a quadrant ray.
    bound : float
        ``4 gamma r / pi``.
    samples : int
    """

    r: float
    N: int
    N1: int
    N2: int
    N3: int
    N4: int
    N_circle: int
    bound: float
    samples: int

    @property
    def consistent(self) -> bool:
        return self.N == self.N_circle


# Rays offset by a tiny angle so that zeros on the axes are counted in the
# quadrant that :func:`quadrant` assigns them to: K1 is closed, arg pi
# belongs to K2 and arg -pi/2 to K4.
_RAY_TILT = 1e-9
_QUADRANT_RAYS = (
    (-_RAY_TILT, 0.5 * math.pi + _RAY_TILT),
    (0.5 * math.pi + _RAY_TILT, math.pi + _RAY_TILT),
    (math.pi + _RAY_TILT, 1.5 * math.pi - _RAY_TILT),
    (1.5 * math.pi - _RAY_TILT, 2.0 * math.pi - _RAY_TILT),
)


def counting_function(coeffs: CoeffPair, radii, order: int = 64, r_inner: Optional[float] = None,
                      strict: bool = True) -> list:
    """Quadrant zero counts ``N_j(r)`` for each radius.

    Each count is the winding of ``D`` around the annular sector
    ``r_inner < |k| < r`` of one quadrant, with ``r_inner`` defaulting to
    ``max(k_min, 1e-2)``. The sector rays are tilted by ``1e-9`` rad so
    that zeros on the axes fall inside the quadrant given by :func:`quadrant`.

    Raises
    ------
    IncompleteZeroSet
        If ``strict`` and the quadrant sum differs from the full-circle count.
    """
    if r_inner is None:
        r_inner = max(coeffs.k_min, 1e-2)
    rows = []
    ev = DetEvaluator(coeffs, order)
    for r in radii:
        r = float(r)
        if r <= r_inner:
            raise InputError(f"radius {r} must exceed r_inner = {r_inner}")
        if coeffs.is_free:
            rows.append(CountRow(r, 0, 0, 0, 0, 0, 0, 4 * coeffs.gamma * r / math.pi, 0))
            continue
        counts, samples = [], 0
        for j in range(4):
            cc = sector_winding(coeffs, r_inner, r, *_QUADRANT_RAYS[j], evaluator=ev)
            counts.append(cc.winding)
            samples += cc.samples
        outer = winding_number(coeffs, 0j, r, evaluator=ev, refinement=4 * MAX_SAMPLES)
        inner = winding_number(coeffs, 0j, r_inner, evaluator=ev)
        row = CountRow(r, sum(counts), *counts, outer.winding - inner.winding,
                       4 * coeffs.gamma * r / math.pi, samples)
        if strict and not row.consistent:
            raise IncompleteZeroSet(f"quadrant counts {counts} sum to {row.N} but the circle "
                                    f"count at r = {r} is {row.N_circle}")
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# forbidden domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForbiddenDomainReport:
    """Fitted constant of the forbidden-domain bound.

    Attributes
    ----------
    C_star : float
        ``max |k| exp(2 gamma Re k)`` over second-quadrant zeros.
    C_star_mirror : float
        ``max |k| exp(2 gamma Im k)`` over fourth-quadrant zeros, the
        mirrored bound ``|k| <= C exp(-2 gamma Im k)``.
    violations : tuple of complex
        Zeros above a user-supplied ``C``; empty when ``C`` is not given.
    """

    C_star: float
    C_star_mirror: float
    violations: tuple = ()


def forbidden_domain_check(resonances: ResonanceSet, gamma: float,
                           C: Optional[float] = None) -> ForbiddenDomainReport:
    """Report ``C* = max |k| e^{2 gamma Re k}`` over the K2 zeros.

    The same quantity with ``Re k`` replaced by ``Im k`` is computed on
    the K4 zeros, whose bound reads ``|k| <= C e^{-2 gamma Im k}``. Violations are declared only against an explicit ``C``.
    """
    k2 = [z.k for z in resonances.zeros if z.quadrant == "K2"]
    k4 = [z.k for z in resonances.zeros if z.quadrant == "K4"]
    c2 = max((abs(k) * math.exp(2 * gamma * k.real) for k in k2), default=0.0)
    c4 = max((abs(k) * math.exp(2 * gamma * k.imag) for k in k4), default=0.0)
    viol = ()
    if C is not None:
        viol = tuple(k for k in k2 if abs(k) * math.exp(2 * gamma * k.real) > C)
        viol += tuple(k for k in k4 if abs(k) * math.exp(2 * gamma * k.imag) > C)
    return ForbiddenDomainReport(float(c2), float(c4), viol)
