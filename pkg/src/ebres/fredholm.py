"""Nystrom discretisation of ``Y0(k)`` and the determinant ``D(k) = det(I + Y0(k))``.

Two discretisations are provided.

``"gauss"``
    Composite Gauss-Legendre Nystrom matrix with symmetric weight
    splitting. Its trace is spectrally accurate, but because the kernels
    are only Lipschitz on the diagonal the determinant converges
    algebraically, like ``N**-2``.

``"split"`` (default for determinants)
    Product-integration Nystrom matrix. Each row integral is split at its
    own node and evaluated with Gauss points on both sides, with the
    unknown interpolated from the panel nodes by barycentric Lagrange
    interpolation. The slowly decaying tail of the spectrum is then
    restored through exact values of ``Tr T`` and ``Tr T^2``::

        det(I + T) ~ det(I + M) * exp((Tr T - Tr M) - (Tr T^2 - Tr M^2) / 2)

    leaving an ``O(N**-5)`` error.

The split matrix is built in the gauge ``M = K diag(w c)`` with
``c = (2p, q)``, which has the same determinant as the symmetric form.
Only the ``|x - y|`` exponentials are assembled; the ``(x + y)``
exponentials form an exact rank-two kernel ``U V`` that enters through
``det(I + A + U V) = det(I + A) det(I_2 + V (I + A)^{-1} U)``. Off the
first quadrant that part grows like ``exp(2 gamma |k|)`` and would
otherwise swamp the rest of each entry.

The kinked part still grows like ``exp(gamma |k|)`` off the first
quadrant, so the default route evaluates ``D`` there through the exact
identities ``D(ik) = D(k) S(k)``, ``D(-k) = D(k) det Omega(k)``
and ``D(k) = conj D(i conj k)``, each with all solves taken in the first
quadrant.
"""
from __future__ import annotations

import cmath
import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.special import roots_legendre

from ._accel import NUMBA_ENABLED, njit
from .coeffs import CoeffPair
from .errors import InputError, NoConvergence, SingularAtResonance
from .kernels import check_k, operator_kernels, separable_factors

__all__ = [
    "Quadrature", "DetSample", "DetOptions", "NystromBlock",
    "build_Y0", "det_D", "log_det", "trace_Y0_closed", "fourier_moment", "moment",
    "log_det_asymptotic_check", "AsymptoticReport", "quadrant", "solve_system",
    "phi_vectors", "SQRT_2_PI", "gauss_legendre",
]

SQRT_2_PI = np.sqrt(2.0 / np.pi)


def quadrant(k) -> int:
    """Quadrant index 1..4 with ``K1 = {0 <= arg k <= pi/2}``.

    The boundary rays are assigned counter-clockwise: ``arg k = pi`` to K2,
    ``arg k = -pi/2`` to K4.
    """
    th = cmath.phase(complex(k))
    if 0.0 <= th <= np.pi / 2:
        return 1
    if th > np.pi / 2 or th == -np.pi:
        return 2
    if th < -np.pi / 2:
        return 3
    return 4


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule with ``order`` nodes per panel.

    Attributes
    ----------
    nodes, weights : ndarray
        Concatenated panel nodes and weights on ``[0, gamma]``.
    order : int
        Nodes per panel.
    panels : tuple of (float, float)
        Panel end points.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    panels: tuple

    @classmethod
    def composite(cls, breakpoints, order: int) -> "Quadrature":
        if order < 1:
            raise InputError("quadrature order must be positive")
        t, w = gauss_legendre(order)
        xs, ws, panels = [], [], []
        bp = np.asarray(breakpoints, dtype=float)
        for a, b in zip(bp[:-1], bp[1:]):
            xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
            ws.append(0.5 * (b - a) * w)
            panels.append((float(a), float(b)))
        return cls(np.concatenate(xs), np.concatenate(ws), order, tuple(panels))

    @classmethod
    def for_pair(cls, coeffs: CoeffPair, order: int) -> "Quadrature":
        return cls.composite(coeffs.breakpoints, order)

    @property
    def size(self) -> int:
        return self.nodes.size


@functools.lru_cache(maxsize=64)
def _gauss_legendre_cached(n: int):
    t, w = roots_legendre(n)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def gauss_legendre(n: int):
    """Read-only Gauss-Legendre nodes and weights on ``[-1, 1]``, cached by ``n``."""
    return _gauss_legendre_cached(int(n))


def _bary_weights(t, w):
    """Barycentric weights of Gauss-Legendre nodes, ``(-1)^j sqrt((1 - t_j^2) w_j)``."""
    bw = np.sqrt((1.0 - t ** 2) * w)
    bw[1::2] *= -1.0
    return bw / np.max(np.abs(bw))


#: Largest order whose per-row interpolation matrices are cached (32 MB per panel at 128).
MAX_CACHED_INTERP = 128


@dataclass
class _SplitData:
    """k-independent data of the split rows of one panel."""

    rows: np.ndarray       # global indices of the panel nodes
    xi: np.ndarray         # node positions
    ys: np.ndarray         # (n, 2n) sub-points
    cws: np.ndarray        # (nb, n, 2n) coefficient times sub-weight
    cs: np.ndarray         # (nb, n, 2n) coefficient values at sub-points
    ws: np.ndarray         # (n, 2n) sub-weights
    tloc: np.ndarray       # (n, 2n) sub-points in panel coordinates
    den: np.ndarray        # (n, 2n) barycentric denominators
    hit: np.ndarray        # (n, 2n) index of a coinciding node or -1
    tnodes: np.ndarray     # panel nodes in panel coordinates
    wb: np.ndarray         # barycentric weights
    L: Optional[np.ndarray] = None  # (n, 2n, n) interpolation matrices, small orders only


@dataclass
class _Grid:
    """Everything about a discretisation that does not depend on ``k``."""

    quad: Quadrature
    active: tuple          # active components: 0 for p, 1 for q
    c: np.ndarray          # (nb, Ntot) coefficient values 2p, q at nodes
    split: list


def _grid(coeffs: CoeffPair, order: int) -> _Grid:
    key = ("grid", order)
    cache = coeffs._cache
    if key in cache:
        return cache[key]
    quad = Quadrature.for_pair(coeffs, order)
    funcs = []
    active = []
    if not coeffs.p.is_zero:
        active.append(0)
        funcs.append(lambda x: 2.0 * coeffs.p(x))
    if not coeffs.q.is_zero:
        active.append(1)
        funcs.append(coeffs.q)
    x = quad.nodes
    c = np.array([f(x) for f in funcs]) if funcs else np.zeros((0, x.size))
    split = []
    if funcs:
        t, w = gauss_legendre(order)
        u = 0.5 * (t + 1.0)
        wb = _bary_weights(t, w)
        for p_idx, (a, b) in enumerate(quad.panels):
            rows = np.arange(p_idx * order, (p_idx + 1) * order)
            xi = x[rows]
            left = a + u[None, :] * (xi[:, None] - a)
            right = xi[:, None] + u[None, :] * (b - xi[:, None])
            ys = np.concatenate([left, right], axis=1)
            ws = np.concatenate([0.5 * w[None, :] * (xi[:, None] - a),
                                 0.5 * w[None, :] * (b - xi[:, None])], axis=1)
            cs = np.array([f(ys) for f in funcs])
            tloc = (2.0 * ys - (a + b)) / (b - a)
            hit = np.full(tloc.shape, -1, dtype=np.int64)
            den = np.empty(tloc.shape)
            for i in range(order):
                d = tloc[i][:, None] - t[None, :]
                exact = d == 0.0
                rows_hit = exact.any(axis=1)
                hit[i, rows_hit] = exact[rows_hit].argmax(axis=1)
                den[i] = np.sum(wb[None, :] / np.where(exact, 1.0, d), axis=1)
            L = _interp_matrices(den, hit, tloc, t, wb) if order <= MAX_CACHED_INTERP else None
            split.append(_SplitData(rows, xi, ys, cs * ws[None], cs, ws, tloc, den, hit, t, wb, L))
    g = _Grid(quad, tuple(active), c, split)
    cache[key] = g
    return g


# ---------------------------------------------------------------------------
# split-row assembly
# ---------------------------------------------------------------------------


@njit
def _split_rows_nb(G, den, hit, tloc, tnodes, wb, out):
    # G: (B, n, 2n) kernel times coefficient times sub-weight
    # out: (B, n, n) barycentric contraction of G over the sub-points
    B = G.shape[0]
    n = G.shape[1]
    m2 = G.shape[2]
    f = np.empty(n)
    for i in range(n):
        for m in range(m2):
            h = hit[i, m]
            if h >= 0:
                for b in range(B):
                    out[b, i, h] += G[b, i, m]
                continue
            inv = 1.0 / den[i, m]
            tm = tloc[i, m]
            for j in range(n):
                f[j] = wb[j] * inv / (tm - tnodes[j])
            for b in range(B):
                g = G[b, i, m]
                for j in range(n):
                    out[b, i, j] += g * f[j]


def _interp_matrix(i, den, hit, tloc, tnodes, wb):
    d = tloc[i][:, None] - tnodes[None, :]
    d[hit[i] >= 0] = 1.0
    L = wb[None, :] / d / den[i][:, None]
    rows = np.nonzero(hit[i] >= 0)[0]
    if rows.size:
        L[rows] = 0.0
        L[rows, hit[i][rows]] = 1.0
    return L


def _interp_matrices(den, hit, tloc, tnodes, wb):
    """Barycentric interpolation from the panel nodes to each row's sub-points."""
    return np.stack([_interp_matrix(i, den, hit, tloc, tnodes, wb) for i in range(tloc.shape[0])])


def _split_rows_cached(G, L):
    # one batched real matmul: (n, 2B, 2n) @ (n, 2n, n)
    B = G.shape[0]
    Gt = G.transpose(1, 0, 2)
    o = np.matmul(np.concatenate([Gt.real, Gt.imag], axis=1), L)
    return (o[:, :B] + 1j * o[:, B:]).transpose(1, 0, 2)


def _split_rows_np(G, den, hit, tloc, tnodes, wb):
    B, n, m2 = G.shape
    out = np.zeros((B, n, n), dtype=complex)
    for i in range(n):
        out[:, i, :] = G[:, i, :] @ _interp_matrix(i, den, hit, tloc, tnodes, wb)
    return out


def _select(Kall, active, offset=0):
    """Restrict a kernel stack to the active block components."""
    nb = len(active)
    shape = Kall.shape[1:]
    E = np.empty((nb, nb) + shape, dtype=complex)
    for a, r in enumerate(active):
        for b, s in enumerate(active):
            E[a, b] = Kall[offset + 2 * r + s]
    return E


@dataclass
class NystromBlock:
    """Discretised ``Y0(k)``.

    Attributes
    ----------
    matrix : ndarray
        Square complex matrix of side ``nb * N`` with ``nb`` active blocks.
    k : complex
    scheme : str
        ``"gauss"`` (symmetric weight splitting) or ``"split"``.
    active : tuple
        Active components; 0 stands for ``p``, 1 for ``q``.
    log_correction : complex
        Added to ``log det(I + matrix)`` to obtain ``log D``.
    trace_exact : complex
        Spectrally accurate ``Tr Y0``.
    kinked, U, V : ndarray or None
        Split scheme only: ``matrix = kinked + U @ V`` where ``U @ V`` is the
        rank-two discretisation of the ``(x + y)`` exponentials.
    """

    matrix: np.ndarray
    k: complex
    scheme: str
    quad: Quadrature
    active: tuple
    log_correction: complex = 0.0
    trace_exact: complex = 0.0
    kinked: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None


def build_Y0(coeffs: CoeffPair, k, quad: Optional[Quadrature] = None, scheme="gauss",
             order: int = 32, backend=None) -> NystromBlock:
    """Nystrom matrix of ``Y0(k) = V2 R0(k) V1``.

    Parameters
    ----------
    coeffs : CoeffPair
    k : complex
        Spectral parameter with ``|k| >= coeffs.k_min``.
    quad : Quadrature, optional
        Only its ``order`` is used; panels follow the coefficient breakpoints.
    scheme : {"gauss", "split"}
    order : int
        Nodes per panel when ``quad`` is not given.
    backend : {"numba", "numpy", None}

    Returns
    -------
    NystromBlock
        For ``"gauss"`` the entries of block ``(r, s)`` are
        ``sqrt(w_i) L_r(x_i) K_rs(x_i, x_j) R_s(x_j) sqrt(w_j)``.
    """
    k = complex(k)
    check_k(k, coeffs.k_min)
    if quad is not None:
        order = quad.order
    g = _grid(coeffs, order)
    x, w = g.quad.nodes, g.quad.weights
    nb = len(g.active)
    N = x.size
    if nb == 0:
        return NystromBlock(np.zeros((0, 0), complex), k, scheme, g.quad, (), 0.0, 0.0)
    cw = g.c * w[None, :]
    if scheme == "gauss":
        E = _select(operator_kernels(x[:, None], x[None, :], k, backend=backend), g.active)
        diag = np.array([np.diagonal(E[a, a]) for a in range(nb)])
        trace_exact = complex(np.sum(diag * cw))
        Lf = np.sign(g.c) * np.sqrt(np.abs(g.c)) * np.sqrt(w)[None, :]
        Rf = np.sqrt(np.abs(g.c)) * np.sqrt(w)[None, :]
        M = np.empty((nb * N, nb * N), dtype=complex)
        for a in range(nb):
            for b in range(nb):
                M[a * N:(a + 1) * N, b * N:(b + 1) * N] = Lf[a][:, None] * E[a, b] * Rf[b][None, :]
        return NystromBlock(M, k, scheme, g.quad, g.active, 0.0, trace_exact)
    if scheme != "split":
        raise InputError(f"unknown scheme {scheme!r}")
    # For |k| gamma >= 1 only the |x - y| exponentials are assembled row by
    # row. The (x + y) part is smooth and exactly rank two, so it is kept as
    # factors: off the first quadrant it is exponentially large and would
    # swamp the rest. For small |k| both parts are O(k^-3) while their sum
    # is O(k^-1), so the full kernel is assembled instead.
    kinked = abs(k) * coeffs.gamma >= 1.0
    Ek = _select(operator_kernels(x[:, None], x[None, :], k, backend=backend, kinked=kinked), g.active)
    Mk = Ek * cw[None, :, None, :]                                       # (nb, nb, N, N)
    diag_k = np.array([np.diagonal(Ek[a, a]) for a in range(nb)])
    tr1 = complex(np.sum(diag_k * cw))
    sig = np.where(np.eye(nb, dtype=bool), 1.0, -1.0)
    tr2 = 0.0 + 0.0j
    use_nb = (backend or ("numba" if NUMBA_ENABLED else "numpy")) == "numba"
    nb2 = nb * nb
    for sd in g.split:
        rows = sd.rows
        n = rows.size
        Es = _select(operator_kernels(sd.xi[:, None], sd.ys, k, backend=backend, kinked=kinked), g.active)
        # exact row integrals of the kernel squared; plain Gauss on other panels
        other = np.ones(N, dtype=bool)
        other[rows] = False
        Eo = Ek[:, :, rows][:, :, :, other]
        inner = (np.einsum("rsim,sim->rsi", Es ** 2, sd.cws)
                 + np.einsum("rsij,sj->rsi", Eo ** 2, cw[:, other]))
        tr2 += np.einsum("rs,rsi,ri,i->", sig, inner, g.c[:, rows], w[rows])
        G = np.ascontiguousarray((Es * sd.cws[None]).reshape(nb2, n, 2 * n))
        if sd.L is not None:
            blk = _split_rows_cached(G, sd.L)
        elif use_nb:
            blk = np.zeros((nb2, n, n), dtype=np.complex128)
            _split_rows_nb(G, sd.den, sd.hit, sd.tloc, sd.tnodes, sd.wb, blk)
        else:
            blk = _split_rows_np(G, sd.den, sd.hit, sd.tloc, sd.tnodes, sd.wb)
        sl = slice(rows[0], rows[-1] + 1)
        Mk[:, :, sl, sl] = blk.reshape(nb, nb, n, n)
    Mk = Mk.transpose(0, 2, 1, 3).reshape(nb * N, nb * N)
    corr = (tr1 - np.trace(Mk)) - 0.5 * (tr2 - np.sum(Mk * Mk.T))
    if not kinked:
        return NystromBlock(Mk, k, scheme, g.quad, g.active, complex(corr), tr1)
    al, be, al4, be4 = separable_factors(k)
    e2 = np.exp(1j * k * x)
    e4 = np.exp(-k * x)
    act = list(g.active)
    U = np.column_stack([np.concatenate([al[r] * e2 for r in act]),
                         np.concatenate([al4[r] * e4 for r in act])])
    V = np.vstack([np.concatenate([be[r] * e2 * cw[a] for a, r in enumerate(act)]),
                   np.concatenate([be4[r] * e4 * cw[a] for a, r in enumerate(act)])])
    trace_exact = tr1 + complex(np.sum(U.T * V))
    return NystromBlock(Mk + U @ V, k, scheme, g.quad, g.active, complex(corr), trace_exact,
                        Mk, U, V)


def phi_vectors(coeffs: CoeffPair, k, order: int, scheme="split"):
    """Discrete ``psi_1(k)`` (row) and ``psi_2(k)`` (column) on the Nystrom grid.

    ``psi_1 f = int phi_1 . V1 f`` and ``psi_2 = V2 phi_2`` with
    ``phi_1 = sqrt(2/pi) (-k cos kx, sin kx)`` and
    ``phi_2 = sqrt(2/pi) (k cos kx, sin kx)``. The weight splitting matches
    :func:`build_Y0` for the same scheme.
    """
    k = complex(k)
    g = _grid(coeffs, order)
    x, w = g.quad.nodes, g.quad.weights
    comps1 = {0: -k * np.cos(k * x), 1: np.sin(k * x)}
    comps2 = {0: k * np.cos(k * x), 1: np.sin(k * x)}
    u, v = [], []
    for a, r in enumerate(g.active):
        c = g.c[a]
        if scheme == "split":
            u.append(SQRT_2_PI * w * c * comps1[r])
            v.append(SQRT_2_PI * comps2[r])
        else:
            u.append(SQRT_2_PI * np.sqrt(w * np.abs(c)) * comps1[r])
            v.append(SQRT_2_PI * np.sign(c) * np.sqrt(w * np.abs(c)) * comps2[r])
    if not u:
        return np.zeros(0, complex), np.zeros(0, complex)
    return np.concatenate(u), np.concatenate(v)


def solve_system(block: NystromBlock, rhs, cond_limit=1e14):
    """Solve ``(I + M) X = rhs`` by LU, guarding against singularity."""
    fac = _Factor(block)
    d = np.abs(np.diagonal(fac.lu[0]))
    if d.size and (np.min(d) == 0.0 or np.max(d) / np.min(d) > cond_limit):
        raise SingularAtResonance(block.k, np.inf if np.min(d) == 0 else np.max(d) / np.min(d))
    return fac.solve(rhs)


def _logdet_lu(A):
    """``log det A`` as a complex number, with its LU factors."""
    lu, piv = sla.lu_factor(A, check_finite=False)
    d = np.diagonal(lu)
    if np.any(d == 0):
        return complex(-np.inf), (lu, piv)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    val = np.sum(np.log(d.astype(complex))) + 1j * np.pi * (swaps % 2)
    return complex(val), (lu, piv)


# ---------------------------------------------------------------------------
# determinant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetOptions:
    """Options of :func:`det_D`.

    Attributes
    ----------
    start_order, max_order : int
        Nodes per panel for the first and the largest attempt.
    tol : float
        Stop once ``|D_N - D_{N/2}| < tol (1 + |D_N|)``, or once a doubling
        fails to reduce a difference already at the rounding floor
        ``1e4 eps max(1, (|k| gamma)**-3) (1 + |D_N|)``; ``err_est`` then
        exceeds ``tol``.
    scheme : {"split", "gauss"}
    route : {"auto", "direct"}
        ``"direct"`` factorises ``I + Y0(k)`` at ``k`` itself.
    on_fail : {"raise", "return"}
    backend : {"numba", "numpy", None}
    """

    start_order: int = 32
    tol: float = 1e-10
    max_order: int = 512
    scheme: str = "split"
    route: str = "auto"
    on_fail: str = "raise"
    backend: Optional[str] = None


@dataclass(frozen=True)
class DetSample:
    """One evaluation of ``D(k)``.

    Attributes
    ----------
    k : complex
    value : complex
        ``D(k)``; may overflow to ``inf`` where ``log_value`` stays finite.
    order : int
        Nodes per panel of the accepted value.
    err_est : float
        ``|D_N - D_{N/2}|``.
    log_value : complex
        ``log D(k)`` on an arbitrary branch.
    route : str
        How the value was obtained.
    converged : bool
    """

    k: complex
    value: complex
    order: int
    err_est: float
    log_value: complex
    route: str = "direct"
    converged: bool = True

    @property
    def rel_err(self) -> float:
        return self.err_est / max(abs(self.value), 1e-300) if np.isfinite(abs(self.value)) else 0.0


class _Factor:
    """LU of ``I + M`` with ``log det``, using the rank-two split when available."""

    def __init__(self, blk: NystromBlock):
        self.blk = blk
        if blk.kinked is None:
            self.logdet, self.lu = _logdet_lu(np.eye(blk.matrix.shape[0]) + blk.matrix)
            self.cap = None
            return
        self.logdet, self.lu = _logdet_lu(np.eye(blk.kinked.shape[0]) + blk.kinked)
        self.AU = sla.lu_solve(self.lu, blk.U, check_finite=False)
        self.cap = np.eye(2) + blk.V @ self.AU
        dc = self.cap[0, 0] * self.cap[1, 1] - self.cap[0, 1] * self.cap[1, 0]
        self.logdet += cmath.log(dc) if dc != 0 else complex(-np.inf)

    def solve(self, rhs):
        y = sla.lu_solve(self.lu, rhs, check_finite=False)
        if self.cap is None:
            return y
        # Woodbury for (A + U V)^{-1}
        return y - self.AU @ np.linalg.solve(self.cap, self.blk.V @ y)


def _log_direct(coeffs, k, order, scheme, backend):
    blk = build_Y0(coeffs, k, order=order, scheme=scheme, backend=backend)
    if blk.matrix.size == 0:
        return 0j, blk, None
    f = _Factor(blk)
    return f.logdet + blk.log_correction, blk, f


def _contract(coeffs, k1, order, scheme, backend, kind):
    """``log D(k1)`` together with ``log S(k1)`` or ``log det Omega(k1)``."""
    ld, blk, fac = _log_direct(coeffs, k1, order, scheme, backend)
    if fac is None:
        return ld, 0j
    ck = np.pi / (2j * k1 ** 3)
    u1, v1 = phi_vectors(coeffs, k1, order, scheme)
    if kind == "S":
        A = u1 @ fac.solve(v1)
        S = 1.0 + ck * A
        return ld, (cmath.log(S) if S != 0 else complex(-np.inf))
    ui, vi = phi_vectors(coeffs, 1j * k1, order, scheme)
    U = np.vstack([ui, u1])
    V = np.column_stack([1j * vi, v1])
    W = U @ fac.solve(V)
    Om = np.eye(2) + ck * W
    dO = Om[0, 0] * Om[1, 1] - Om[0, 1] * Om[1, 0]
    return ld, (cmath.log(dO) if dO != 0 else complex(-np.inf))


def log_det(coeffs: CoeffPair, k, order: int, scheme="split", route="auto", backend=None):
    """``log D(k)`` at a fixed number of nodes per panel.

    Returns
    -------
    (complex, str)
        Log-value on an arbitrary branch and the route used.
    """
    k = complex(k)
    check_k(k, coeffs.k_min)
    if coeffs.is_free:
        return 0j, "free"
    quad_k = quadrant(k)
    if route == "direct" or quad_k == 1:
        return _log_direct(coeffs, k, order, scheme, backend)[0], "direct"
    if route != "auto":
        raise InputError(f"unknown route {route!r}")
    if quad_k == 2:
        a, b = _contract(coeffs, -1j * k, order, scheme, backend, "S")
        return a + b, "S"
    if quad_k == 3:
        a, b = _contract(coeffs, -k, order, scheme, backend, "Omega")
        return a + b, "Omega"
    # fourth quadrant: D(k) = conj D(i conj k), and i conj k lies in K2
    val, _ = log_det(coeffs, 1j * np.conj(k), order, scheme, "auto", backend)
    return complex(np.conj(val)), "symmetry"


def _exp(z):
    if z.real > 709.0:
        return complex(np.inf, np.inf)
    if z.real == -np.inf:
        return 0j
    return cmath.exp(z)


def _at_roundoff_floor(history, scale, k_gamma):
    """True when an order doubling fails to reduce a difference at rounding level.

    For ``|k| gamma < 1`` the entries have size ``(|k| gamma)**-3`` and
    cancel, which lifts the rounding floor by that factor.
    """
    if len(history) < 2:
        return False
    floor = 1e4 * np.finfo(float).eps / min(1.0, k_gamma) ** 3
    return history[-1] < floor * scale and history[-1] > 0.25 * history[-2]


def det_D(coeffs: CoeffPair, k, opts: DetOptions = DetOptions()) -> DetSample:
    """Fredholm determinant ``D(k) = det(I + Y0(k))`` with order doubling.

    Parameters
    ----------
    coeffs : CoeffPair
    k : complex
        Any point with ``|k| >= coeffs.k_min``.
    opts : DetOptions

    Returns
    -------
    DetSample

    Raises
    ------
    KTooSmall
    NoConvergence
        When ``opts.max_order`` is exceeded and ``opts.on_fail == "raise"``.
    """
    k = complex(k)
    check_k(k, coeffs.k_min)
    if coeffs.is_free:
        return DetSample(k, 1.0 + 0j, 0, 0.0, 0j, "free")
    order = opts.start_order
    prev, route = log_det(coeffs, k, order, opts.scheme, opts.route, opts.backend)
    before, err, history = None, np.inf, []
    while True:
        if 2 * order > opts.max_order:
            if opts.on_fail == "raise":
                raise NoConvergence(k, _exp(prev), None if before is None else _exp(before), order)
            return DetSample(k, _exp(prev), order, float(err), prev, route, False)
        order *= 2
        cur, route = log_det(coeffs, k, order, opts.scheme, opts.route, opts.backend)
        # |D_N - D_{N/2}| from the log-values, without overflow
        if cur.real == -np.inf or prev.real == -np.inf:
            rel = 0.0 if cur.real == prev.real else np.inf
        else:
            rel = abs(1.0 - cmath.exp(prev - cur))
        mag = np.exp(min(cur.real, 709.0)) if cur.real != -np.inf else 0.0
        err = rel * mag if rel < np.inf else np.inf
        before, prev = prev, cur
        history.append(err)
        if err < opts.tol * (1.0 + mag):
            return DetSample(k, _exp(cur), order, float(err), cur, route, True)
        if _at_roundoff_floor(history, 1.0 + mag, abs(k) * coeffs.gamma):
            return DetSample(k, _exp(cur), order, float(err), cur, route, True)


# ---------------------------------------------------------------------------
# closed-form trace and asymptotics
# ---------------------------------------------------------------------------


def moment(f, g, freq, tol=1e-14) -> complex:
    """``int f(x) g(x) dx`` for a coefficient ``f`` and a smooth weight ``g``.

    ``freq`` bounds the oscillation rate of ``g``. Per-piece Gauss-Legendre
    rules are doubled until two successive values agree to ``tol``.
    """
    total = 0j
    for c, a, b in zip(f.pieces, f.breakpoints[:-1], f.breakpoints[1:]):
        if np.all(c.coef == 0):
            continue
        n = int(max(32, c.degree() + 8, 2 * freq * (b - a) + 16))
        prev = None
        while True:
            t, w = gauss_legendre(n)
            x = 0.5 * (b - a) * t + 0.5 * (a + b)
            terms = 0.5 * (b - a) * w * c(x) * g(x)
            val = np.sum(terms)
            scale = max(1.0, float(np.sum(np.abs(terms))))
            if prev is not None and abs(val - prev) <= tol * scale:
                break
            if n > 4096:
                break
            prev, n = val, 2 * n
        total += val
    return complex(total)


def fourier_moment(f, k, tol=1e-14) -> complex:
    """``f^(k) = int exp(2ikx) f(x) dx`` for a coefficient ``f``."""
    k = complex(k)
    return moment(f, lambda x: np.exp(2j * k * x), abs(k), tol)


def trace_Y0_closed(coeffs: CoeffPair, k) -> complex:
    """Closed form of ``Tr Y0(k)``.

    ``-((1+i) p0 + i p^(k) + p^(ik)) / 2k - ((1-i) q0 + i q^(k) - q^(ik)) / 4k^3``
    with ``f^(k) = int exp(2ikx) f(x) dx``.
    """
    k = complex(k)
    check_k(k, coeffs.k_min)
    p, q = coeffs.p, coeffs.q
    out = 0j
    if not p.is_zero:
        out -= ((1 + 1j) * coeffs.p0 + 1j * fourier_moment(p, k) + fourier_moment(p, 1j * k)) / (2 * k)
    if not q.is_zero:
        out -= ((1 - 1j) * coeffs.q0 + 1j * fourier_moment(q, k) - fourier_moment(q, 1j * k)) / (4 * k ** 3)
    return complex(out)


@dataclass(frozen=True)
class AsymptoticReport:
    """Fit of ``k (D(k) - 1) = c0 + c1 / k`` on a first-quadrant arc."""

    radius: float
    fitted: complex
    expected: complex
    deviation: float
    samples: int


def log_det_asymptotic_check(coeffs: CoeffPair, radius: float, samples: int = 24,
                             opts: DetOptions = DetOptions()) -> AsymptoticReport:
    """Compare the large-``k`` coefficient of ``D`` with ``-(1+i) p0 / 2``.

    Parameters
    ----------
    coeffs : CoeffPair
    radius : float
        Arc radius, at least ``20 / gamma``.
    samples : int
        Points on ``{|k| = radius, 0 < arg k < pi/2}``.
    """
    if radius < 20.0 / coeffs.gamma:
        raise InputError("radius must be at least 20/gamma")
    th = (np.arange(samples) + 0.5) / samples * (np.pi / 2)
    ks = radius * np.exp(1j * th)
    y = np.array([kk * (det_D(coeffs, kk, opts).value - 1.0) for kk in ks])
    A = np.column_stack([np.ones_like(ks), 1.0 / ks])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    expected = -(1 + 1j) * coeffs.p0 / 2
    dev = abs(sol[0] - expected) / abs(expected) if expected != 0 else abs(sol[0])
    return AsymptoticReport(float(radius), complex(sol[0]), complex(expected), float(dev), samples)
