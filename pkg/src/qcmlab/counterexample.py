"""Staircase curves ``h_k``, the curve Gamma and the neighbourhood-mass blowup probe.

With ``a_k = 4^(n k^2 + k)`` the level-``k`` condition reads
``a_k (t + 4^k s) in 2 pi Z``, so ``h_k(t) = 4^-k (2 pi J_k / a_k - t)`` for the
integer ``J_k = 4 (a_k / a_{k-1}) J_{k-1} + ceil(Y_k)``, ``Y_k = -3 a_k t / (2 pi)``.
``Y_k`` is reduced exactly, so ``J_k`` and the gap ``h_k - h_{k-1}`` are exact.

Gamma and ``Lambda_K`` are both invariant under the shift ``(P, -P)``,
``P = 2 pi / (3 a_1)``: the tube integral is computed on one period and the two
ends of the window only.
"""
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from .ddarith import (INV_TWO_PI_HI, TWO_PI_HI, TWO_PI_LO, dd_add, dd_mul_d, frac_over_2pi, sum_turns,
                      two_prod)
from .exceptions import PrecisionLoss
from .quadrature import QuadratureConfig, gauss_legendre
from .singular import _expansion, lambda_k_many, Lambda_m_many

K_MAX = {2: 3, 3: 2}
_EXACT_INT = 2.0 ** 52


def level_factor(n, k):
    """``a_k = 4^(n k^2 + k)``."""
    return 4.0 ** (n * k * k + k)


def _check(n, k):
    if n < 2:
        raise ValueError("the staircase lives in dimension n >= 2")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > K_MAX.get(n, 1):
        raise PrecisionLoss(f"level {k} exceeds the exact-integer budget for n = {n}")


def _ceil_Y(n, k, t):
    """``(ceil(Y_k), 1 - frac(Y_k) or 0)`` with ``Y_k = -3 a_k t / (2 pi)`` reduced exactly."""
    a = level_factor(n, k)
    p, e = two_prod(-3.0, t)  # -3 t = p + e exactly
    hi, lo = sum_turns([frac_over_2pi(a * p), frac_over_2pi(a * e)])
    approx = a * (p + e) * INV_TWO_PI_HI
    whole = np.round(approx - (hi + lo))
    if np.any(np.abs(whole) > _EXACT_INT):
        raise PrecisionLoss("staircase index beyond exact-integer range")
    frac_zero = (hi == 0.0) & (lo == 0.0)
    ceil = whole + np.where(frac_zero, 0.0, 1.0)
    gap_hi, gap_lo = dd_add(np.ones_like(hi), np.zeros_like(hi), -hi, -lo)
    gap = np.where(frac_zero, 0.0, gap_hi + gap_lo)
    return ceil, gap


def staircase_index(n, k, t):
    """The integers ``J_0 = 0, J_1, ..., J_k`` at each ``t`` (int64, shape ``(k+1, len(t))``)."""
    _check(n, k)
    t = np.atleast_1d(np.asarray(t, float))
    J = np.zeros((k + 1, t.size), dtype=np.int64)
    for level in range(1, k + 1):
        c, _ = _ceil_Y(n, level, t)
        ratio = 4 * int(level_factor(n, level) / level_factor(n, level - 1)) if level > 1 else 0
        J[level] = ratio * J[level - 1] + c.astype(np.int64)
        if np.any(np.abs(J[level]) > _EXACT_INT):
            raise PrecisionLoss("staircase index beyond exact-integer range")
    return J


def _value_from_index(n, k, J, t):
    if k == 0:
        return -t
    a = level_factor(n, k)
    hi, lo = dd_mul_d(np.full(t.shape, TWO_PI_HI), np.full(t.shape, TWO_PI_LO), J.astype(float))
    hi, lo = dd_add(hi / a, lo / a, -t, np.zeros_like(t))
    return (hi + lo) * 4.0 ** -k


def h_k_many(n, k, t):
    t = np.atleast_1d(np.asarray(t, float))
    J = staircase_index(n, k, t)
    return _value_from_index(n, k, J[k], t)


def h_k(n, k, t):
    """``h_k(t)``: the least ``s >= h_{k-1}(t)`` with ``lambda_k(t, s, 0, ...) = 3/2``."""
    return float(h_k_many(n, k, [t])[0])


def staircase_gap(n, k, t):
    """``h_k(t) - h_{k-1}(t) = 2 pi 4^-k / a_k (ceil(Y_k) - Y_k)``, exact up to one rounding."""
    _check(n, k)
    if k < 1:
        raise ValueError("k must be >= 1")
    _, g = _ceil_Y(n, k, np.atleast_1d(np.asarray(t, float)))
    return TWO_PI_HI * 4.0 ** -k / level_factor(n, k) * g


def gap_bound(n, k):
    """``2 pi 4^(-n k^2 - 2k)``."""
    return 2.0 * math.pi * 4.0 ** (-n * k * k - 2 * k)


def onecurve_bound(n, k):
    """``3/2 - 4^(-2 n k)``: lower bound of ``lambda_k`` on the level-``l > k`` staircase."""
    return 1.5 - 4.0 ** (-2 * n * k)


def jump_spacing(n, K):
    """``2 pi / (3 a_K)``: every jump of ``h_K`` sits on this lattice."""
    return 2.0 * math.pi / (3.0 * level_factor(n, K))


def jump_size(n, K, q):
    """Drop of ``h_K`` at the lattice point ``t_q = q * jump_spacing(n, K)``."""
    q = int(q)
    aK = int(level_factor(n, K))
    total = 0.0
    for k in range(1, K + 1):
        if q % (aK // int(level_factor(n, k))) == 0:
            total += 2.0 * math.pi * 4.0 ** -k / level_factor(n, k)
    return total


@dataclass
class Staircase:
    """``h_K`` in dimension ``n`` with its jump lattice."""

    n: int
    K: int

    def __post_init__(self):
        _check(self.n, self.K)

    def __call__(self, t):
        return h_k_many(self.n, self.K, t)

    @property
    def slope(self):
        return -(4.0 ** -self.K)

    def breakpoints(self, t_lo, t_hi):
        """Jump abscissae in ``(t_lo, t_hi)`` with their sizes."""
        if self.K == 0:
            return np.empty(0), np.empty(0)
        d = jump_spacing(self.n, self.K)
        q = np.arange(math.floor(t_lo / d), math.ceil(t_hi / d) + 1)
        t = q * d
        keep = (t > t_lo) & (t < t_hi)
        return t[keep], np.array([jump_size(self.n, self.K, int(v)) for v in q[keep]])

    def pieces(self, t_lo, t_hi):
        """Affine pieces on ``[t_lo, t_hi]``: arrays ``(t0, t1, s0, s1)``, ordered in ``t``."""
        if self.K == 0:
            return np.array([t_lo]), np.array([t_hi]), np.array([-t_lo]), np.array([-t_hi])
        d = jump_spacing(self.n, self.K)
        q0, q1 = math.floor(t_lo / d), math.ceil(t_hi / d)
        edges = np.arange(q0, q1 + 1) * d
        edges = np.clip(edges, t_lo, t_hi)
        a, b = edges[:-1], edges[1:]
        keep = b > a
        a, b = a[keep], b[keep]
        mids = 0.5 * (a + b)
        J = staircase_index(self.n, self.K, mids)[self.K]
        # both endpoints from the index of the piece's midpoint
        s0 = _value_from_index(self.n, self.K, J, a)
        s1 = _value_from_index(self.n, self.K, J, b)
        return a, b, s0, s1


def gamma_polyline(n, K, t_range=(-1.0, 1.0), resolution=None):
    """Vertices of Gamma over ``t_range``: the graph of ``h_K`` with vertical segments at its jumps.

    ``resolution`` optionally caps the t-spacing of vertices along the affine pieces.
    """
    t_lo, t_hi = map(float, t_range)
    if not t_hi > t_lo:
        raise ValueError("empty t_range")
    a, b, s0, s1 = Staircase(n, K).pieces(t_lo, t_hi)
    pts = np.empty((2 * a.size, 2))
    pts[0::2, 0], pts[0::2, 1] = a, s0
    pts[1::2, 0], pts[1::2, 1] = b, s1
    if resolution is not None and resolution > 0.0:
        out = [pts[:1]]
        for i in range(1, pts.shape[0]):
            p, q = pts[i - 1], pts[i]
            m = max(1, int(math.ceil((q[0] - p[0]) / resolution)))
            u = (np.arange(1, m + 1) / m)[:, None]
            out.append(p + u * (q - p))
        pts = np.vstack(out)
    return pts


def arc_lengths(poly):
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def chord_arc_estimate(poly, pairs=2000, seed=0):
    """Max over sampled vertex pairs of (arc length between them) / (chord length)."""
    from .sampling import trial_rng
    L = arc_lengths(poly)
    rng = trial_rng(seed, 0)
    N = poly.shape[0]
    i = rng.integers(0, N, pairs)
    j = rng.integers(0, N, pairs)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    chord = np.linalg.norm(poly[hi] - poly[lo], axis=1)
    ok = chord > 0.0
    ratios = (L[hi] - L[lo])[ok] / chord[ok]
    return float(ratios.max()) if ratios.size else 1.0


class OnCurveResult(NamedTuple):
    min_margin: float
    product_margin: float
    samples: int


def on_curve_check(n, K, t):
    """Margins of ``lambda_k(t, h_l(t)) >= 3/2 - 4^(-2nk)`` (``k < l <= K``) and of
    ``Lambda_K(t, h_K(t)) >= prod_k (3/2 - 4^(-2nk))``; nonnegative margins mean the bounds hold."""
    t = np.atleast_1d(np.asarray(t, float))
    worst = math.inf
    for l in range(2, K + 1):
        X = np.zeros((t.size, n))
        X[:, 0], X[:, 1] = t, h_k_many(n, l, t)
        for k in range(1, l):
            worst = min(worst, float(np.min(lambda_k_many(n, k, X) - onecurve_bound(n, k))))
    X = np.zeros((t.size, n))
    X[:, 0], X[:, 1] = t, h_k_many(n, K, t)
    prod = math.prod(onecurve_bound(n, k) for k in range(1, K + 1))
    pm = float(np.min(Lambda_m_many(n, K, X) - prod))
    return OnCurveResult(worst, pm, t.size)


# -- tube mass -------------------------------------------------------------------------

def _stadium_bounds(t, x0, x1, y0, y1, eps):
    """Upper and lower ends of the section ``{s : dist((t, s), segment) <= eps}``; ``nan`` if empty.

    Arrays broadcast; the segment runs from ``(x0, y0)`` to ``(x1, y1)`` with ``x1 >= x0``.
    """
    dx, dy = x1 - x0, y1 - y0
    length = np.hypot(dx, dy)
    safe = np.where(length > 0.0, length, 1.0)
    nx = np.where(length > 0.0, -dy / safe, 0.0)  # upward normal has ny = dx/len >= 0
    out = []
    for sign in (1.0, -1.0):
        # maximise sign * (y(u) + sign sqrt(eps^2 - (t - x(u))^2)) over u in [0,1]
        tx = t - sign * eps * nx  # abscissa of the tangency point on the segment
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(dx > 0.0, (tx - x0) / np.where(dx > 0.0, dx, 1.0),
                         np.where(sign * dy >= 0.0, 1.0, 0.0))
        # feasible u: |t - x(u)| <= eps
        with np.errstate(divide="ignore", invalid="ignore"):
            ua = np.where(dx > 0.0, (t - eps - x0) / np.where(dx > 0.0, dx, 1.0), 0.0)
            ub = np.where(dx > 0.0, (t + eps - x0) / np.where(dx > 0.0, dx, 1.0), 1.0)
        lo_u, hi_u = np.maximum(ua, 0.0), np.minimum(ub, 1.0)
        u = np.clip(u, lo_u, hi_u)
        px, py = x0 + u * dx, y0 + u * dy
        r2 = eps * eps - (t - px) ** 2
        val = py + sign * np.sqrt(np.maximum(r2, 0.0))
        empty = (lo_u > hi_u) | (r2 < -1e-30 * eps * eps)
        out.append(np.where(empty, np.nan, val))
    return out[0], out[1]


def _section(t, seg, eps, chunk=4096):
    """``(lo, hi)`` of the eps-tube section at each column ``t`` (``nan`` outside the tube)."""
    x0, x1, y0, y1 = seg
    order_lo = x0  # pieces are ordered in t; x ranges are monotone
    lo_out = np.full(t.shape, np.nan)
    hi_out = np.full(t.shape, np.nan)
    first = np.searchsorted(x1, t - eps, side="left")
    last = np.searchsorted(order_lo, t + eps, side="right")
    width = int(np.max(last - first)) if t.size else 0
    if width <= 0:
        return lo_out, hi_out
    for c0 in range(0, t.size, chunk):
        sl = slice(c0, min(c0 + chunk, t.size))
        tt = t[sl]
        idx = first[sl, None] + np.arange(width)[None, :]
        valid = idx < last[sl, None]
        idx = np.minimum(idx, x0.size - 1)
        up, dn = _stadium_bounds(tt[:, None], x0[idx], x1[idx], y0[idx], y1[idx], eps)
        up = np.where(valid, up, np.nan)
        dn = np.where(valid, dn, np.nan)
        with np.errstate(all="ignore"):
            hi_out[sl] = np.where(np.all(np.isnan(up), axis=1), np.nan, np.nanmax(np.where(np.isnan(up), -np.inf, up), axis=1))
            lo_out[sl] = np.where(np.all(np.isnan(dn), axis=1), np.nan, np.nanmin(np.where(np.isnan(dn), np.inf, dn), axis=1))
    return lo_out, hi_out


def _column_integral(n, K, t, lo, hi):
    """``int_lo^hi Lambda_K(t, s) ds`` from the cosine expansion (zero where the section is empty)."""
    width = np.where(np.isnan(lo), 0.0, hi - lo)
    mid = np.where(np.isnan(lo), 0.0, 0.5 * (lo + hi))
    if K == 0:
        return width
    _, coef, omega = _expansion(n, K)
    total = np.zeros_like(t)
    for c, w in zip(coef, omega):
        phase = w[0] * t + w[1] * mid
        total += c * np.cos(phase) * width * np.sinc(w[1] * width / (2.0 * math.pi))
    return total


def _segments(stair, t_lo, t_hi):
    a, b, s0, s1 = stair.pieces(t_lo, t_hi)
    # affine pieces interleaved with the vertical segments joining them
    x0 = np.empty(2 * a.size - 1)
    x1 = np.empty_like(x0)
    y0 = np.empty_like(x0)
    y1 = np.empty_like(x0)
    x0[0::2], x1[0::2], y0[0::2], y1[0::2] = a, b, s0, s1
    x0[1::2], x1[1::2] = b[:-1], a[1:]
    y0[1::2], y1[1::2] = s1[:-1], s0[1:]
    return x0, x1, y0, y1


def _tube_integral(n, K, seg, eps, c_lo, c_hi, panels_per_unit, order=4):
    """Composite Gauss-Legendre in the column variable over ``[c_lo, c_hi]``."""
    if c_hi <= c_lo:
        return 0.0
    x0, x1, _, _ = seg
    brk = np.concatenate([x0, x1, x0 - eps, x0 + eps, x1 - eps, x1 + eps])
    brk = brk[(brk > c_lo) & (brk < c_hi)]
    m = max(1, int(math.ceil((c_hi - c_lo) * panels_per_unit)))
    brk = np.unique(np.concatenate([np.linspace(c_lo, c_hi, m + 1), brk]))
    xg, wg = gauss_legendre(order)
    a, b = brk[:-1], brk[1:]
    h = b - a
    total = 0.0
    step = 200000
    for i in range(0, a.size, step):
        aa, hh = a[i:i + step], h[i:i + step]
        T = (aa[:, None] + hh[:, None] * xg).ravel()
        W = (hh[:, None] * wg).ravel()
        lo, hi = _section(T, seg, eps)
        total += float(np.sum(W * _column_integral(n, K, T, lo, hi)))
    return total


class ProbeRow(NamedTuple):
    K: int
    epsilon: float
    mass_over_epsilon: float
    error: float


def tube_mass(n, K, eps, window=1.0, cfg=None, panels=None):
    """``(int_{N_eps Gamma'} Lambda_K, error)`` for ``Gamma' = Gamma cap {|t| <= window}``.

    Columns whose eps-window stays inside ``(-window, window)`` are periodic with
    period ``P = 2 pi / (3 a_1)``; one period is integrated and replicated.
    The error is the change under doubling of the column panels.
    """
    cfg = cfg or QuadratureConfig()
    stair = Staircase(n, K)

    def run(ppu):
        full = _segments(stair, -window, window) if K == 0 else None
        if K == 0:
            return _tube_integral(n, K, full, eps, -window - eps, window + eps, ppu)
        P = jump_spacing(n, 1)
        inner_lo, inner_hi = -window + eps, window - eps
        periods = int(math.floor((inner_hi - inner_lo) / P)) if inner_hi > inner_lo else 0
        mid_hi = inner_lo + periods * P
        pad = 2.0 * eps + 2.0 * jump_spacing(n, K)
        total = 0.0
        # left end, truncated curve
        seg = _segments(stair, -window, min(window, inner_lo + pad))
        total += _tube_integral(n, K, seg, eps, -window - eps, inner_lo, ppu)
        if periods > 0:
            seg = _segments(stair, max(-window, inner_lo - pad), min(window, inner_lo + P + pad))
            total += periods * _tube_integral(n, K, seg, eps, inner_lo, inner_lo + P, ppu)
        seg = _segments(stair, max(-window, mid_hi - pad), window)
        total += _tube_integral(n, K, seg, eps, mid_hi, window + eps, ppu)
        return total

    base = panels or max(64.0, 8.0 / jump_spacing(n, max(K, 1)))
    coarse = run(base)
    fine = run(2.0 * base)
    return fine, abs(fine - coarse)


def probe_epsilon(n, K):
    """``eps = 4^(-n K^2)``."""
    return 4.0 ** (-n * K * K)


def neighborhood_mass_probe(n=2, K_list=(0, 1, 2), cfg=None):
    """Rows ``(K, eps, mass / eps, error / eps)`` of the eps-tube about ``Gamma'`` weighted by ``Lambda_K``."""
    rows = []
    for K in K_list:
        eps = probe_epsilon(n, K)
        m, err = tube_mass(n, K, eps, cfg=cfg)
        rows.append(ProbeRow(K, eps, m / eps, err / eps))
    return rows
