"""Lacunary Riesz products on R^n and the quantities used to show they are singular.

Frequencies are ``w^k = 4^{nk^2} (4^k, 4^{2k}, ..., 4^{nk})``.  Every component
is a power of four, so ``x_i * w^k_i`` is an exact double and the phase
``<x, w^k>`` is reduced modulo ``2 pi`` exactly (see :mod:`.ddarith`) before the
cosine is taken.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import itertools
import math
from typing import NamedTuple
import warnings

import numpy as np
from scipy import integrate, special

from .ddarith import (dd_add, dd_mul, frac_over_2pi, reduced_phase_from_frac, sum_turns,
                      two_sum, INV_TWO_PI_HI, INV_TWO_PI_LO)
from .exceptions import BudgetExceededWarning, PrecisionLoss
from .quadrature import QuadratureConfig, gauss_legendre
from .sampling import trial_rng

MAX_POINTWISE_M = {1: 8, 2: 5, 3: 4}


def _check_nk(n, k):
    if not 1 <= n <= 3:
        raise ValueError("n must be 1, 2 or 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    if n * k * k + n * k > 500:
        raise PrecisionLoss("frequency exponent exceeds the double range")


def exponents(n, k):
    """Base-4 exponents of the components of ``w^k``."""
    return [n * k * k + i * k for i in range(1, n + 1)]


@dataclass(frozen=True)
class FrequencyVector:
    k: int
    n: int

    def __post_init__(self):
        _check_nk(self.n, self.k)

    @property
    def base4_exponents(self):
        return exponents(self.n, self.k)

    @property
    def components(self):
        """Exact integer components."""
        return [4 ** a for a in self.base4_exponents]

    def as_float(self):
        return np.array([4.0 ** a for a in self.base4_exponents])

    @property
    def norm(self):
        return math.sqrt(sum(float(c) ** 2 for c in self.components))

    @property
    def lipschitz(self):
        return 4.0 ** (self.n * (self.k ** 2 + self.k))


def lipschitz_constant(n, m):
    return 4.0 ** (n * (m * m + m))


def phase_turns(n, k, X):
    """``<x, w^k> / (2 pi) mod 1`` as a double-double pair, for rows of ``X``."""
    _check_nk(n, k)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != n:
        raise ValueError("points must have n coordinates")
    terms = [frac_over_2pi(X[:, i] * 4.0 ** a) for i, a in enumerate(exponents(n, k))]
    return sum_turns(terms)


def _cos_turns(hi, lo):
    return np.cos(reduced_phase_from_frac(hi, lo))


def lambda_k_many(n, k, X):
    return 1.0 + 0.5 * _cos_turns(*phase_turns(n, k, X))


def lambda_k(n, k, x):
    """``1 + cos(<x, w^k>) / 2``."""
    return float(lambda_k_many(n, k, np.asarray(x, float).reshape(1, -1))[0])


def Lambda_m_many(n, m, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.ones(X.shape[0])
    for k in range(1, m + 1):
        out *= lambda_k_many(n, k, X)
    return out


def Lambda_m(n, m, x):
    """``prod_{k<=m} lambda_k(x)``; 1 for ``m = 0``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return float(Lambda_m_many(n, m, np.asarray(x, float).reshape(1, -1))[0])


# -- trigonometric expansion ---------------------------------------------------

@lru_cache(maxsize=None)
def _expansion(n, m):
    """Signs ``s in {-1,0,1}^m``, coefficients and float frequencies of ``Lambda_m``.

    ``Lambda_m(x) = sum_s c_s cos(<x, sum_k s_k w^k>)`` with ``c_s = 4^-#{s_k != 0}``.
    """
    signs = np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=float).reshape(-1, m)
    coef = 0.25 ** np.count_nonzero(signs, axis=1)
    W = np.array([[4.0 ** a for a in exponents(n, k)] for k in range(1, m + 1)]).reshape(m, n)
    omega = signs @ W
    return signs, coef, omega


def _combo_turns(signs, per_k):
    """Turns of ``<x, omega_s>`` for each sign pattern, from the per-``k`` turns."""
    hi = np.zeros(signs.shape[0])
    lo = np.zeros(signs.shape[0])
    for k, (th, tl) in enumerate(per_k):
        s = signs[:, k]
        hi, lo = dd_add(hi, lo, s * th, s * tl)
        fl = np.floor(hi)
        hi, lo = two_sum(hi - fl, lo)
    return hi, lo


def _per_k_turns(n, m, x):
    x = np.asarray(x, float).reshape(1, -1)
    out = []
    for k in range(1, m + 1):
        h, l = phase_turns(n, k, x)
        out.append((float(h[0]), float(l[0])))
    return out


def riesz_box_integral(n, m, center, half, rot=None):
    """Exact ``int_box Lambda_m`` via the cosine expansion and sinc factors."""
    center = np.asarray(center, float)
    half = np.asarray(half, float)
    rot = np.eye(n) if rot is None else np.asarray(rot, float)
    if m == 0:
        return float(np.prod(2.0 * half))
    signs, coef, omega = _expansion(n, m)
    hi, lo = _combo_turns(signs, _per_k_turns(n, m, center))
    a = omega @ rot
    factors = np.prod(2.0 * half * np.sinc(half * a / math.pi), axis=1)
    return float(np.sum(coef * _cos_turns(hi, lo) * factors))


def _ball_transform(n, rho, t):
    t = np.asarray(t, float)
    safe = np.where(t > 0.0, t, 1.0)
    if n == 1:
        return 2.0 * rho * np.sinc(t / math.pi)
    if n == 2:
        return np.where(t > 0.0, 2.0 * math.pi * rho ** 2 * special.j1(safe) / safe, math.pi * rho ** 2)
    return np.where(t > 0.0, 4.0 * math.pi * rho ** 3 * special.spherical_jn(1, safe) / safe,
                    4.0 * math.pi * rho ** 3 / 3.0)


def riesz_ball_integral(n, m, center, radius):
    """Exact ``int_{B(center, radius)} Lambda_m`` via Bessel transforms of the expansion."""
    if m == 0:
        return float(_ball_transform(n, radius, 0.0))
    signs, coef, omega = _expansion(n, m)
    hi, lo = _combo_turns(signs, _per_k_turns(n, m, center))
    t = radius * np.linalg.norm(omega, axis=1)
    return float(np.sum(coef * _cos_turns(hi, lo) * _ball_transform(n, radius, t)))


def _beta_dd(n, m, v):
    """``<v, w^k>`` for k = 1..m as double-double pairs (products are exact)."""
    v = np.asarray(v, float)
    out = []
    for k in range(1, m + 1):
        hi, lo = np.zeros(1), np.zeros(1)
        for i, a in enumerate(exponents(n, k)):
            hi, lo = dd_add(hi, lo, np.array([v[i] * 4.0 ** a]), np.zeros(1))
        out.append((float(hi[0]), float(lo[0])))
    return out


def riesz_segment_mean(n, m, x0, v):
    """Exact ``int_0^1 Lambda_m(x0 + t v) dt`` from the cosine expansion."""
    if m == 0:
        return 1.0
    signs, coef, _ = _expansion(n, m)
    tx = _per_k_turns(n, m, x0)
    tv = _per_k_turns(n, m, 0.5 * np.asarray(v, float))
    mid = [dd_add(np.array([a[0]]), np.array([a[1]]), np.array([b[0]]), np.array([b[1]])) for a, b in zip(tx, tv)]
    hi, lo = _combo_turns(signs, [(float(h[0]), float(l[0])) for h, l in mid])
    beta = np.array([b[0] for b in _beta_dd(n, m, v)])
    half_beta = 0.5 * (signs @ beta)
    return float(np.sum(coef * _cos_turns(hi, lo) * np.sinc(half_beta / math.pi)))


# -- normalization over the period cell --------------------------------------

@dataclass
class NormalizationResult:
    integral: float
    target: float
    deviation: float
    nodes_per_axis: int


def _alias_free(n, m, N):
    signs, _, _ = _expansion(n, m)
    W = [[4 ** a for a in exponents(n, k)] for k in range(1, m + 1)]
    for s in signs:
        if not np.any(s):
            continue
        comps = [sum(int(s[k]) * W[k][i] for k in range(m)) for i in range(n)]
        if all(c % N == 0 for c in comps):
            return False
    return True


def mass_normalization(n, m, cfg=None, nodes_per_axis=None, max_nodes=4_000_000):
    """Periodic trapezoid rule for ``int_Q Lambda_m`` on ``Q = [-pi, pi]^n``.

    The rule with ``N`` nodes per axis integrates ``cos<x, omega>`` exactly
    unless every component of ``omega`` is a multiple of ``N``; the smallest
    ``N >= 8`` free of such aliases among the frequencies of ``Lambda_m`` is used.
    """
    cfg = cfg or QuadratureConfig()
    if m < 0:
        raise ValueError("m must be >= 0")
    target = (2.0 * math.pi) ** n
    if m == 0:
        return NormalizationResult(target, target, 0.0, 1)
    N = nodes_per_axis
    if N is None:
        N = 8
        while not _alias_free(n, m, N):
            N += 1
    if N ** n > max_nodes:
        warnings.warn("normalization grid exceeds the node budget", BudgetExceededWarning, stacklevel=2)
        return NormalizationResult(math.nan, target, math.nan, N)
    g = -math.pi + 2.0 * math.pi * np.arange(N) / N
    X = np.stack([a.ravel() for a in np.meshgrid(*([g] * n), indexing="ij")], axis=1)
    total = 0.0
    for chunk in np.array_split(X, max(1, X.shape[0] // 200_000)):
        total += float(Lambda_m_many(n, m, chunk).sum())
    value = total * (2.0 * math.pi / N) ** n
    return NormalizationResult(value, target, abs(value - target) / target, N)


def mass_normalization_check(n, m, cfg=None):
    """Relative deviation of ``int_Q Lambda_m`` from ``(2 pi)^n``."""
    return mass_normalization(n, m, cfg).deviation


# -- line integrals ------------------------------------------------------------

def K_of_r(n, r):
    """``max{k >= 1: 4^{n k^2} <= 1/r}``, or 0."""
    if not r > 0.0:
        raise ValueError("r must be positive")
    K = 0
    while r * 4.0 ** (n * (K + 1) ** 2) <= 1.0:
        K += 1
    return K


class Comparability(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    K: int
    lhs_expansion: float
    converged: bool


def _frac_dd(hi, lo):
    fl = np.floor(hi)
    hi, lo = two_sum(hi - fl, lo)
    fl = np.floor(hi + lo)
    return two_sum(hi - fl, lo)


def _segment_turns(beta, turns0, t):
    """Fractional turns of ``<x0, w> + t <v, w>`` in double-double."""
    (bh, bl), (th, tl) = beta, turns0
    ch, cl = dd_mul(bh, bl, INV_TWO_PI_HI, INV_TWO_PI_LO)
    ph, pl = dd_mul(np.full_like(t, ch), np.full_like(t, cl), t, np.zeros_like(t))
    ph, pl = _frac_dd(ph, pl)
    ph, pl = dd_add(ph, pl, np.full_like(t, th), np.full_like(t, tl))
    return _frac_dd(ph, pl)


def segment_mean_quadrature(n, m, x0, v, cfg=None, order=10, max_nodes=4_000_000):
    """Filon value of ``int_0^1 Lambda_m(x0 + t v) dt``.

    The slow factors ``k < m`` are sampled at Gauss-Legendre nodes on panels
    spanning at most a quarter period of the fastest of them and expanded in
    Legendre polynomials per panel; the fastest factor ``k = m`` enters through
    the exact moments ``int_{-1}^1 P_j(s) e^{i w s} ds = 2 i^j j_j(w)``.  Phases
    are tracked in double-double.  The panel count is doubled until two levels agree.
    """
    cfg = cfg or QuadratureConfig()
    if m == 0:
        return 1.0, True
    tx = _per_k_turns(n, m, np.asarray(x0, float))
    betas = _beta_dd(n, m, np.asarray(v, float))
    if max(abs(b[0]) for b in betas) > 2.0 ** 90:
        raise PrecisionLoss("segment phase too large for double-double tracking")
    slow = max((abs(b[0]) for b in betas[:-1]), default=0.0)
    panels = int(math.ceil(4.0 * slow / math.pi)) + cfg.base_subdivision
    xg, wg = gauss_legendre(order)
    xg, wg = 2.0 * xg - 1.0, 2.0 * wg
    j = np.arange(order)
    # discrete Legendre transform on the nodes, exact up to degree order - 1
    leg = np.array([special.eval_legendre(k, xg) for k in j]) * wg[None, :] * ((2 * j + 1) / 2.0)[:, None]
    beta_fast = betas[-1][0] + betas[-1][1]

    def value(P):
        h = 0.5 / P
        c = (np.arange(P) + 0.5) / P
        t = (c[:, None] + h * xg[None, :]).ravel()
        g = np.ones_like(t)
        for beta, turns0 in zip(betas[:-1], tx[:-1]):
            g *= 1.0 + 0.5 * _cos_turns(*_segment_turns(beta, turns0, t))
        g = g.reshape(P, order)
        plain = h * float(np.sum(g @ wg))
        coef = g @ leg.T
        omega = abs(beta_fast) * h
        moments = 2.0 * (1j ** j) * special.spherical_jn(j, omega)
        if beta_fast < 0.0:
            moments = np.conj(moments)
        ch, cl = _segment_turns(betas[-1], tx[-1], c)
        phase = np.exp(2j * math.pi * ch) * np.exp(2j * math.pi * cl)
        osc = h * np.sum(phase * (coef @ moments))
        return plain + 0.5 * float(osc.real)

    if panels * order > max_nodes:
        warnings.warn("segment quadrature exceeds the node budget", BudgetExceededWarning, stacklevel=2)
        return math.nan, False
    prev = value(panels)
    for _ in range(cfg.max_depth):
        panels *= 2
        if panels * order > max_nodes:
            break
        cur = value(panels)
        if abs(cur - prev) <= cfg.rel_tol * abs(cur):
            return cur, True
        prev = cur
    warnings.warn("segment quadrature did not converge", BudgetExceededWarning, stacklevel=2)
    return prev, False


def line_integral_comparability(n, m, x0, v, cfg=None):
    """Both sides of the line-integral comparability for the segment ``x0 + t v``.

    ``lhs = int_L Lambda_m ds`` by quadrature, ``rhs = r prod_{k<=K^m} lambda_k(x0)``.
    """
    x0 = np.asarray(x0, float)
    v = np.asarray(v, float)
    r = float(np.linalg.norm(v))
    K = K_of_r(n, r)
    mean, ok = segment_mean_quadrature(n, m, x0, v, cfg)
    lhs = r * mean
    rhs = r * Lambda_m(n, min(K, m), x0)
    return Comparability(lhs, rhs, lhs / rhs, K, r * riesz_segment_mean(n, m, x0, v), ok)


def good_set(n, m, v, K):
    """Indices ``K+2 <= k <= m`` with ``|<v, w^k>| >= <|v|, w^k> / 4`` (exact rationals)."""
    vf = [Fraction(float(c)) for c in v]
    out = []
    for k in range(K + 2, m + 1):
        w = [4 ** a for a in exponents(n, k)]
        s = sum(c * wi for c, wi in zip(vf, w))
        sa = sum(abs(c) * wi for c, wi in zip(vf, w))
        if 4 * abs(s) >= sa:
            out.append(k)
    return out


def direction_is_good(n, k, v):
    """``|<v, w^k>| >= <|v|, w^k> / 4`` for a single ``k`` (exact rationals)."""
    vf = [Fraction(float(c)) for c in v]
    w = [4 ** a for a in exponents(n, k)]
    return 4 * abs(sum(c * wi for c, wi in zip(vf, w))) >= sum(abs(c) * wi for c, wi in zip(vf, w))


# -- the bad set -----------------------------------------------------------------

def bad_set(q, epsilon, v, k_range):
    """``{k: |sum q^{ik} v_i| < (1-eps)/(1+eps) sum q^{ik}|v_i|}`` over ``k_range``.

    Floats are dyadic rationals, so converting every input to ``Fraction``
    decides the strict inequality exactly; there are no ambiguous ties.
    """
    q = Fraction(q)
    eps = Fraction(epsilon)
    if not q > 1:
        raise ValueError("q must exceed 1")
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    vf = [Fraction(c) for c in np.asarray(v, float).ravel()]
    if not any(vf):
        raise ValueError("v must be nonzero")
    factor = (1 - eps) / (1 + eps)
    out = []
    for k in k_range:
        powers = [q ** (i * k) for i in range(1, len(vf) + 1)]
        s = sum(p * c for p, c in zip(powers, vf))
        sa = sum(p * abs(c) for p, c in zip(powers, vf))
        if abs(s) < factor * sa:
            out.append(k)
    return out


def bad_set_bound(q, epsilon, n):
    """The claimed cardinality bound ``n(n-1) log((n-1)/eps) / log q``."""
    if n < 2:
        return 0.0
    return n * (n - 1) * math.log((n - 1) / epsilon) / math.log(q)


def bad_set_bound_integer(q, epsilon, n):
    """Bound from counting integers: an interval of length ``L`` holds at most ``floor(L) + 1``."""
    total = 0
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            length = 2.0 * math.log((n - 1) / epsilon) / ((j - i) * math.log(q))
            total += math.floor(length) + 1
    return total


# -- singularity probe -------------------------------------------------------------

def r_m(n, m):
    return 4.0 ** (-n * (m + 1) ** 2) * math.pi


def log_lambda_mean():
    """``(1/2 pi) int_0^{2 pi} log(1 + cos(t)/2) dt``."""
    val, _ = integrate.quad(lambda t: math.log1p(0.5 * math.cos(t)), 0.0, 2.0 * math.pi, epsabs=1e-14)
    return val / (2.0 * math.pi)


@dataclass
class ProbeRow:
    m: int
    x: np.ndarray
    r_m: float
    normalized_mass: float
    log_Lambda: float


def singularity_probe(n, m_list, x_samples, cfg=None):
    """Rows ``(m, x, r_m, |Q(x, r_m)|^-1 int_{Q(x, r_m)} Lambda_m, log Lambda_m(x))``.

    ``Q(x, r)`` is the cube of half-side ``r``; the cube integral uses the
    exact expansion.  Dividing by the cube volume ``(2r)^n`` rather than
    ``r^n`` makes the normalized mass approximate ``Lambda_m(x)`` itself.
    """
    rows = []
    X = np.atleast_2d(np.asarray(x_samples, float))
    for m in m_list:
        if m > MAX_POINTWISE_M.get(n, 0):
            raise ValueError("m beyond the desk-scale cap")
        r = r_m(n, m)
        for x in X:
            cube = riesz_box_integral(n, m, x, np.full(n, r))
            rows.append(ProbeRow(m, x, r, cube / (2.0 * r) ** n, math.log(Lambda_m(n, m, x))))
    return rows


def log_lambda_sample_mean(n, m, samples, seed=0):
    """Monte Carlo mean and standard error of ``log Lambda_m`` over uniform ``x`` in ``Q``."""
    rng = trial_rng(seed, m)
    X = rng.uniform(-math.pi, math.pi, size=(samples, n))
    vals = np.log(Lambda_m_many(n, m, X))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.nan
