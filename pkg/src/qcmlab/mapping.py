"""The kernel map ``f_mu``, its convex potential ``v_mu``, Riesz potentials and Jacobians.

``f_mu(x) = 1/2 int (x-z)/|x-z| + z/|z| dmu(z)`` and
``v_mu(x) = 1/2 int |x-z| - |z| + <x, z>/|z| dmu(z)``, so that ``grad v_mu = f_mu``.

Two quadrature routes are available for ``f_mu`` and ``v_mu``:

* ``"origin"``: one polar integral about 0 of the full integrand, with
  graded panels toward ``x``;
* ``"split"``: the ``x``-part in polar coordinates about ``x`` and the
  ``z``-part about 0.

At ``x = 0`` both integrands vanish identically, so ``f_mu(0) = 0`` exactly.
"""
from dataclasses import dataclass, field
import math
from typing import NamedTuple
import warnings

import numpy as np

from .exceptions import BudgetExceededWarning, DecayViolated
from .geometry import as_point, perimeter_many, tau_many
from .measures import (DistancePower, GaussianWeight, GridMeasure, PowerWeight, Truncated, decay_check,
                       sphere_area)
from .quadrature import Clip, QuadratureConfig, polar_integrate


@dataclass
class KernelMapEval:
    """A measure with its quadrature budget, checked once for the decay condition."""

    mu: object
    cfg: QuadratureConfig = field(default_factory=QuadratureConfig)
    route: str = "origin"
    check_decay: bool = True

    def __post_init__(self):
        if self.route not in ("origin", "split"):
            raise ValueError("route must be 'origin' or 'split'")
        self.decay = decay_check(self.mu, self.cfg) if self.check_decay else None
        if self.decay is not None and self.decay.verdict != "finite":
            raise DecayViolated(f"decay integral is {self.decay.verdict} for {self.mu.label()}")

    @property
    def n(self):
        return self.mu.n


def _warn(est, what):
    if not est.converged:
        warnings.warn(f"{what}: quadrature stopped at error {est.error:.3g}", BudgetExceededWarning,
                      stacklevel=3)


def _point(ev, x):
    x = as_point(x)
    if x.shape[0] != ev.n:
        raise ValueError("point dimension does not match the measure")
    return x


def _specials(mu, c, extra=()):
    pts = [p for p in list(mu.singular_points) + list(extra) if np.linalg.norm(np.asarray(p) - c) > 0.0]
    singular_here = any(np.linalg.norm(np.asarray(p) - c) == 0.0 for p in mu.singular_points)
    return pts, singular_here


def _polar(mu, func, c, cfg, ncomp, extra=(), abs_floor=0.0):
    pts, sing = _specials(mu, c, extra)
    # the integrand varies on the scale of the distance to the extra points
    local = [np.linalg.norm(np.asarray(p) - c) for p in extra]
    scale = min([mu.feature_scale] + [d for d in local if d > 0.0])
    return polar_integrate(func, mu.density, mu.support(), c, cfg, ncomp=ncomp,
                           clip=Clip(boxes=tuple(mu.support_boxes)), special_points=pts,
                           singular_center=sing, scale=scale, abs_floor=abs_floor)


def _safe_unit(V):
    r = np.linalg.norm(V, axis=1)
    out = np.zeros_like(V)
    ok = r > 0.0
    out[ok] = V[ok] / r[ok, None]
    return out


def f_mu(ev, x):
    """``f_mu(x)`` as an n-vector."""
    x = _point(ev, x)
    mu, cfg, n = ev.mu, ev.cfg, ev.n
    if isinstance(mu, GridMeasure):
        val = mu.node_integral(lambda Z: _safe_unit(x - Z) + _safe_unit(Z), n)
        return 0.5 * val
    if not np.any(x):
        return np.zeros(n)
    if ev.route == "origin":
        est = _polar(mu, lambda Z, R, U: _safe_unit(x - Z) + U, np.zeros(n), cfg, n, extra=[x])
        _warn(est, "f_mu")
        return 0.5 * est.value
    a = _polar(mu, lambda Z, R, U: -U, x, cfg, n, extra=[np.zeros(n)])
    b = _polar(mu, lambda Z, R, U: U, np.zeros(n), cfg, n, extra=[x])
    _warn(a, "f_mu")
    _warn(b, "f_mu")
    return 0.5 * (a.value + b.value)


def v_mu(ev, x, normalized=True):
    """The convex potential of ``f_mu`` at ``x``.

    The integral ``int |x-z| - |z| + <x,z>/|z| dmu`` has gradient ``2 f_mu``
    because ``f_mu`` carries a factor 1/2; with ``normalized`` (the default)
    half the integral is returned so that ``grad v_mu = f_mu``.
    """
    x = _point(ev, x)
    return (0.5 if normalized else 1.0) * _v_integral(ev, x)


def _v_integral(ev, x):
    mu, cfg, n = ev.mu, ev.cfg, ev.n
    if isinstance(mu, GridMeasure):
        def g(Z):
            r = np.linalg.norm(Z, axis=1)
            return np.linalg.norm(x - Z, axis=1) - r + _safe_unit(Z) @ x
        return float(mu.node_integral(g)[0])
    if not np.any(x):
        return 0.0
    if ev.route == "origin":
        def full(Z, R, U):
            return (np.linalg.norm(x - Z, axis=1) - R + U @ x)[:, None]
        est = _polar(mu, full, np.zeros(n), cfg, 1, extra=[x])
        _warn(est, "v_mu")
        return est.scalar
    a = _polar(mu, lambda Z, R, U: R[:, None], x, cfg, 1, extra=[np.zeros(n)])
    b = _polar(mu, lambda Z, R, U: (-R + U @ x)[:, None], np.zeros(n), cfg, 1, extra=[x])
    _warn(a, "v_mu")
    _warn(b, "v_mu")
    return a.scalar + b.scalar


# -- Riesz potentials -----------------------------------------------------------

def _riesz_tail(mu, gamma, R):
    """Bound on ``int_{|z|>R} |x-z|^{gamma-n} dmu`` (leading order in ``|x|/R``)."""
    if isinstance(mu, Truncated):
        return _riesz_tail(mu.inner, gamma, max(R, mu.radius))
    if isinstance(mu, PowerWeight):
        e = gamma + mu.p
        return math.inf if e >= 0.0 else sphere_area(mu.n) * R ** e / -e
    if isinstance(mu, GaussianWeight):
        return 0.0 if R > 40.0 * mu.sigma else math.inf
    if isinstance(mu, GridMeasure):
        return 0.0
    if mu.support().bounded:
        return 0.0
    return math.inf


def _local_model(mu, x):
    """``(c, e)`` with density ``~ c |z - x|^e`` as ``z -> x``."""
    if isinstance(mu, Truncated):
        if np.linalg.norm(x) < mu.radius:
            return 0.0, 0.0
        return _local_model(mu.inner, x)
    if isinstance(mu, PowerWeight) and not np.any(x):
        return 1.0, mu.p
    if isinstance(mu, DistancePower) and mu.distance(x)[0] == 0.0:
        return 1.0, mu.p
    return float(mu.density(np.asarray(x, float).reshape(1, -1))[0]), 0.0


def riesz_potential(mu, gamma, x, cfg=None):
    """``I_gamma mu(x) = int |x-z|^{gamma-n} dmu(z)``; ``inf`` when the tail diverges.

    The ball ``|z - x| < r0`` with ``r0 = 1e-9 * feature_scale`` is added in
    closed form from the local behaviour of the density at ``x``.
    """
    cfg = cfg or QuadratureConfig()
    x = as_point(x)
    n = mu.n
    if not 0.0 < gamma < n:
        raise ValueError("need 0 < gamma < n")
    if isinstance(mu, GridMeasure):
        def g(Z):
            d = np.linalg.norm(Z - x, axis=1)
            with np.errstate(divide="ignore"):
                return np.where(d > 0.0, d ** (gamma - n), 0.0)
        return float(mu.node_integral(g)[0])
    tail = 0.0 if mu.support().bounded else _riesz_tail(mu, gamma, cfg.truncation_radius)
    if math.isinf(tail):
        return math.inf
    r0 = 1e-9 * mu.feature_scale
    c, e = _local_model(mu, x)
    if gamma + e <= 0.0 and c > 0.0:
        return math.inf
    inner = c * sphere_area(n) * r0 ** (gamma + e) / (gamma + e) if c > 0.0 else 0.0
    pts, _ = _specials(mu, x)
    est = polar_integrate(lambda Z, R, U: (R ** (gamma - n))[:, None], mu.density, mu.support(), x, cfg,
                          clip=Clip(r_min=r0, boxes=tuple(mu.support_boxes)), special_points=pts,
                          singular_center=True, scale=mu.feature_scale)
    _warn(est, "riesz_potential")
    return est.scalar + inner + tail


# -- Jacobians -----------------------------------------------------------------

def jacobian_matrix(ev, x, h=None):
    """Central-difference matrix ``J[:, j] = (f(x + h e_j) - f(x - h e_j)) / 2h``."""
    x = _point(ev, x)
    h = 1e-4 * ev.mu.feature_scale if h is None else float(h)
    if not h > 0.0:
        raise ValueError("h must be positive")
    J = np.empty((ev.n, ev.n))
    for j in range(ev.n):
        e = np.zeros(ev.n)
        e[j] = h
        J[:, j] = (f_mu(ev, x + e) - f_mu(ev, x - e)) / (2.0 * h)
    return J


def jacobian_norm_estimate(ev, x, h=None):
    """Operator 2-norm of the central-difference Jacobian of ``f_mu`` at ``x``."""
    return float(np.linalg.norm(jacobian_matrix(ev, x, h), 2))


def jacobian_is_stable(ev, x, h=None, rel=0.1):
    """``(stable, norm_h, norm_h/2)``: the two step sizes agree within ``rel``."""
    h = 1e-4 * ev.mu.feature_scale if h is None else float(h)
    a = jacobian_norm_estimate(ev, x, h)
    b = jacobian_norm_estimate(ev, x, h / 2.0)
    return abs(a - b) <= rel * max(a, b), a, b


def jacobian_bounds(riesz_value, doubling_constant):
    """``(I/(12 C^3), pi I)`` for ``I = I_{n-1} mu(x)``."""
    return riesz_value / (12.0 * doubling_constant ** 3), math.pi * riesz_value


# -- kappa condition -----------------------------------------------------------

class PairIntegrals(NamedTuple):
    tau_over_l: float
    tau2_over_l: float
    inv_l: float
    converged: bool


def pair_integrals(mu, x, y, cfg=None):
    """``(int tau/l, int tau^2/l, int 1/l)`` for the pair ``x, y``."""
    cfg = cfg or QuadratureConfig()
    x, y = as_point(x), as_point(y)
    if isinstance(mu, GridMeasure):
        def g(Z):
            t = tau_many(x, y, Z)
            il = 1.0 / perimeter_many(x, y, Z)
            return np.stack([t * il, t * t * il, il], axis=1)
        v = mu.node_integral(g, 3)
        return PairIntegrals(float(v[0]), float(v[1]), float(v[2]), True)
    mid = 0.5 * (x + y)

    def g(Z, R, U):
        t = tau_many(x, y, Z)
        il = 1.0 / perimeter_many(x, y, Z)
        return np.stack([t * il, t * t * il, il], axis=1)

    axis = (y - x) / np.linalg.norm(y - x)
    extra = [(axis, 0.0)]
    if mu.n == 2:
        extra.append((np.array([-axis[1], axis[0]]), 0.0))
    pts, sing = _specials(mu, mid, extra=[x, y])
    est = polar_integrate(g, mu.density, mu.support(), mid, cfg, ncomp=3,
                          clip=Clip(boxes=tuple(mu.support_boxes)), special_points=pts,
                          singular_center=sing, scale=min(mu.feature_scale, float(np.linalg.norm(y - x))),
                          extra_specials=extra)
    _warn(est, "pair_integrals")
    return PairIntegrals(float(est.value[0]), float(est.value[1]), float(est.value[2]), est.converged)


def default_directions(n, count=8):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        a = 2.0 * math.pi * np.arange(count) / count + 0.1
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    d = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1],
                  [-1, 1, 1], [-1, 1, -1], [-1, -1, 1], [-1, -1, -1]], float)[:count]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


class KappaEstimate(NamedTuple):
    kappa_hat: float
    c_hat: float
    rows: list


def kappa_condition_estimate(mu, x, y_seq=None, cfg=None, j_range=range(3, 13), tail_from=8):
    """``(kappa_hat, c_hat)``: minima of ``int tau^2/l / int tau/l`` and ``int tau^2/l / int 1/l``.

    Without ``y_seq`` the pairs are ``y = x + 2^-j u`` over ``j_range`` and the
    default directions, and minima are taken over ``j >= tail_from``.
    """
    cfg = cfg or QuadratureConfig()
    x = as_point(x)
    rows = []
    if y_seq is None:
        pairs = [(j, x + 2.0 ** -j * u) for j in j_range for u in default_directions(mu.n)]
    else:
        pairs = [(None, as_point(y)) for y in y_seq]
    for j, y in pairs:
        I = pair_integrals(mu, x, y, cfg)
        ratio = I.tau2_over_l / I.tau_over_l if I.tau_over_l > 0.0 else math.nan
        c = I.tau2_over_l / I.inv_l if I.inv_l > 0.0 else math.nan
        rows.append({"j": j, "y": y, "distance": float(np.linalg.norm(y - x)), "kappa": ratio, "c": c,
                     "tau_over_l": I.tau_over_l, "tau2_over_l": I.tau2_over_l, "inv_l": I.inv_l})
    use = [r for r in rows if r["j"] is None or r["j"] >= tail_from] or rows
    kappa = float(np.nanmin([r["kappa"] for r in use]))
    c_hat = float(np.nanmin([r["c"] for r in use]))
    return KappaEstimate(kappa, c_hat, rows)


def delta_prediction(kappa_hat):
    """The monotonicity constant ``kappa / (2 pi^2)``."""
    return kappa_hat / (2.0 * math.pi ** 2)


class DifferenceQuotient(NamedTuple):
    distance: float
    image_distance: float
    inner: float
    tau_over_l: float
    tau2_over_l: float


def difference_quotient(ev, x, y):
    """Ingredients of the bounds ``|f(x)-f(y)| <= 2|x-y| int tau/l`` and
    ``|x-y|^2 int tau^2/l / pi^2 <= <f(x)-f(y), x-y> <= 2 |x-y|^2 int tau^2/l``."""
    x, y = _point(ev, x), _point(ev, y)
    fx, fy = f_mu(ev, x), f_mu(ev, y)
    I = pair_integrals(ev.mu, x, y, ev.cfg)
    return DifferenceQuotient(float(np.linalg.norm(x - y)), float(np.linalg.norm(fx - fy)),
                              float(np.dot(fx - fy, x - y)), I.tau_over_l, I.tau2_over_l)
