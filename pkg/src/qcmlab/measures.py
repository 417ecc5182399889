"""Measure families, regions, region masses and the decay/doubling/cone checks."""
from dataclasses import dataclass
from functools import cached_property
import itertools
import math
import warnings

import numpy as np
from scipy import special
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .exceptions import BudgetExceededWarning, NonIntegrable
from .quadrature import Clip, Estimate, QuadratureConfig, Support, box_integrate, polar_integrate
from .reports import FAIL, INCONCLUSIVE, PASS, CheckReport, worse_verdict
from .sampling import log_uniform, random_unit, trial_rng


def sphere_area(n):
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n, r=1.0):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * r ** n


def _vec(x, name="point"):
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.ndim != 1 or not 1 <= a.size <= 3 or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be a finite vector of dimension 1..3")
    return a


def _rotation(rot, n):
    if rot is None:
        return np.eye(n)
    R = np.asarray(rot, dtype=float)
    if R.shape != (n, n) or not np.allclose(R.T @ R, np.eye(n), atol=1e-12, rtol=0.0):
        raise ValueError("rotation must be an n x n orthogonal matrix")
    return R


def _set(obj, **kw):
    for k, v in kw.items():
        object.__setattr__(obj, k, v)


# -- regions ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        _set(self, center=_vec(self.center, "center"), radius=float(self.radius))
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")

    @property
    def n(self):
        return self.center.size

    def contains(self, Z):
        return np.linalg.norm(np.atleast_2d(Z) - self.center, axis=1) <= self.radius

    def bounding_ball(self):
        return self.center, self.radius

    def sample(self, rng):
        u = random_unit(rng, self.n)
        return self.center + self.radius * rng.random() ** (1.0 / self.n) * u


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box ``center + rotation @ s`` with ``|s_i| <= half_lengths[i]``."""

    center: np.ndarray
    half_lengths: np.ndarray
    rotation: np.ndarray = None

    def __post_init__(self):
        c = _vec(self.center, "center")
        h = np.asarray(self.half_lengths, dtype=float).reshape(-1)
        if h.shape != c.shape or not np.all(h > 0.0):
            raise ValueError("half_lengths must be positive, one per axis")
        _set(self, center=c, half_lengths=h, rotation=_rotation(self.rotation, c.size))

    @property
    def n(self):
        return self.center.size

    @property
    def diameter(self):
        return 2.0 * float(np.linalg.norm(self.half_lengths))

    def as_tuple(self):
        return self.center, self.half_lengths, self.rotation

    def corners(self):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.n)))
        return self.center + (signs * self.half_lengths) @ self.rotation.T

    def contains(self, Z):
        local = (np.atleast_2d(Z) - self.center) @ self.rotation
        return np.all(np.abs(local) <= self.half_lengths * (1.0 + 1e-12), axis=1)

    def bounding_ball(self):
        return self.center, self.diameter / 2.0

    def sample(self, rng):
        s = rng.uniform(-1.0, 1.0, self.n) * self.half_lengths
        return self.center + self.rotation @ s


@dataclass(frozen=True, eq=False)
class Shell:
    """``{z: r_in < |z - center| <= r_out}``."""

    center: np.ndarray
    r_in: float
    r_out: float

    def __post_init__(self):
        _set(self, center=_vec(self.center, "center"), r_in=float(self.r_in), r_out=float(self.r_out))
        if not 0.0 <= self.r_in < self.r_out:
            raise ValueError("need 0 <= r_in < r_out")

    @property
    def n(self):
        return self.center.size

    def contains(self, Z):
        d = np.linalg.norm(np.atleast_2d(Z) - self.center, axis=1)
        return (d > self.r_in) & (d <= self.r_out)

    def bounding_ball(self):
        return self.center, self.r_out

    def sample(self, rng):
        return _rejection_sample(self, rng)


@dataclass(frozen=True, eq=False)
class ShellMinusCone:
    """Shell about ``center`` minus the double cone of half-angle ``alpha`` around ``axis_dir``.

    The cone's vertex is ``center``; ``axis_point``, when given, is another
    point of the axis line and must agree with ``axis_dir``.
    """

    center: np.ndarray
    r_in: float
    r_out: float
    axis_dir: np.ndarray
    alpha: float
    axis_point: np.ndarray = None

    def __post_init__(self):
        c = _vec(self.center, "center")
        d = np.asarray(self.axis_dir, dtype=float).reshape(-1)
        if d.shape != c.shape or not np.linalg.norm(d) > 0.0:
            raise ValueError("axis_dir must be a nonzero vector")
        d = d / np.linalg.norm(d)
        if self.axis_point is not None:
            q = np.asarray(self.axis_point, dtype=float) - c
            if np.linalg.norm(q - (q @ d) * d) > 1e-12 * max(1.0, np.linalg.norm(q)):
                raise ValueError("axis_point is not on the axis line through center")
        _set(self, center=c, axis_dir=d, r_in=float(self.r_in), r_out=float(self.r_out),
             alpha=float(self.alpha))
        if not 0.0 <= self.r_in < self.r_out:
            raise ValueError("need 0 <= r_in < r_out")
        if not 0.0 < self.alpha < math.pi / 2.0:
            raise ValueError("alpha must lie in (0, pi/2)")

    @property
    def n(self):
        return self.center.size

    def contains(self, Z):
        V = np.atleast_2d(Z) - self.center
        d = np.linalg.norm(V, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.abs(V @ self.axis_dir) / d
        return (d > self.r_in) & (d <= self.r_out) & (cosang < math.cos(self.alpha))

    def bounding_ball(self):
        return self.center, self.r_out

    def sample(self, rng):
        return _rejection_sample(self, rng)


def _rejection_sample(region, rng):
    c, r = region.bounding_ball()
    ball = Ball(c, r)
    for _ in range(10000):
        z = ball.sample(rng)
        if region.contains(z)[0]:
            return z
    raise ValueError("region too thin to sample by rejection")


# -- iterated function systems -------------------------------------------------

def similarity_matrix(n, angles):
    angles = np.atleast_1d(np.asarray(angles, dtype=float)) if angles is not None else np.zeros(0)
    if n == 1:
        return np.eye(1)
    if n == 2:
        a = float(angles[0]) if angles.size else 0.0
        return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    full = np.zeros(3)
    full[: angles.size] = angles
    return Rotation.from_euler("zyz", full).as_matrix()


@dataclass(frozen=True, eq=False)
class SelfSimilarSet:
    """Attractor of the similarities ``z -> scale * R(angles) z + translation``.

    Materialized at ``depth`` as the images of the first map's fixed point
    under all words of that length.
    """

    maps: tuple
    n: int = 2
    depth: int = 4

    def __post_init__(self):
        if not self.maps:
            raise ValueError("an IFS needs at least one map")
        parsed = []
        for m in self.maps:
            scale, trans = float(m[0]), np.asarray(m[1], dtype=float).reshape(-1)
            angles = m[2] if len(m) > 2 else None
            if not 0.0 < scale < 1.0 or trans.size != self.n:
                raise ValueError("each map needs scale in (0, 1) and an n-vector translation")
            parsed.append((scale, similarity_matrix(self.n, angles), trans))
        _set(self, maps=tuple(parsed))
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    @cached_property
    def points(self):
        s, R, t = self.maps[0]
        fixed = np.linalg.solve(np.eye(self.n) - s * R, t)
        pts = fixed[None, :]
        for _ in range(self.depth):
            pts = np.concatenate([s * pts @ R.T + t for s, R, t in self.maps])
        return np.unique(pts, axis=0)


def cantor_four_corner(depth=4, scale=0.25):
    """The four-corner Cantor set in the unit square."""
    off = 1.0 - scale
    maps = tuple((scale, (a, b)) for a in (0.0, off) for b in (0.0, off))
    return SelfSimilarSet(maps, n=2, depth=depth)


# -- measures -----------------------------------------------------------------

class Measure:
    """Absolutely continuous measure ``w(z) dz`` (grid measures override the integrals)."""

    n = 2
    singular_points = ()
    support_boxes = ()
    smooth = True
    feature_scale = 1.0

    def density(self, Z):
        raise NotImplementedError

    def support(self):
        return Support(self.n)

    def decay_tail(self, R):
        """Analytic bound on ``int_{|z|>R} |z|^-1 dmu``; None when unknown."""
        return None

    def label(self):
        return type(self).__name__

    def _has_boundary(self):
        s = self.support()
        return s.bounded or s.hole_radius > 0.0 or bool(self.support_boxes)


class UniformBall(Measure):
    def __init__(self, center=(0.0, 0.0), radius=1.0, density=1.0):
        self.center = _vec(center, "center")
        self.radius = float(radius)
        self.density_value = float(density)
        if not (self.radius > 0.0 and self.density_value > 0.0):
            raise ValueError("radius and density must be positive")
        self.n = self.center.size
        self.feature_scale = self.radius

    def density(self, Z):
        inside = np.linalg.norm(Z - self.center, axis=1) <= self.radius
        return np.where(inside, self.density_value, 0.0)

    def support(self):
        return Support(self.n, tuple(self.center), self.radius)

    def total_mass(self):
        return self.density_value * ball_volume(self.n, self.radius)

    def decay_tail(self, R):
        if np.linalg.norm(self.center) + self.radius <= R:
            return 0.0
        return self.total_mass() / R

    def label(self):
        return f"uniform-ball(center={self.center.tolist()}, radius={self.radius:g}, density={self.density_value:g})"


class UniformBox(Measure):
    """Constant density on an oriented box (thin boxes model slab or line concentration)."""

    def __init__(self, center, half_lengths, rotation=None, density=1.0):
        self.box = OrientedBox(center, half_lengths, rotation)
        self.density_value = float(density)
        if not self.density_value > 0.0:
            raise ValueError("density must be positive")
        self.n = self.box.n
        self.support_boxes = (self.box.as_tuple(),)
        self.feature_scale = float(self.box.half_lengths.min())

    def density(self, Z):
        return np.where(self.box.contains(Z), self.density_value, 0.0)

    def support(self):
        c, r = self.box.bounding_ball()
        return Support(self.n, tuple(c), r * (1.0 + 1e-12))

    def total_mass(self):
        return self.density_value * float(np.prod(2.0 * self.box.half_lengths))

    def decay_tail(self, R):
        c, r = self.box.bounding_ball()
        if np.linalg.norm(c) + r <= R:
            return 0.0
        return self.total_mass() / R


class PowerWeight(Measure):
    """``|z|^p dz``."""

    def __init__(self, p, n=2):
        self.p = float(p)
        self.n = int(n)
        if not 1 <= self.n <= 3 or not math.isfinite(self.p):
            raise ValueError("need finite p and n in 1..3")
        self.singular_points = (np.zeros(self.n),) if self.p != 0.0 else ()

    @property
    def locally_integrable(self):
        return self.p > -self.n

    def density(self, Z):
        r = np.linalg.norm(Z, axis=1)
        if self.p == 0.0:
            return np.ones_like(r)
        with np.errstate(divide="ignore"):
            return r ** self.p

    def decay_tail(self, R):
        e = self.p + self.n - 1.0
        if e >= 0.0:
            return math.inf
        return sphere_area(self.n) * R ** e / -e

    def label(self):
        return f"power(p={self.p:g}, n={self.n})"


class GaussianWeight(Measure):
    """``exp(-|z|^2 / (2 sigma^2)) dz``."""

    def __init__(self, sigma=1.0, n=2):
        self.sigma = float(sigma)
        self.n = int(n)
        if not self.sigma > 0.0 or not 1 <= self.n <= 3:
            raise ValueError("need sigma > 0 and n in 1..3")
        self.feature_scale = self.sigma

    def density(self, Z):
        return np.exp(-np.einsum("ij,ij->i", Z, Z) / (2.0 * self.sigma ** 2))

    def decay_tail(self, R):
        x = R * R / (2.0 * self.sigma ** 2)
        a = (self.n - 1) / 2.0
        if self.n == 1:
            inc = float(special.exp1(x)) / 2.0
        else:
            inc = float(special.gammaincc(a, x) * special.gamma(a))
        return sphere_area(self.n) * self.sigma ** (self.n - 1) * 2.0 ** ((self.n - 3) / 2.0) * inc

    def total_mass(self):
        return (2.0 * math.pi) ** (self.n / 2.0) * self.sigma ** self.n


class RieszProduct(Measure):
    """``Lambda_m(z) dz``."""

    def __init__(self, m, n=2):
        self.m = int(m)
        self.n = int(n)
        if self.m < 0 or not 1 <= self.n <= 3:
            raise ValueError("need m >= 0 and n in 1..3")
        self.smooth = self.m == 0
        self.feature_scale = 4.0 ** (-self.n * (self.m ** 2 + self.m)) if self.m else 1.0

    def density(self, Z):
        from .singular import Lambda_m_many
        return Lambda_m_many(self.n, self.m, Z)

    def decay_tail(self, R):
        # Lambda_m >= 2^-m, so the tail dominates a divergent Lebesgue tail
        return math.inf

    def label(self):
        return f"riesz(m={self.m}, n={self.n})"


class DistancePower(Measure):
    """``dist(z, A)^p dz`` for a finite or self-similar anchor set ``A``."""

    def __init__(self, anchors, p=1.0, n=None):
        if isinstance(anchors, SelfSimilarSet):
            pts = anchors.points
        else:
            pts = np.atleast_2d(np.asarray(anchors, dtype=float))
        if n is not None and pts.shape[1] != n:
            raise ValueError("anchor dimension mismatch")
        if pts.shape[0] < 1 or not np.all(np.isfinite(pts)):
            raise ValueError("need at least one finite anchor")
        self.anchors = pts
        self.p = float(p)
        if not self.p > 0.0:
            raise ValueError("p must be positive")
        self.n = pts.shape[1]
        self.tree = cKDTree(pts)
        self.smooth = False
        self.singular_points = tuple(pts) if pts.shape[0] <= 8 else ()

    def distance(self, Z):
        d, _ = self.tree.query(np.atleast_2d(Z))
        return d

    def density(self, Z):
        return self.distance(Z) ** self.p

    def decay_tail(self, R):
        return math.inf


class Truncated(Measure):
    """``inner`` restricted to ``{|z| > exclusion_radius}``."""

    def __init__(self, inner, exclusion_radius=1.0):
        if isinstance(inner, GridMeasure):
            raise TypeError("truncate grid measures by zeroing cells instead")
        if inner.support().hole_radius > 0.0:
            raise ValueError("inner measure already has a hole")
        self.inner = inner
        self.radius = float(exclusion_radius)
        if not self.radius > 0.0:
            raise ValueError("exclusion_radius must be positive")
        self.n = inner.n
        self.support_boxes = inner.support_boxes
        self.smooth = inner.smooth
        self.feature_scale = min(inner.feature_scale, self.radius)
        self.singular_points = tuple(p for p in inner.singular_points if np.linalg.norm(p) > self.radius)

    def density(self, Z):
        keep = np.linalg.norm(Z, axis=1) > self.radius
        out = np.zeros(Z.shape[0])
        if np.any(keep):
            out[keep] = self.inner.density(Z[keep])
        return out

    def support(self):
        s = self.inner.support()
        return Support(self.n, s.outer_center, s.outer_radius, tuple(np.zeros(self.n)), self.radius)

    def decay_tail(self, R):
        return self.inner.decay_tail(max(R, self.radius))

    def label(self):
        return f"truncated({self.inner.label()}, {self.radius:g})"


class GridMeasure(Measure):
    """Piecewise-constant measure: ``masses[i]`` spread uniformly on grid cell ``i``.

    ``origin`` is the lower corner of cell ``(0, ..., 0)``.  Integrals use the
    ``2^n`` sub-cell midpoints of every cell as nodes.
    """

    smooth = False

    def __init__(self, origin, cell, masses):
        self.masses = np.asarray(masses, dtype=float)
        self.n = self.masses.ndim
        self.origin = _vec(origin, "origin")
        self.cell = float(cell)
        if self.origin.size != self.n or not 1 <= self.n <= 3:
            raise ValueError("origin dimension must match masses.ndim")
        if not self.cell > 0.0:
            raise ValueError("cell must be positive")
        if not np.all(np.isfinite(self.masses)) or np.any(self.masses < 0.0):
            raise ValueError("masses must be finite and nonnegative")
        self.feature_scale = self.cell

    @cached_property
    def nodes(self):
        idx = np.argwhere(self.masses > 0.0)
        sub = np.array(list(itertools.product((0.25, 0.75), repeat=self.n)))
        Z = self.origin + self.cell * (idx[:, None, :] + sub[None, :, :])
        w = np.repeat(self.masses[tuple(idx.T)] / sub.shape[0], sub.shape[0])
        return Z.reshape(-1, self.n), w

    def density(self, Z):
        idx = np.floor((Z - self.origin) / self.cell).astype(int)
        ok = np.all((idx >= 0) & (idx < np.array(self.masses.shape)), axis=1)
        out = np.zeros(Z.shape[0])
        out[ok] = self.masses[tuple(idx[ok].T)] / self.cell ** self.n
        return out

    def support(self):
        half = self.cell * np.array(self.masses.shape) / 2.0
        return Support(self.n, tuple(self.origin + half), float(np.linalg.norm(half)))

    def total_mass(self):
        return float(self.masses.sum())

    def node_integral(self, func, ncomp=1):
        Z, w = self.nodes
        vals = np.asarray(func(Z)).reshape(-1, ncomp)
        return (vals * w[:, None]).sum(axis=0)

    def decay_tail(self, R):
        Z, w = self.nodes
        r = np.linalg.norm(Z, axis=1)
        far = r > R
        return float(np.sum(w[far] / r[far]))


def lebesgue(n=2):
    return PowerWeight(0.0, n)


# -- masses -------------------------------------------------------------------

def _check_integrable(mu, region):
    if isinstance(mu, PowerWeight) and not mu.locally_integrable:
        origin = np.zeros(mu.n)
        c, r = region.bounding_ball()
        near = np.linalg.norm(c) <= r
        if near and (region.contains(origin)[0] or _touches_origin(region)):
            raise NonIntegrable(f"|z|^{mu.p:g} is not integrable near 0 in dimension {mu.n}")


def _touches_origin(region):
    if isinstance(region, OrientedBox):
        local = np.abs(region.rotation.T @ -region.center)
        return bool(np.all(local <= region.half_lengths * (1.0 + 1e-9)))
    if isinstance(region, (Shell, ShellMinusCone)):
        d = np.linalg.norm(region.center)
        return region.r_in <= d <= region.r_out
    c, r = region.bounding_ball()
    return np.linalg.norm(c) <= r


def _nearest_singular(mu, region):
    c, r = region.bounding_ball()
    best = None
    for s in mu.singular_points:
        d = np.linalg.norm(s - c)
        if d <= 2.0 * r and (best is None or d < best[0]):
            best = (d, s)
    return None if best is None else best[1]


def _one(Z, R, U):
    return np.ones((Z.shape[0], 1))


def _polar(mu, c, cfg, clip, scale):
    singular_here = any(np.linalg.norm(s - c) <= 1e-300 for s in mu.singular_points)
    others = [s for s in mu.singular_points if np.linalg.norm(s - c) > 1e-300]
    return polar_integrate(_one, mu.density, mu.support(), c, cfg, clip=clip,
                           special_points=others, singular_center=singular_here, scale=scale)


def mass_estimate(mu, region, cfg=None):
    """Mass of ``region`` under ``mu`` as an :class:`Estimate`."""
    cfg = cfg or QuadratureConfig()
    if region.n != mu.n:
        raise ValueError("region and measure dimensions differ")
    if isinstance(mu, GridMeasure):
        Z, w = mu.nodes
        val = float(np.sum(w[region.contains(Z)]))
        return Estimate(np.array([val]), 0.0, True)
    _check_integrable(mu, region)
    if isinstance(mu, RieszProduct) and mu.m > 0 and isinstance(region, (Ball, OrientedBox, Shell)):
        from .singular import riesz_ball_integral, riesz_box_integral
        if isinstance(region, Ball):
            val = riesz_ball_integral(mu.n, mu.m, region.center, region.radius)
        elif isinstance(region, Shell):
            val = riesz_ball_integral(mu.n, mu.m, region.center, region.r_out)
            if region.r_in > 0.0:
                val -= riesz_ball_integral(mu.n, mu.m, region.center, region.r_in)
        else:
            val = riesz_box_integral(mu.n, mu.m, *region.as_tuple())
        return Estimate(np.array([val]), 0.0, True)
    boxes = tuple(mu.support_boxes)
    if isinstance(region, Shell):
        outer = mass_estimate(mu, Ball(region.center, region.r_out), cfg)
        if region.r_in == 0.0:
            return outer
        inner = mass_estimate(mu, Ball(region.center, region.r_in), cfg)
        return Estimate(outer.value - inner.value, outer.error + inner.error,
                        outer.converged and inner.converged, max(outer.level, inner.level),
                        outer.evaluations + inner.evaluations)
    if isinstance(region, ShellMinusCone):
        clip = Clip(region.r_in, region.r_out, boxes=boxes, cone=(region.axis_dir, region.alpha))
        return _polar(mu, region.center, cfg, clip, region.r_out)
    c, r = region.bounding_ball()
    s = _nearest_singular(mu, region)
    if isinstance(region, Ball):
        if s is not None and np.linalg.norm(s - c) > 1e-12 * r:
            clip = Clip(balls=((region.center, region.radius),), boxes=boxes)
            return _polar(mu, s, cfg, clip, r)
        return _polar(mu, c, cfg, Clip(r_max=region.radius, boxes=boxes), r)
    if isinstance(region, OrientedBox):
        box = region.as_tuple()
        if s is not None:
            return _polar(mu, s, cfg, Clip(boxes=(box,) + boxes), r)
        if mu.smooth and not mu._has_boundary():
            return box_integrate(lambda Z: np.ones(Z.shape[0]), mu.density, *box, cfg)
        return _polar(mu, c, cfg, Clip(boxes=(box,) + boxes), r)
    raise TypeError(f"unsupported region {type(region).__name__}")


def mass(mu, region, cfg=None):
    """``mu(region)``; warns :class:`BudgetExceededWarning` when the budget ran out."""
    est = mass_estimate(mu, region, cfg)
    if not est.converged:
        warnings.warn(f"mass quadrature did not reach rel_tol (error {est.error:.3g})",
                      BudgetExceededWarning, stacklevel=2)
    return est.scalar


# -- decay condition ----------------------------------------------------------

@dataclass
class DecayResult:
    integral_estimate: float
    tail_bound: float
    verdict: str
    shells: list
    converged: bool = True


def _inv_r(Z, R, U):
    return (1.0 / np.linalg.norm(Z, axis=1))[:, None]


def decay_check(mu, cfg=None):
    """Estimate ``int_{1<|z|<=R} |z|^-1 dmu`` over dyadic shells plus an analytic tail.

    Verdicts: ``finite``, ``infinite`` or ``inconclusive``.
    """
    cfg = cfg or QuadratureConfig()
    R = cfg.truncation_radius
    edges = [1.0]
    while edges[-1] < R:
        edges.append(min(2.0 * edges[-1], R))
    shells, converged = [], True
    origin = np.zeros(mu.n)
    for a, b in zip(edges[:-1], edges[1:]):
        if isinstance(mu, GridMeasure):
            Z, w = mu.nodes
            r = np.linalg.norm(Z, axis=1)
            sel = (r > a) & (r <= b)
            shells.append(float(np.sum(w[sel] / r[sel])))
            continue
        if isinstance(mu, RieszProduct) and mu.m > 0:
            # mean-one oscillation: shells are the Lebesgue values to leading order
            shells.append(sphere_area(mu.n) * _radial_power_integral(a, b, mu.n - 2))
            continue
        est = polar_integrate(_inv_r, mu.density, mu.support(), origin, cfg,
                              clip=Clip(a, b, boxes=tuple(mu.support_boxes)),
                              special_points=[s for s in mu.singular_points if np.linalg.norm(s) > 0.0],
                              scale=b)
        converged &= est.converged
        shells.append(est.scalar)
    estimate = float(sum(shells))
    tail = mu.decay_tail(R)
    if tail is None:
        last = shells[-1] if shells else 0.0
        verdict = "finite" if last <= cfg.rel_tol * max(estimate, 1e-300) or estimate == 0.0 else "inconclusive"
        tail = math.nan
    elif math.isinf(tail):
        verdict = "infinite"
    else:
        verdict = "finite"
    return DecayResult(estimate, tail, verdict, shells, converged)


def _radial_power_integral(a, b, e):
    if e == -1:
        return math.log(b / a)
    return (b ** (e + 1) - a ** (e + 1)) / (e + 1)


# -- doubling and cone checks -----------------------------------------------

def _ratio(num, den):
    if den.scalar <= 0.0:
        return math.inf
    return num.scalar / den.scalar


def doubling_constant_estimate(mu, domain, trials=100, cfg=None, seed=0, r_min=1e-3, r_max=1e1,
                               centers=None, radii=None):
    """Max of ``mu(B(x, 2r)) / mu(B(x, r))`` over sampled balls.

    Centres are uniform in ``domain`` and radii log-uniform in
    ``[r_min, r_max]``; explicit ``centers``/``radii`` replace the sampling.
    """
    cfg = cfg or QuadratureConfig()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        x = np.asarray(centers[i], float) if centers is not None else domain.sample(rng)
        r = float(radii[i]) if radii is not None else float(log_uniform(rng, r_min, r_max))
        small = mass_estimate(mu, Ball(x, r), cfg)
        big = mass_estimate(mu, Ball(x, 2.0 * r), cfg)
        ratio = _ratio(big, small)
        row = {"trial": i, "center": x, "radius": r, "mass_B": small.scalar,
               "mass_2B": big.scalar, "ratio": ratio}
        rows.append(row)
        if not (small.converged and big.converged):
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if small.scalar <= 0.0:
            verdict = FAIL
            row["zero_mass"] = True
        if ratio > best:
            best, witness = ratio, {"center": x, "radius": r, "mass_B": small.scalar,
                                    "mass_2B": big.scalar}
    return CheckReport("ball doubling mu(2B) <= C mu(B)", best, trials, witness, seed, verdict, rows)


def cone_condition_check(mu, alpha, M, trials=100, cfg=None, seed=0, domain=None, axis=None,
                         r_min=1e-2, r_max=1e1):
    """Max of ``mu(A(x,r,2r)) / mu(A(x,r/M,2Mr) minus S_alpha(x,L))`` over sampled ``(x, r, L)``.

    ``axis`` fixes the direction of ``L``; otherwise it is uniform on the sphere.
    """
    cfg = cfg or QuadratureConfig()
    if not 0.0 < alpha < math.pi / 2.0:
        raise ValueError("alpha must lie in (0, pi/2)")
    if M < 1.0:
        raise ValueError("M must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    domain = domain or Ball(np.zeros(mu.n), 2.0)
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        x = domain.sample(rng)
        r = float(log_uniform(rng, r_min, r_max))
        L = np.asarray(axis, float) / np.linalg.norm(axis) if axis is not None else random_unit(rng, mu.n)
        num = mass_estimate(mu, Shell(x, r, 2.0 * r), cfg)
        den = mass_estimate(mu, ShellMinusCone(x, r / M, 2.0 * M * r, L, alpha), cfg)
        if num.scalar <= 0.0 and den.scalar <= 0.0:
            ratio = 0.0
        else:
            ratio = _ratio(num, den)
        row = {"trial": i, "x": x, "r": r, "axis": L, "mass_annulus": num.scalar,
               "mass_outside_cone": den.scalar, "ratio": ratio}
        rows.append(row)
        if not (num.converged and den.converged):
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if den.scalar <= 0.0 < num.scalar:
            verdict = FAIL
            row["zero_mass"] = True
        if ratio > best:
            best, witness = ratio, {"x": x, "r": r, "axis": L, "mass_annulus": num.scalar,
                                    "mass_outside_cone": den.scalar}
    return CheckReport("cone condition mu(A(x,r,2r)) <= C mu(A(x,r/M,2Mr) \\ S_alpha(x,L))",
                       best, trials, witness, seed, verdict, rows)
