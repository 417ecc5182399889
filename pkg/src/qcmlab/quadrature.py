"""Quadrature engines.

Two engines cover every region/measure combination used by the package:

* :func:`polar_integrate` integrates ``func(z) w(z) dz`` in polar coordinates
  about a point ``c``.  Every ray ``c + r u`` is clipped analytically against
  the support of the density and the region, so density jumps at support
  boundaries never fall inside a panel.  Angular panels are graded toward
  "special" directions (tangent directions of support spheres, directions of
  singular points, cone edges, box corners) and radial panels are dyadic,
  with geometric grading toward a singular centre when requested.
* :func:`box_integrate` is a global-adaptive tensor Gauss-Legendre cubature on
  an oriented box, used for smooth densities.

Both compare successive refinement levels and return an :class:`Estimate`
whose ``converged`` flag is false when ``max_depth`` ran out first.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureConfig:
    """Error budget shared by every integral in the package.

    ``truncation_radius`` bounds the integration domain of measures with
    unbounded support, ``base_subdivision`` sets the coarsest panel counts,
    ``max_depth`` the number of refinement levels, ``rel_tol`` the relative
    accuracy target.
    """

    truncation_radius: float = 1e3
    base_subdivision: int = 4
    max_depth: int = 5
    rel_tol: float = 1e-6

    def __post_init__(self):
        if not self.truncation_radius >= 1.0:
            raise ValueError("truncation_radius must be >= 1")
        if self.base_subdivision < 2:
            raise ValueError("base_subdivision must be >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.rel_tol <= 0.1:
            raise ValueError("rel_tol must lie in (0, 0.1]")


@dataclass
class Estimate:
    value: np.ndarray
    error: float
    converged: bool
    level: int = 0
    evaluations: int = 0

    @property
    def scalar(self):
        return float(self.value[0])


@lru_cache(maxsize=None)
def gauss_legendre(q):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return (x + 1.0) / 2.0, w / 2.0


# -- ray clipping -------------------------------------------------------------

def ray_ball(c, U, center, radius):
    """Parameter interval of ``{r >= 0: |c + r u - center| <= radius}`` per direction."""
    N = U.shape[0]
    if not np.isfinite(radius):
        return np.zeros(N), np.full(N, np.inf)
    d = c - center
    b = U @ d
    cc = d @ d - radius * radius
    disc = b * b - cc
    ok = disc > 0.0
    s = np.sqrt(np.where(ok, disc, 0.0))
    lo = np.where(ok, np.maximum(-b - s, 0.0), 0.0)
    hi = np.where(ok, -b + s, -1.0)
    return lo, hi


def ray_box(c, U, center, half, rot):
    """Slab-method interval of ``{r >= 0: c + r u in box}`` per direction."""
    local_c = rot.T @ (c - center)
    local_u = U @ rot
    lo = np.zeros(U.shape[0])
    hi = np.full(U.shape[0], np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(len(half)):
            ui = local_u[:, i]
            par = np.abs(ui) < 1e-300
            t1 = (-half[i] - local_c[i]) / ui
            t2 = (half[i] - local_c[i]) / ui
            tmin = np.where(par, -np.inf, np.minimum(t1, t2))
            tmax = np.where(par, np.inf, np.maximum(t1, t2))
            outside = par & (np.abs(local_c[i]) > half[i])
            tmax = np.where(outside, -1.0, tmax)
            lo = np.maximum(lo, tmin)
            hi = np.minimum(hi, tmax)
    return lo, hi


@dataclass(frozen=True)
class Support:
    """A ball with an optional ball-shaped hole; the outer radius may be infinite."""

    n: int
    outer_center: tuple = None
    outer_radius: float = math.inf
    hole_center: tuple = None
    hole_radius: float = 0.0

    def outer(self):
        c = np.zeros(self.n) if self.outer_center is None else np.asarray(self.outer_center, float)
        return c, self.outer_radius

    def hole(self):
        c = np.zeros(self.n) if self.hole_center is None else np.asarray(self.hole_center, float)
        return c, self.hole_radius

    @property
    def bounded(self):
        return math.isfinite(self.outer_radius)

    def truncated(self, R):
        """Same support intersected with B(0, R) when the outer ball is infinite."""
        if self.bounded:
            return self
        return Support(self.n, tuple(np.zeros(self.n)), float(R), self.hole_center, self.hole_radius)

    def ray_intervals(self, c, U):
        """Up to two intervals per direction, shape (N, 2) each for ``lo`` and ``hi``."""
        oc, orad = self.outer()
        lo, hi = ray_ball(c, U, oc, orad)
        if self.hole_radius <= 0.0:
            return lo[:, None], hi[:, None]
        hc, hrad = self.hole()
        blo, bhi = ray_ball(c, U, hc, hrad)
        hole_empty = bhi <= blo
        lo1, hi1 = lo, np.where(hole_empty, hi, np.minimum(hi, blo))
        lo2, hi2 = np.where(hole_empty, 0.0, np.maximum(lo, bhi)), np.where(hole_empty, -1.0, hi)
        return np.stack([lo1, lo2], axis=1), np.stack([hi1, hi2], axis=1)

    def features(self, c):
        """(direction, half-angle) pairs seen from ``c``: tangent cones of the spheres."""
        out = []
        for center, radius in (self.outer(), self.hole()):
            if not (math.isfinite(radius) and radius > 0.0):
                continue
            d = center - c
            dist = np.linalg.norm(d)
            if dist <= 1e-300:
                continue
            u = d / dist
            if dist > radius:
                out.append((u, math.asin(min(1.0, radius / dist))))
        return out

    def contains(self, Z):
        oc, orad = self.outer()
        inside = np.linalg.norm(Z - oc, axis=-1) <= orad
        if self.hole_radius > 0.0:
            hc, hrad = self.hole()
            inside &= np.linalg.norm(Z - hc, axis=-1) > hrad
        return inside


@dataclass
class Clip:
    """Region restriction for :func:`polar_integrate`, expressed around the polar centre.

    ``r_min``/``r_max`` give a shell about the centre; ``boxes`` oriented boxes
    ``(center, half, rot)`` and ``balls`` balls ``(center, radius)`` to
    intersect with; ``cone`` a double cone ``(axis_unit, alpha)`` whose
    interior is removed.
    """

    r_min: float = 0.0
    r_max: float = math.inf
    boxes: tuple = ()
    balls: tuple = ()
    cone: tuple = None


# -- direction rules ----------------------------------------------------------

def _graded_breaks(center, width, depth, lo, hi):
    offs = width * 2.0 ** -np.arange(0, depth + 1)
    pts = np.concatenate([center - offs, center + offs, [center]])
    return pts[(pts > lo) & (pts < hi)]


def _panels_to_nodes(breaks, q):
    x, w = gauss_legendre(q)
    a, b = breaks[:-1], breaks[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    h = b - a
    return (a[:, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()


def _orthonormal_frame(axis):
    axis = axis / np.linalg.norm(axis)
    trial = np.eye(3)[np.argmin(np.abs(axis))]
    e1 = np.cross(axis, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return np.stack([e1, e2, axis], axis=1)


def direction_rule(n, level, base, specials, grading=8):
    """Unit directions and solid-angle weights.

    ``specials`` is a list of ``(unit_vector, half_angle)``; the angular panels
    get graded breakpoints on the boundary of each such cone (``half_angle``
    0 meaning the single direction).  In 3-D only specials aligned with the
    first one (the frame axis) can be honoured exactly.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    q = 8
    if n == 2:
        panels = 4 * base * 2 ** level
        width = TWO_PI / panels
        breaks = [np.linspace(-math.pi, math.pi, panels + 1)]
        for u, beta in specials:
            phi = math.atan2(u[1], u[0])
            for ang in {phi + beta, phi - beta, phi + math.pi + beta, phi + math.pi - beta}:
                ang = (ang + math.pi) % TWO_PI - math.pi
                for shift in (-TWO_PI, 0.0, TWO_PI):
                    breaks.append(_graded_breaks(ang + shift, width, grading, -math.pi, math.pi))
        br = np.unique(np.concatenate(breaks))
        th, w = _panels_to_nodes(br, q)
        return np.stack([np.cos(th), np.sin(th)], axis=1), w
    # n == 3: (cos polar angle) x azimuth, frame axis along the first special
    axis = specials[0][0] if specials else np.array([0.0, 0.0, 1.0])
    frame = _orthonormal_frame(np.asarray(axis, float))
    panels = 2 * base * 2 ** level
    width = 2.0 / panels
    breaks = [np.linspace(-1.0, 1.0, panels + 1)]
    for u, beta in specials:
        cu = float(np.dot(u, frame[:, 2]))
        if abs(abs(cu) - 1.0) > 1e-12:
            continue
        for m in {math.cos(beta), -math.cos(beta)}:
            breaks.append(_graded_breaks(m, width, grading, -1.0, 1.0))
    br = np.unique(np.concatenate(breaks))
    mu, wmu = _panels_to_nodes(br, q)
    M = 8 * base * 2 ** level
    phi = (np.arange(M) + 0.5) * TWO_PI / M
    s = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    local = np.stack([
        (s[:, None] * np.cos(phi)[None, :]).ravel(),
        (s[:, None] * np.sin(phi)[None, :]).ravel(),
        np.repeat(mu, M),
    ], axis=1)
    U = local @ frame.T
    W = np.repeat(wmu, M) * (TWO_PI / M)
    return U, W


def _radial_breaks(r_hi, scale, special_radii, singular_center, depths=None):
    scale = max(scale, 1e-300)
    top = max(r_hi, scale)
    jmax = int(math.ceil(math.log2(top / scale))) + 1
    br = [scale * 2.0 ** np.arange(-6, jmax + 1), [0.0]]
    if singular_center:
        br.append(scale * 2.0 ** -np.arange(6, 48))
    depths = depths if depths is not None else [_MAX_RADIAL_GRADING] * len(special_radii)
    for rs, d in zip(special_radii, depths):
        if rs > 0.0 and d > 0:
            br.append(_graded_breaks(rs, rs / 2.0, int(d), 0.0, np.inf))
    out = np.unique(np.concatenate(br))
    return out


_MAX_RADIAL_GRADING = 14


def _ray_depths(U, special_dirs):
    """Radial grading depth per ray and special point.

    A ray passing at angle ``theta`` from a special point at distance ``rs``
    sees it only through features of width ``rs sin(theta)``, so it is graded
    down to that width; rays pointing away get no grading.
    """
    if not special_dirs:
        return np.zeros((U.shape[0], 0), dtype=int)
    D = np.stack(special_dirs, axis=1)
    cos = np.clip(U @ D, -1.0, 1.0)
    sin = np.sqrt(np.maximum(1.0 - cos * cos, 0.0))
    with np.errstate(divide="ignore"):
        d = np.ceil(-np.log2(np.maximum(sin, 2.0 ** -40))) + 2
    d = np.clip(d, 0, _MAX_RADIAL_GRADING).astype(int)
    return np.where(cos > -0.5, d, 0)


def polar_integrate(func, density, support, c, cfg, *, ncomp=1, clip=None,
                    special_points=(), singular_center=False, scale=None,
                    extra_specials=(), abs_floor=0.0):
    """Integrate ``func(Z, r, U) * density(Z)`` over ``support`` (and ``clip``) around ``c``.

    ``func`` returns an array of shape ``(m, ncomp)``.  ``special_points`` are
    points where the density is singular or non-smooth; rays through them get
    graded angular and radial panels.  ``singular_center`` asks for geometric
    radial grading down to ``r ~ 1e-14 * scale`` (kernels singular at ``c``).
    """
    c = np.asarray(c, float)
    n = c.shape[0]
    clip = clip or Clip()
    sup = support.truncated(cfg.truncation_radius)

    specials = []
    if clip.cone is not None:
        specials.append((np.asarray(clip.cone[0], float), float(clip.cone[1])))
    special_radii, special_dirs = [], []
    for p in special_points:
        d = np.asarray(p, float) - c
        dist = np.linalg.norm(d)
        if dist > 0.0:
            specials.append((d / dist, 0.0))
            special_radii.append(dist)
            special_dirs.append(d / dist)
    specials.extend(sup.features(c))
    for bc, bh, brot in clip.boxes if n == 2 else ():
        for sx in (-1, 1):
            for sy in (-1, 1):
                corner = bc + brot @ (bh * np.array([sx, sy]))
                d = corner - c
                if np.linalg.norm(d) > 0.0:
                    specials.append((d / np.linalg.norm(d), 0.0))
    for bc, brad in clip.balls:
        specials.extend(Support(n, tuple(bc), float(brad)).features(c))
    specials.extend(extra_specials)

    if scale is None:
        scale = 1.0

    prev = None
    total_evals = 0
    for level in range(cfg.max_depth + 1):
        U, W = direction_rule(n, level, cfg.base_subdivision, specials)
        lo, hi = sup.ray_intervals(c, U)
        lo = np.maximum(lo, clip.r_min)
        hi = np.minimum(hi, clip.r_max)
        for box in clip.boxes:
            blo, bhi = ray_box(c, U, *box)
            lo = np.maximum(lo, blo[:, None])
            hi = np.minimum(hi, bhi[:, None])
        for bc, brad in clip.balls:
            blo, bhi = ray_ball(c, U, np.asarray(bc, float), brad)
            lo = np.maximum(lo, blo[:, None])
            hi = np.minimum(hi, bhi[:, None])
        if clip.cone is not None:
            axis, alpha = clip.cone
            inside = np.abs(U @ np.asarray(axis, float)) >= math.cos(alpha)
            W = np.where(inside, 0.0, W)
        finite_hi = hi[np.isfinite(hi) & (hi > lo)]
        r_top = float(finite_hi.max()) if finite_hi.size else scale
        qr = 6 + 2 * level
        xg, wg = gauss_legendre(qr)
        depths = _ray_depths(U, special_dirs)
        groups, inverse = np.unique(depths, axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        value = np.zeros(ncomp)
        mag = 0.0
        for g, row in enumerate(groups):
            sel = np.nonzero(inverse == g)[0]
            breaks = _radial_breaks(r_top, scale, special_radii, singular_center, row)
            a = np.maximum(breaks[None, None, :-1], lo[sel, :, None])
            b = np.minimum(breaks[None, None, 1:], hi[sel, :, None])
            keep = (b > a) & (W[sel, None, None] > 0.0)
            di, _, _ = np.nonzero(keep)
            a, b = a[keep], b[keep]
            h = b - a
            R = (a[:, None] + h[:, None] * xg).ravel()
            Ui = sel[np.repeat(di, qr)]
            wt = (h[:, None] * wg).ravel() * W[Ui] * R ** (n - 1)
            Ud = U[Ui]
            Z = c + R[:, None] * Ud
            dens = density(Z)
            vals = func(Z, R, Ud).reshape(-1, ncomp)
            contrib = vals * (wt * dens)[:, None]
            value = value + contrib.sum(axis=0)
            mag += float(np.abs(contrib).sum())
            total_evals += R.size
        if prev is not None:
            err = float(np.max(np.abs(value - prev)))
            if err <= cfg.rel_tol * max(mag, abs_floor) or mag == 0.0:
                return Estimate(value, err, True, level, total_evals)
        prev = value
    return Estimate(prev, err, False, cfg.max_depth, total_evals)


# -- tensor cubature on boxes -------------------------------------------------

def _tensor_rule(n, q):
    x, w = gauss_legendre(q)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.ones(pts.shape[0])
    for g in np.meshgrid(*([w] * n), indexing="ij"):
        wts = wts * g.ravel()
    return pts, wts


def box_integrate(func, density, center, half, rot, cfg, *, ncomp=1, max_cells=20000):
    """Global-adaptive tensor Gauss-Legendre cubature over an oriented box.

    Cells are kept in unit-cube coordinates ``s in [0, 1]^n``; each is
    estimated with an order-4 rule on the cell and on its ``2^n`` children, the
    difference being the cell's error.  Cells carrying the top half of the
    error are split until the summed error meets ``rel_tol``.
    """
    center = np.asarray(center, float)
    half = np.asarray(half, float)
    n = center.shape[0]
    vol = float(np.prod(2.0 * half))
    counts = np.maximum(cfg.base_subdivision,
                        np.ceil(cfg.base_subdivision * half / half.min())).astype(int)
    while counts.prod() > 4096:
        counts = np.maximum(1, counts // 2)
    axes = [np.arange(k) / k for k in counts]
    grids = np.meshgrid(*axes, indexing="ij")
    lows = np.stack([g.ravel() for g in grids], axis=1)
    sizes = np.tile(1.0 / counts, (lows.shape[0], 1))
    pts, wts = _tensor_rule(n, 4)
    child_offsets = np.stack(np.meshgrid(*([np.array([0.0, 0.5])] * n), indexing="ij"), -1).reshape(-1, n)

    def to_world(S):
        return center + ((2.0 * S - 1.0) * half) @ rot.T

    def rule(lows_, sizes_):
        S = lows_[:, None, :] + sizes_[:, None, :] * pts[None, :, :]
        Z = to_world(S.reshape(-1, n))
        v = func(Z).reshape(-1, ncomp) * density(Z)[:, None]
        v = v.reshape(lows_.shape[0], -1, ncomp)
        return (v * wts[None, :, None]).sum(axis=1) * (np.prod(sizes_, axis=1) * vol)[:, None]

    def estimate(lows_, sizes_):
        coarse = rule(lows_, sizes_)
        cl = (lows_[:, None, :] + sizes_[:, None, :] * child_offsets[None]).reshape(-1, n)
        cs = np.repeat(sizes_ / 2.0, child_offsets.shape[0], axis=0)
        fine = rule(cl, cs).reshape(lows_.shape[0], -1, ncomp).sum(axis=1)
        err = np.max(np.abs(fine - coarse), axis=1)
        return fine, err

    vals, errs = estimate(lows, sizes)
    evals = lows.shape[0] * pts.shape[0] * (1 + 2 ** n)
    for _ in range(cfg.max_depth * 8):
        total = vals.sum(axis=0)
        scale = float(np.abs(vals).sum())
        if errs.sum() <= cfg.rel_tol * scale or scale == 0.0:
            return Estimate(total, float(errs.sum()), True, 0, evals)
        if lows.shape[0] >= max_cells:
            break
        order = np.argsort(errs)[::-1]
        cum = np.cumsum(errs[order])
        nsplit = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        split = order[:nsplit]
        keep = np.setdiff1d(np.arange(lows.shape[0]), split)
        sl, ss = lows[split], sizes[split]
        cl = (sl[:, None, :] + ss[:, None, :] * child_offsets[None]).reshape(-1, n)
        cs = np.repeat(ss / 2.0, child_offsets.shape[0], axis=0)
        cv, ce = estimate(cl, cs)
        evals += cl.shape[0] * pts.shape[0] * (1 + 2 ** n)
        lows = np.concatenate([lows[keep], cl])
        sizes = np.concatenate([sizes[keep], cs])
        vals = np.concatenate([vals[keep], cv])
        errs = np.concatenate([errs[keep], ce])
    return Estimate(vals.sum(axis=0), float(errs.sum()), False, 0, evals)


def composite_midpoint(f, a, b, m):
    h = (b - a) / m
    t = a + h * (np.arange(m) + 0.5)
    return h * float(np.sum(f(t)))


def midpoint_richardson(f, a=0.0, b=1.0, m=64, rel_tol=1e-8, max_doublings=12):
    """Composite midpoint rule with Richardson extrapolation, doubling ``m`` until stable."""
    prev = composite_midpoint(f, a, b, m)
    prev_extrap = None
    for _ in range(max_doublings):
        m *= 2
        cur = composite_midpoint(f, a, b, m)
        extrap = (4.0 * cur - prev) / 3.0
        if prev_extrap is not None and abs(extrap - prev_extrap) <= rel_tol * max(abs(extrap), 1e-300):
            return extrap, True
        prev, prev_extrap = cur, extrap
    return prev_extrap, False
