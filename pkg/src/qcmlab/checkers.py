"""Randomized falsifiers for monotonicity, quasisymmetry, isotropic doubling and ULNC geometry.

Every check draws trial ``i`` from ``trial_rng(seed, i)`` and returns a
``CheckReport`` whose rows hold the sampled inputs and ratios.
"""
from dataclasses import dataclass, field
import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import lsq_linear
from scipy.spatial import cKDTree

from .exceptions import AllPairsDegenerate, InjectivityViolation, SetTooSmall, ZeroMass
from .measures import (Ball, DistancePower, Measure, OrientedBox, RieszProduct, SelfSimilarSet,
                       mass_estimate)
from .quadrature import QuadratureConfig, midpoint_richardson
from .reports import FAIL, INCONCLUSIVE, PASS, CheckReport, worse_verdict
from .sampling import log_uniform, random_rotation, random_unit, trial_rng
from .singular import riesz_segment_mean

DEGENERATE_IMAGE = 1e-12


@dataclass
class MapUnderTest:
    """A map ``Point -> Point`` together with the region its inputs are drawn from."""

    evaluator: Callable
    domain: object
    name: str = "map"

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, float)), float)

    @property
    def n(self):
        return self.domain.n


def linear_map(M, domain=None, name=None):
    M = np.atleast_2d(np.asarray(M, float))
    domain = domain or Ball(np.zeros(M.shape[1]), 1.0)
    return MapUnderTest(lambda x: M @ x, domain, name or f"linear{M.tolist()}")


def identity_map(n=2, domain=None):
    return linear_map(np.eye(n), domain, "identity")


def power_map(p, n=2, domain=None):
    """``f_p(x) = |x|^p x``."""
    domain = domain or Ball(np.zeros(n), 1.0)

    def f(x):
        r = np.linalg.norm(x)
        return r ** p * x if r > 0.0 else np.zeros_like(x)
    return MapUnderTest(f, domain, f"power(p={p})")


def kernel_map(ev, domain=None):
    """The kernel map ``f_mu`` of a ``KernelMapEval``."""
    from .mapping import f_mu
    domain = domain or Ball(np.zeros(ev.n), 1.0)
    return MapUnderTest(lambda x: f_mu(ev, x), domain, f"f_mu[{ev.mu.label()}]")


def _offset_in_domain(rng, domain, x, r_min, r_max, tries=64):
    """``x + s u`` inside ``domain`` with ``s`` log-uniform; shrinks ``s`` when rejected."""
    n = x.shape[0]
    s = float(log_uniform(rng, r_min, r_max))
    for _ in range(tries):
        y = x + s * random_unit(rng, n)
        if domain.contains(y[None, :])[0]:
            return y
        s = max(0.5 * s, r_min)
    return x + r_min * random_unit(rng, n)


# -- delta monotonicity ---------------------------------------------------------

def _cos_angle(u, w):
    # 1 - |u - w|^2 / 2 is exact for equal unit vectors, unlike the dot product
    d = u - w
    return float(np.clip(1.0 - 0.5 * np.dot(d, d), -1.0, 1.0))


def delta_monotone_estimate(fmap, trials=200, seed=0, r_min=1e-3, r_max=1.0):
    """``delta_hat``: the least sampled ``<F(x)-F(y), x-y> / (|F(x)-F(y)| |x-y|)``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    best, witness = math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        x = fmap.domain.sample(rng)
        y = _offset_in_domain(rng, fmap.domain, x, r_min, r_max)
        fx, fy = fmap(x), fmap(y)
        df, dx = fx - fy, x - y
        nf, nx = float(np.linalg.norm(df)), float(np.linalg.norm(dx))
        if nf < DEGENERATE_IMAGE or nx == 0.0:
            rows.append({"trial": i, "x": x, "y": y, "ratio": math.nan, "skipped": True})
            continue
        ratio = _cos_angle(df / nf, dx / nx)
        rows.append({"trial": i, "x": x, "y": y, "ratio": ratio, "skipped": False})
        if ratio < best:
            best, witness = ratio, {"x": x, "y": y, "Fx": fx, "Fy": fy}
    if not witness:
        raise AllPairsDegenerate(f"every sampled pair of {fmap.name} has |F(x)-F(y)| < {DEGENERATE_IMAGE}")
    verdict = PASS if best > 0.0 else FAIL
    return CheckReport("delta-monotone <F(x)-F(y),x-y> >= delta |F(x)-F(y)||x-y|", best, trials, witness,
                       seed, verdict, rows, extreme="min")


# -- quasisymmetry ----------------------------------------------------------------

@dataclass
class EtaEstimate:
    """Empirical modulus of quasisymmetry on ``t_grid``.

    ``raw_max`` holds the per-bin maxima (``nan`` for empty bins) and
    ``eta_values`` their least nondecreasing majorant.
    """

    t_grid: np.ndarray
    eta_values: np.ndarray
    raw_max: np.ndarray
    counts: np.ndarray
    report: CheckReport = field(repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.t_grid) <= 0.0) or np.any(self.t_grid <= 0.0):
            raise ValueError("t_grid must be increasing and positive")


def monotone_envelope(values):
    """Least nondecreasing sequence bounding ``values`` from above (``nan`` entries skipped)."""
    out = np.array(values, float)
    run = -math.inf
    for i, v in enumerate(out):
        if not math.isnan(v):
            run = max(run, v)
        out[i] = run if run > -math.inf else math.nan
    return out


def quasisymmetry_eta_estimate(fmap, trials=100, t_grid=(0.25, 0.5, 1.0, 2.0, 4.0), seed=0,
                               r_min=1e-3, r_max=0.5, bin_factor=1.1):
    """Per ``t`` the max of ``|f(x)-f(z)| / |f(y)-f(z)|`` over ``trials`` triples with
    ``|x-z| / |y-z|`` log-uniform in ``[t / bin_factor, t * bin_factor]``."""
    t_grid = np.asarray(t_grid, float)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if bin_factor < 1.0:
        raise ValueError("bin_factor must be >= 1")
    n = fmap.n
    raw = np.full(t_grid.shape, math.nan)
    counts = np.zeros(t_grid.shape, int)
    rows = []
    best, witness = -math.inf, {}
    for b, t in enumerate(t_grid):
        for i in range(trials):
            rng = trial_rng(seed, b * trials + i)
            z = fmap.domain.sample(rng)
            s = float(log_uniform(rng, r_min, r_max))
            ratio_in = t if bin_factor == 1.0 else float(log_uniform(rng, t / bin_factor, t * bin_factor))
            y = z + s * random_unit(rng, n)
            x = z + ratio_in * s * random_unit(rng, n)
            fx, fy, fz = fmap(x), fmap(y), fmap(z)
            den = float(np.linalg.norm(fy - fz))
            if den == 0.0:
                raise InjectivityViolation(f"{fmap.name} is not injective: f(y) = f(z)", {"y": y, "z": z})
            if float(np.linalg.norm(fx - fz)) == 0.0:
                raise InjectivityViolation(f"{fmap.name} is not injective: f(x) = f(z)", {"x": x, "z": z})
            ratio = float(np.linalg.norm(fx - fz)) / den
            rows.append({"t": t, "trial": i, "x": x, "y": y, "z": z,
                         "input_ratio": float(np.linalg.norm(x - z) / np.linalg.norm(y - z)),
                         "image_ratio": ratio})
            counts[b] += 1
            raw[b] = ratio if math.isnan(raw[b]) else max(raw[b], ratio)
            if ratio / t > best:
                best, witness = ratio / t, {"t": t, "x": x, "y": y, "z": z, "image_ratio": ratio}
    eta = monotone_envelope(raw)
    verdict = PASS if np.all(np.isfinite(eta)) else FAIL
    report = CheckReport("quasisymmetry |f(x)-f(z)|/|f(y)-f(z)| <= eta(|x-z|/|y-z|), max eta(t)/t", best,
                         trials * len(t_grid), witness, seed, verdict, rows)
    return EtaEstimate(t_grid, eta, raw, counts, report)


# -- oriented boxes -------------------------------------------------------------

def _box_axes(box):
    return box.rotation.T  # rows are the box's edge directions


def boxes_intersect(b1, b2, tol=0.0):
    """Separating-axis test for two closed oriented boxes in dimension 1, 2 or 3."""
    n = b1.n
    axes = list(_box_axes(b1)) + list(_box_axes(b2))
    if n == 3:
        for u in _box_axes(b1):
            for w in _box_axes(b2):
                c = np.cross(u, w)
                if np.linalg.norm(c) > 1e-12:
                    axes.append(c / np.linalg.norm(c))
    elif n > 3:
        raise ValueError("separating-axis test implemented for n <= 3")
    d = np.asarray(b2.center) - np.asarray(b1.center)
    for a in axes:
        r1 = float(np.sum(np.abs(_box_axes(b1) @ a) * b1.half_lengths))
        r2 = float(np.sum(np.abs(_box_axes(b2) @ a) * b2.half_lengths))
        if abs(float(d @ a)) > r1 + r2 + tol:
            return False
    return True


def box_distance(b1, b2):
    """Euclidean distance between two oriented boxes (bounded least squares)."""
    A = np.hstack([b1.rotation, -b2.rotation])
    rhs = np.asarray(b2.center) - np.asarray(b1.center)
    h = np.concatenate([b1.half_lengths, b2.half_lengths])
    sol = lsq_linear(A, rhs, bounds=(-h, h), method="bvls")
    return float(np.linalg.norm(A @ sol.x - rhs))


def random_box(rng, domain, scale_range, aspect_max):
    """A box centred in ``domain``, random orientation, half-lengths in ``[s, s * rho]``."""
    n = domain.n
    s = float(log_uniform(rng, *scale_range))
    rho = float(log_uniform(rng, 1.0, aspect_max)) if aspect_max > 1.0 else 1.0
    half = s * rho ** rng.uniform(size=n)
    return OrientedBox(domain.sample(rng), half, random_rotation(rng, n))


def congruent_partner(rng, box, max_tries=1000, require_intersection=True, max_shift=None):
    """A rigid motion of ``box``: rotation about a point of ``box``, then a translation."""
    n = box.n
    shift = box.diameter if max_shift is None else max_shift
    for _ in range(max_tries):
        p = box.sample(rng)
        Q = random_rotation(rng, n)
        center = p + Q @ (np.asarray(box.center) - p)
        center = center + shift * rng.uniform() ** (1.0 / n) * random_unit(rng, n)
        other = OrientedBox(center, box.half_lengths, Q @ box.rotation)
        if not require_intersection or boxes_intersect(box, other):
            return other
    raise RuntimeError("no intersecting congruent partner found")


def _mass_pair(mu, b1, b2, cfg):
    m1 = mass_estimate(mu, b1, cfg)
    m2 = mass_estimate(mu, b2, cfg)
    return m1, m2


def _two_sided_ratio(a, b):
    if a <= 0.0 and b <= 0.0:
        return math.nan
    if a <= 0.0 or b <= 0.0:
        return math.inf
    return max(a / b, b / a)


def isotropic_doubling_check(mu, trials=100, scale_range=(1e-2, 1.0), aspect_max=10.0, seed=0, cfg=None,
                             domain=None):
    """``A_hat``: max of ``mu(R1)/mu(R2)`` over sampled intersecting congruent boxes."""
    if aspect_max < 1.0:
        raise ValueError("aspect_max must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = cfg or QuadratureConfig()
    domain = domain or Ball(np.zeros(mu.n), 1.0)
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        b1 = random_box(rng, domain, scale_range, aspect_max)
        b2 = congruent_partner(rng, b1)
        m1, m2 = _mass_pair(mu, b1, b2, cfg)
        ratio = _two_sided_ratio(m1.scalar, m2.scalar)
        row = {"trial": i, "center1": b1.center, "center2": b2.center, "half": b1.half_lengths,
               "rotation1": b1.rotation, "rotation2": b2.rotation, "mass1": m1.scalar, "mass2": m2.scalar,
               "ratio": ratio}
        rows.append(row)
        if not (m1.converged and m2.converged):
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if not math.isfinite(ratio):
            verdict = FAIL
            row["zero_mass"] = True
            ratio = math.inf
        if ratio > best:
            best, witness = ratio, {"box1": b1.as_tuple(), "box2": b2.as_tuple(), "mass1": m1.scalar,
                                    "mass2": m2.scalar}
    return CheckReport("isotropic doubling mu(R1) <= A mu(R2) for congruent intersecting boxes", best, trials,
                       witness, seed, verdict, rows)


def example_witness_boxes(n, eps):
    """``R1 = [-1,1] x [-eps,eps]^{n-1}`` and ``R2 = [1,3] x [1-eps,1+eps]^{n-1}``."""
    half = np.array([1.0] + [eps] * (n - 1))
    return (OrientedBox(np.zeros(n), half), OrientedBox(np.array([2.0] + [1.0] * (n - 1)), half))


def witness_box_ratio(mu, eps, cfg=None):
    """``mu(R1) / mu(R2)`` for the thin witness boxes of half-width ``eps``."""
    cfg = cfg or QuadratureConfig()
    r1, r2 = example_witness_boxes(mu.n, eps)
    m1, m2 = _mass_pair(mu, r1, r2, cfg)
    if m2.scalar <= 0.0:
        raise ZeroMass("witness box R2 carries no mass")
    return m1.scalar / m2.scalar


def chain_length(distance, diameter):
    """``m = ceil(dist / diam) + 1`` intersecting steps between congruent boxes."""
    return int(math.ceil(distance / diameter)) + 1


def chaining_check(mu, a_hat, trials=50, scale_range=(1e-2, 1.0), aspect_max=10.0, seed=0, cfg=None,
                   domain=None, max_separation=3.0):
    """Max of ``log(ratio) / (m log A_hat)`` over congruent boxes at distance ``d``;
    chaining predicts ``ratio <= A_hat^m`` so the statistic stays ``<= 1``."""
    if a_hat < 1.0:
        raise ValueError("a_hat must be >= 1")
    cfg = cfg or QuadratureConfig()
    domain = domain or Ball(np.zeros(mu.n), 1.0)
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        b1 = random_box(rng, domain, scale_range, aspect_max)
        b2 = congruent_partner(rng, b1, require_intersection=False, max_shift=max_separation * b1.diameter)
        d = box_distance(b1, b2)
        m = chain_length(d, b1.diameter)
        m1, m2 = _mass_pair(mu, b1, b2, cfg)
        ratio = _two_sided_ratio(m1.scalar, m2.scalar)
        if not math.isfinite(ratio):
            stat = math.inf
            verdict = FAIL
        elif a_hat == 1.0:
            stat = 0.0 if ratio <= 1.0 + cfg.rel_tol else math.inf
        else:
            stat = math.log(ratio) / (m * math.log(a_hat))
        rows.append({"trial": i, "distance": d, "diameter": b1.diameter, "m": m, "ratio": ratio,
                     "bound": a_hat ** m, "statistic": stat})
        if not (m1.converged and m2.converged):
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if stat > best:
            best, witness = stat, {"box1": b1.as_tuple(), "box2": b2.as_tuple(), "distance": d, "m": m,
                                   "ratio": ratio}
    if best > 1.0:
        verdict = FAIL
    return CheckReport("chained boxes mu(R1)/mu(R2) <= A^m, m = ceil(dist/diam)+1", best, trials, witness, seed,
                       verdict, rows)


# -- segment integrals -----------------------------------------------------------

def _weight_function(weight):
    if isinstance(weight, Measure):
        return lambda Z: weight.density(Z)
    if callable(weight):
        return weight
    raise TypeError("weight must be a Measure or a callable on (m, n) arrays")


def segment_mean(weight, x0, v, cfg=None):
    """``(int_0^1 w(x0 + t v) dt, converged)``.

    Riesz products use their exact cosine expansion; other weights the
    composite midpoint rule with Richardson extrapolation.
    """
    cfg = cfg or QuadratureConfig()
    x0, v = np.asarray(x0, float), np.asarray(v, float)
    if isinstance(weight, RieszProduct):
        return riesz_segment_mean(weight.n, weight.m, x0, v), True
    w = _weight_function(weight)
    return midpoint_richardson(lambda t: w(x0 + t[:, None] * v), 0.0, 1.0, m=64,
                               rel_tol=max(cfg.rel_tol, 1e-12))


def segment_integral_check(weight, trials=100, seed=0, cfg=None, domain=None, r_min=1e-2, r_max=1.0, n=None):
    """``C_hat``: max ratio of the means of ``w`` over ``x0 + t v`` and ``x0 + t v'``, ``|v| = |v'|``."""
    cfg = cfg or QuadratureConfig()
    n = n or getattr(weight, "n", None)
    if n is None:
        raise ValueError("dimension n is required for callable weights")
    domain = domain or Ball(np.zeros(n), 1.0)
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        x0 = domain.sample(rng)
        r = float(log_uniform(rng, r_min, r_max))
        v, vp = r * random_unit(rng, n), r * random_unit(rng, n)
        a, ok_a = segment_mean(weight, x0, v, cfg)
        b, ok_b = segment_mean(weight, x0, vp, cfg)
        ratio = _two_sided_ratio(a, b)
        rows.append({"trial": i, "x0": x0, "v": v, "v_prime": vp, "mean_v": a, "mean_v_prime": b,
                     "ratio": ratio})
        if not (ok_a and ok_b):
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if not math.isfinite(ratio):
            verdict = FAIL
            ratio = math.inf
        if ratio > best:
            best, witness = ratio, {"x0": x0, "v": v, "v_prime": vp, "mean_v": a, "mean_v_prime": b}
    return CheckReport("segment integrals int w(x0+tv) <= C int w(x0+tv'), |v| = |v'|", best, trials, witness,
                       seed, verdict, rows)


def segment_chain_length(n):
    """``N = ceil(2 sqrt(n-1) + 2)`` segments linking two boxes; ``A = C^(N-1)``."""
    return int(math.ceil(2.0 * math.sqrt(n - 1) + 2.0))


# -- face projections -------------------------------------------------------------

def face_projection_check(mu, cube, cfg=None, k=8, face_axis=0, seed=0):
    """Max/min of the projected masses of the ``k^(n-1)`` cells of the face normal to ``face_axis``.

    Each cell's pushforward mass is the mass of the column of ``cube`` above it.
    """
    cfg = cfg or QuadratureConfig()
    n = cube.n
    if not np.allclose(cube.rotation, np.eye(n)):
        raise ValueError("cube must be axis-aligned; rotate the measure instead")
    half = np.asarray(cube.half_lengths, float)
    if not np.allclose(half, half[0]):
        raise ValueError("region is not a cube")
    if k < 1:
        raise ValueError("k must be >= 1")
    c = np.asarray(cube.center, float)
    other = [j for j in range(n) if j != face_axis]
    cell_half = half[0] / k
    rows, verdict = [], PASS
    masses = []
    for idx in np.ndindex(*([k] * (n - 1))):
        center = c.copy()
        hl = np.full(n, cell_half)
        hl[face_axis] = half[0]
        for j, ij in zip(other, idx):
            center[j] = c[j] - half[0] + (2 * ij + 1) * cell_half
        est = mass_estimate(mu, OrientedBox(center, hl), cfg)
        masses.append(est.scalar)
        rows.append({"cell": list(idx), "center": center, "mass": est.scalar})
        if not est.converged:
            verdict = worse_verdict(verdict, INCONCLUSIVE)
    masses = np.array(masses)
    lo, hi = float(masses.min()), float(masses.max())
    if lo <= 0.0:
        ratio = math.inf if hi > 0.0 else math.nan
        verdict = FAIL
    else:
        ratio = hi / lo
    witness = {"argmax_cell": rows[int(masses.argmax())]["cell"], "argmin_cell": rows[int(masses.argmin())]["cell"],
               "max_mass": hi, "min_mass": lo}
    return CheckReport("face projection pushforward comparable to L^(n-1)", ratio, len(rows), witness, seed,
                       verdict, rows)


# -- ULNC ---------------------------------------------------------------------------

ULNC_GRID = np.linspace(0.0, 1.0, 1025)


def _points(anchor_set):
    if isinstance(anchor_set, SelfSimilarSet):
        return anchor_set.points
    return np.atleast_2d(np.asarray(anchor_set, float))


def segment_clearance(tree, a, b, grid=ULNC_GRID):
    """``max_c dist(c, A)`` over grid points ``c`` of ``[a, b]``."""
    C = a[None, :] + grid[:, None] * (b - a)[None, :]
    d, _ = tree.query(C)
    return float(d.max())


class ULNCResult(NamedTuple):
    tau_hat: float
    tau_prime: float
    arbitrary_min_ratio: float
    report: CheckReport


def ulnc_check(anchor_set, trials=1000, seed=0, arbitrary_trials=1000, resolution_floor=2.0 / 1024.0):
    """``tau_hat``: least sampled ``max_{c in [a,b]} dist(c, A) / |a - b|`` over pairs of ``A``.

    ``trials=None`` enumerates every pair.  The reformulation with
    ``tau' = tau_hat / (2 + 2 tau_hat)`` is then tested on ``arbitrary_trials``
    pairs drawn from a box around ``A``; ``arbitrary_min_ratio`` is the least
    ``clearance / (tau' |a - b|)`` seen, and must stay ``>= 0.99``.
    """
    A = _points(anchor_set)
    N, n = A.shape
    if N < 2 or len(np.unique(A, axis=0)) < 2:
        raise SetTooSmall("an ULNC check needs at least two distinct points")
    tree = cKDTree(A)
    rows = []
    best, witness = math.inf, {}
    if trials is None:
        iu, ju = np.triu_indices(N, 1)
        pairs = list(zip(iu, ju))
    else:
        pairs = []
        for i in range(trials):
            rng = trial_rng(seed, i)
            p, q = rng.choice(N, 2, replace=False)
            pairs.append((p, q))
    for i, (p, q) in enumerate(pairs):
        a, b = A[p], A[q]
        L = float(np.linalg.norm(a - b))
        if L == 0.0:
            continue
        ratio = segment_clearance(tree, a, b) / L
        rows.append({"pair": i, "a": a, "b": b, "ratio": ratio})
        if ratio < best:
            best, witness = ratio, {"a": a, "b": b}
    tau_hat = best
    tau_prime = tau_hat / (2.0 + 2.0 * tau_hat)
    lo, hi = A.min(axis=0), A.max(axis=0)
    pad = 0.25 * max(float(np.max(hi - lo)), 1e-12)
    lemma_min = math.inf
    for i in range(arbitrary_trials):
        rng = trial_rng(seed, 10 ** 9 + i)
        a = rng.uniform(lo - pad, hi + pad)
        b = rng.uniform(lo - pad, hi + pad)
        L = float(np.linalg.norm(a - b))
        if L == 0.0 or tau_prime <= 0.0:
            continue
        r = segment_clearance(tree, a, b) / (tau_prime * L)
        if r < lemma_min:
            lemma_min = r
            witness["arbitrary_a"], witness["arbitrary_b"] = a, b
    verdict = PASS
    if tau_hat < resolution_floor:
        verdict = FAIL
    elif lemma_min < 0.99:
        verdict = FAIL
    witness["arbitrary_min_ratio"] = lemma_min
    report = CheckReport("ULNC min over pairs of max clearance on [a,b] / |a-b|", tau_hat, max(len(rows), 1),
                         witness, seed, verdict, rows, extreme="min")
    return ULNCResult(tau_hat, tau_prime, lemma_min, report)


def distance_weight_bounds_check(anchor_set, p, tau_hat, trials=200, seed=0, domain=None, r_min=1e-3, r_max=1.0):
    """Segment means of ``w = dist(., A)^p`` against the two-sided bound
    ``c |v| <= (int_0^1 w(x0 + t v) dt)^(1/p) <= 3 max(dist(x0, A), |v|)``.

    ``c = (tau'/2)^(1 + 1/p)``: the clear ball from the ULNC reformulation
    leaves a ``tau'/2`` fraction of the segment at distance ``>= tau' |v| / 2``.
    The statistic is the worse of ``upper_ratio`` (should be ``<= 1``) and
    ``1 / lower_ratio`` (should be ``<= 1``).
    """
    A = _points(anchor_set)
    n = A.shape[1]
    mu = DistancePower(A, p, n)
    tau_prime = tau_hat / (2.0 + 2.0 * tau_hat)
    c = (tau_prime / 2.0) ** (1.0 + 1.0 / p)
    if domain is None:
        center = A.mean(axis=0)
        domain = Ball(center, 1.5 * float(np.max(np.linalg.norm(A - center, axis=1))) + 1e-3)
    rows, verdict = [], PASS
    best, witness = -math.inf, {}
    for i in range(trials):
        rng = trial_rng(seed, i)
        x0 = domain.sample(rng)
        v = float(log_uniform(rng, r_min, r_max)) * random_unit(rng, n)
        mean, ok = segment_mean(mu, x0, v)
        g = mean ** (1.0 / p)
        d0 = float(mu.distance(x0[None, :])[0])
        r = float(np.linalg.norm(v))
        upper = g / (3.0 * max(d0, r))
        lower = g / (c * r)
        stat = max(upper, 1.0 / lower) if lower > 0.0 else math.inf
        rows.append({"trial": i, "x0": x0, "v": v, "dist": d0, "root_mean": g, "upper_ratio": upper,
                     "lower_ratio": lower})
        if not ok:
            verdict = worse_verdict(verdict, INCONCLUSIVE)
        if stat > best:
            best, witness = stat, {"x0": x0, "v": v, "dist": d0, "root_mean": g}
    if best > 1.0:
        verdict = FAIL
    return CheckReport("distance weight c|v| <= (int dist^p)^(1/p) <= 3 max(dist, |v|)", best, trials, witness,
                       seed, verdict, rows)
