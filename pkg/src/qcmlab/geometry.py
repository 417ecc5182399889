"""Triangle quantities attached to a pair ``x, y`` seen from a third point ``z``.

All angles are computed with ``atan2(|u x v|, u . v)``, which stays accurate
near 0 and pi where ``arccos`` of a normalised dot product does not.
"""
from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DegenerateTriple

DEGENERACY_RTOL = 1e-14


def as_point(x):
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or not 1 <= p.shape[0] <= 3:
        raise ValueError(f"a point must be a vector in R^n with n in 1..3, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    return p


def _cross_norm(u, v):
    """|u x v| along the last axis for n = 1, 2 or 3."""
    n = u.shape[-1]
    if n == 1:
        return np.zeros(np.broadcast_shapes(u.shape, v.shape)[:-1])
    if n == 2:
        return np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    return np.linalg.norm(np.cross(u, v), axis=-1)


def angle_between(u, v):
    """Angle in [0, pi] between vectors ``u`` and ``v`` (broadcast on leading axes)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.arctan2(_cross_norm(u, v), np.sum(u * v, axis=-1))


def _check_triple(x, y, z):
    x, y, z = as_point(x), as_point(y), as_point(z)
    if not x.shape == y.shape == z.shape:
        raise ValueError("points must share the same dimension")
    scale = max(np.abs(x).max(), np.abs(y).max(), np.abs(z).max())
    tol = DEGENERACY_RTOL * scale
    for a, b, names in ((x, y, "x, y"), (x, z, "x, z"), (y, z, "y, z")):
        d = np.linalg.norm(a - b)
        if d == 0.0 or d < tol:
            raise DegenerateTriple(f"points {names} coincide (distance {d:.3g})")
    return x, y, z


def perimeter(x, y, z):
    x, y, z = _check_triple(x, y, z)
    return float(np.linalg.norm(x - y) + np.linalg.norm(x - z) + np.linalg.norm(y - z))


def _base_angles(x, y, z):
    # angle at x between y - x and z - x, and at y between x - y and z - y
    return float(angle_between(y - x, z - x)), float(angle_between(x - y, z - y))


def tau(x, y, z):
    """pi minus the larger of the triangle angles at ``x`` and at ``y``."""
    x, y, z = _check_triple(x, y, z)
    ax, ay = _base_angles(x, y, z)
    return math.pi - max(ax, ay)


@dataclass(frozen=True)
class TriangleStats:
    perimeter_l: float
    angle_x: float
    angle_y: float
    angle_z: float
    tau: float


def triangle_stats(x, y, z):
    x, y, z = _check_triple(x, y, z)
    ax, ay = _base_angles(x, y, z)
    az = float(angle_between(x - z, y - z))
    l = float(np.linalg.norm(x - y) + np.linalg.norm(x - z) + np.linalg.norm(y - z))
    return TriangleStats(l, ax, ay, az, math.pi - max(ax, ay))


def unit_kernel(z, x):
    """Unit vector pointing from ``z`` toward ``x``."""
    z, x = as_point(z), as_point(x)
    d = x - z
    r = np.linalg.norm(d)
    if r == 0.0 or r < DEGENERACY_RTOL * max(np.abs(x).max(), np.abs(z).max()):
        raise DegenerateTriple("unit_kernel needs x != z")
    return d / r


def kernel_diff_exact(x, y, z):
    """Both sides of the closed form for ``|g_z(x) - g_z(y)|``.

    Returns ``(lhs, rhs)`` where ``lhs`` is computed from the unit vectors and
    ``rhs = 2|x-y| / (|x-z| + |y-z|) * cos((angle_y - angle_x) / 2)``.
    """
    x, y, z = _check_triple(x, y, z)
    lhs = float(np.linalg.norm(unit_kernel(z, x) - unit_kernel(z, y)))
    ax, ay = _base_angles(x, y, z)
    s = np.linalg.norm(x - z) + np.linalg.norm(y - z)
    rhs = float(2.0 * np.linalg.norm(x - y) / s * math.cos((ay - ax) / 2.0))
    return lhs, rhs


def kernel_inner_exact(x, y, z):
    """Both sides of the closed form for ``<g_z(x) - g_z(y), x - y>``."""
    x, y, z = _check_triple(x, y, z)
    lhs = float(np.dot(unit_kernel(z, x) - unit_kernel(z, y), x - y))
    ax, ay = _base_angles(x, y, z)
    s = np.linalg.norm(x - z) + np.linalg.norm(y - z)
    d = np.linalg.norm(x - y)
    rhs = float(2.0 * d * d / s * math.cos((ay - ax) / 2.0) ** 2)
    return lhs, rhs


def tau_cos_sandwich(x, y, z):
    """``(tau/pi, cos((angle_y - angle_x)/2), tau)``; the middle lies between the outer two."""
    x, y, z = _check_triple(x, y, z)
    ax, ay = _base_angles(x, y, z)
    t = math.pi - max(ax, ay)
    return t / math.pi, math.cos((ay - ax) / 2.0), t


# Vectorised forms used by the quadrature integrands. ``Z`` has shape (m, n);
# no degeneracy checks, callers keep nodes off x and y.

def tau_many(x, y, Z):
    ax = angle_between(y - x, Z - x)
    ay = angle_between(x - y, Z - y)
    return np.pi - np.maximum(ax, ay)


def perimeter_many(x, y, Z):
    return (np.linalg.norm(x - y) + np.linalg.norm(Z - x, axis=-1)
            + np.linalg.norm(Z - y, axis=-1))


def _unit_rows(V):
    return V / np.linalg.norm(V, axis=-1, keepdims=True)


def kernel_diff_exact_many(X, Y, Z):
    """Row-wise ``kernel_diff_exact`` for ``(m, n)`` arrays; no degeneracy checks."""
    lhs = np.linalg.norm(_unit_rows(X - Z) - _unit_rows(Y - Z), axis=-1)
    ax, ay = angle_between(Y - X, Z - X), angle_between(X - Y, Z - Y)
    s = np.linalg.norm(X - Z, axis=-1) + np.linalg.norm(Y - Z, axis=-1)
    return lhs, 2.0 * np.linalg.norm(X - Y, axis=-1) / s * np.cos((ay - ax) / 2.0)


def kernel_inner_exact_many(X, Y, Z):
    """Row-wise ``kernel_inner_exact`` for ``(m, n)`` arrays; no degeneracy checks."""
    lhs = np.sum((_unit_rows(X - Z) - _unit_rows(Y - Z)) * (X - Y), axis=-1)
    ax, ay = angle_between(Y - X, Z - X), angle_between(X - Y, Z - Y)
    s = np.linalg.norm(X - Z, axis=-1) + np.linalg.norm(Y - Z, axis=-1)
    d = np.linalg.norm(X - Y, axis=-1)
    return lhs, 2.0 * d * d / s * np.cos((ay - ax) / 2.0) ** 2
