"""Seeded sampling primitives shared by the randomized checks.

Each trial draws from its own generator ``default_rng([master_seed, index])``
so trials can run in any order, or concurrently, and still reproduce.
"""
import math

import numpy as np


def trial_rng(master_seed, index):
    return np.random.default_rng([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])


def random_rotation(rng, n):
    """Haar-distributed rotation (determinant +1) from the QR of a Gaussian matrix."""
    if n == 1:
        return np.eye(1)
    A = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_unit(rng, n):
    v = rng.standard_normal(n)
    while np.linalg.norm(v) < 1e-12:
        v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def uniform_in_ball(rng, center, radius):
    center = np.asarray(center, float)
    n = center.shape[0]
    return center + radius * rng.uniform() ** (1.0 / n) * random_unit(rng, n)
