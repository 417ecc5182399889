import math

import numpy as np
import pytest

from qcmlab import counterexample as ce
from qcmlab.exceptions import PrecisionLoss
from qcmlab.singular import Lambda_m_many, lambda_k_many


def test_h0_is_minus_t(rng):
    t = rng.uniform(-5, 5, 20)
    np.testing.assert_array_equal(ce.h_k_many(2, 0, t), -t)


def test_h1_at_zero():
    assert ce.h_k(2, 1, 0.0) == 0.0


@pytest.mark.parametrize("k", [1, 2])
def test_gap_bounds_on_grid(k):
    t = np.linspace(-1.0, 1.0, 10 ** 4)
    gap = ce.h_k_many(2, k, t) - ce.h_k_many(2, k - 1, t)
    assert np.all(gap >= -1e-15)
    assert np.all(gap <= ce.gap_bound(2, k) * (1 + 1e-12))
    np.testing.assert_allclose(ce.staircase_gap(2, k, t), gap, atol=1e-14)


@pytest.mark.parametrize("k", [1, 2])
def test_staircase_hits_peak(k):
    t = np.linspace(-1.0, 1.0, 1001)
    X = np.stack([t, ce.h_k_many(2, k, t)], axis=1)
    np.testing.assert_allclose(lambda_k_many(2, k, X), 1.5, atol=1e-9)


def test_h_decreasing_with_slope():
    s = ce.Staircase(2, 1)
    t = np.linspace(-1.0, 1.0, 20001)
    assert np.all(np.diff(s(t)) < 0.0)
    a, b, s0, s1 = s.pieces(-1.0, 1.0)
    np.testing.assert_allclose((s1 - s0) / (b - a), s.slope, rtol=1e-9)


def test_jump_count_and_sizes():
    s = ce.Staircase(2, 1)
    d = ce.jump_spacing(2, 1)
    t, sizes = s.breakpoints(0.0, 1.0)
    assert len(t) == math.floor(1.0 / d)
    delta = 1e-9
    drops = s(t - delta) - s(t + delta) - 2 * delta * abs(s.slope)
    np.testing.assert_allclose(drops, sizes, rtol=1e-6)


def test_jump_sizes_level_two():
    s = ce.Staircase(2, 2)
    t, sizes = s.breakpoints(0.0, 0.01)
    delta = 1e-12
    drops = s(t - delta) - s(t + delta)
    np.testing.assert_allclose(drops, sizes, rtol=1e-6, atol=1e-12)


def test_gamma_K0_is_segment():
    p = ce.gamma_polyline(2, 0, (-1.0, 1.0))
    np.testing.assert_array_equal(p, [[-1.0, 1.0], [1.0, -1.0]])


def test_gamma_second_coordinate_nonincreasing():
    for K in (1, 2):
        p = ce.gamma_polyline(2, K, (-0.2, 0.2))
        assert np.all(np.diff(p[:, 0]) >= 0.0)
        assert np.all(np.diff(p[:, 1]) <= 0.0)
        t, sizes = ce.Staircase(2, K).breakpoints(-0.2, 0.2)
        assert p[0, 1] - p[-1, 1] <= 0.4 * (1 + 1) + sizes.sum() + 1e-12


def test_gamma_resolution_refines():
    p = ce.gamma_polyline(2, 1, (0.0, 0.1), resolution=1e-3)
    assert np.max(np.diff(p[:, 0])) <= 1e-3 + 1e-15


@pytest.mark.parametrize("K", [0, 1, 2])
def test_chord_arc(K):
    p = ce.gamma_polyline(2, K, (-0.1, 0.1))
    assert ce.chord_arc_estimate(p, pairs=20000) <= 2.0


def test_on_curve_bounds():
    res = ce.on_curve_check(2, 2, np.linspace(-1, 1, 2001))
    assert res.min_margin >= 0.0 and res.product_margin >= 0.0


def test_level_budget():
    with pytest.raises(PrecisionLoss):
        ce.h_k(2, 4, 0.1)
    with pytest.raises(ValueError):
        ce.h_k(1, 1, 0.1)


def test_tube_K0_closed_form():
    eps = 0.01
    m, err = ce.tube_mass(2, 0, eps)
    exact = 2 * eps * 2 * math.sqrt(2) + math.pi * eps ** 2
    assert abs(m - exact) <= err
    assert m == pytest.approx(exact, rel=1e-5)


def _segment_distance(P, A, B):
    d = B - A
    u = np.clip(((P - A) @ d) / (d @ d), 0.0, 1.0)
    return np.linalg.norm(P - (A + u[:, None] * d), axis=1)


def test_tube_K1_grid_oracle():
    n, K, eps, window = 2, 1, 0.02, 0.05
    m, err = ce.tube_mass(n, K, eps, window=window)
    poly = ce.gamma_polyline(n, K, (-window, window))
    cells = 1600
    lo, hi = poly.min(axis=0) - eps, poly.max(axis=0) + eps
    gx = lo[0] + (np.arange(cells) + 0.5) * (hi[0] - lo[0]) / cells
    gy = lo[1] + (np.arange(cells) + 0.5) * (hi[1] - lo[1]) / cells
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    dist = np.min([_segment_distance(P, a, b) for a, b in zip(poly[:-1], poly[1:])], axis=0)
    inside = dist <= eps
    brute = float(Lambda_m_many(n, K, P[inside]).sum()) * (hi[0] - lo[0]) * (hi[1] - lo[1]) / cells ** 2
    assert m == pytest.approx(brute, rel=2e-3)


def test_probe_rows_shape():
    rows = ce.neighborhood_mass_probe(2, (0,))
    assert rows[0].epsilon == 1.0
    assert abs(rows[0].mass_over_epsilon - (4 * math.sqrt(2) + math.pi)) <= rows[0].error
