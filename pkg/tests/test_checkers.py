import math

import numpy as np
import pytest

from qcmlab import checkers as ck
from qcmlab import mapping as mp
from qcmlab import measures as ms
from qcmlab.exceptions import SetTooSmall
from qcmlab.quadrature import QuadratureConfig

from oracles import linear_delta


def test_delta_identity():
    rep = ck.delta_monotone_estimate(ck.identity_map(), trials=50)
    assert rep.estimated_constant == pytest.approx(1.0, abs=1e-12)
    assert rep.verdict == "pass"


def test_delta_linear_matches_direction_scan():
    M = np.diag([1.0, 4.0])
    rep = ck.delta_monotone_estimate(ck.linear_map(M), trials=2000)
    want = linear_delta(M)
    assert want == pytest.approx(0.8, abs=1e-6)
    assert want - 1e-9 <= rep.estimated_constant <= want + 0.02


def test_delta_power_map_positive():
    rep = ck.delta_monotone_estimate(ck.power_map(0.5), trials=300)
    assert rep.estimated_constant > 0.0
    assert rep.verdict == "pass"


def test_delta_reflection_fails():
    rep = ck.delta_monotone_estimate(ck.linear_map(np.diag([1.0, -1.0])), trials=50)
    assert rep.verdict == "fail"


def test_eta_identity():
    est = ck.quasisymmetry_eta_estimate(ck.identity_map(), trials=20, bin_factor=1.0)
    np.testing.assert_allclose(est.eta_values, est.t_grid, rtol=1e-12)


def test_eta_linear_within_singular_value_bounds():
    # |M a| / |M b| lies in [t s_min / s_max, t s_max / s_min] for |a| / |b| = t
    est = ck.quasisymmetry_eta_estimate(ck.linear_map(np.diag([1.0, 2.0])), trials=200, bin_factor=1.0)
    assert np.all(est.eta_values <= 2.0 * est.t_grid + 1e-12)
    assert np.all(est.eta_values >= est.t_grid / 2.0)
    assert np.all(est.eta_values >= est.t_grid * (1 - 1e-12))


def test_eta_kernel_map_finite_nondecreasing():
    ev = mp.KernelMapEval(ms.UniformBall((0, 0), 1.0))
    est = ck.quasisymmetry_eta_estimate(ck.kernel_map(ev), trials=4, r_min=1e-2, r_max=0.2)
    assert np.all(np.isfinite(est.eta_values))
    assert np.all(np.diff(est.eta_values) >= 0.0)


def test_monotone_envelope():
    out = ck.monotone_envelope([1.0, math.nan, 0.5, 2.0, 1.5])
    np.testing.assert_array_equal(out, [1.0, 1.0, 1.0, 2.0, 2.0])


def test_isotropic_constant_weight():
    cfg = QuadratureConfig()
    rep = ck.isotropic_doubling_check(ms.lebesgue(2), trials=20, cfg=cfg)
    assert rep.estimated_constant == pytest.approx(1.0, abs=2 * cfg.rel_tol)


def test_congruent_partner_intersects(rng):
    dom = ms.Ball((0, 0), 1.0)
    for _ in range(20):
        b1 = ck.random_box(rng, dom, (1e-2, 1.0), 10.0)
        b2 = ck.congruent_partner(rng, b1)
        np.testing.assert_allclose(b1.half_lengths, b2.half_lengths)
        assert ck.boxes_intersect(b1, b2)


def test_segment_constant_weight():
    rep = ck.segment_integral_check(ms.lebesgue(2), trials=20)
    assert rep.estimated_constant == pytest.approx(1.0, abs=1e-12)


def _dense_mean(w, x0, v, nodes=10 ** 5):
    t = (np.arange(nodes) + 0.5) / nodes
    return float(np.mean(w(x0 + t[:, None] * v)))


def test_segment_distance_power_matches_dense_oracle():
    mu = ms.DistancePower([[0.0, 0.0], [1.0, 0.0]], p=1.0)
    rep = ck.segment_integral_check(mu, trials=30)
    assert math.isfinite(rep.estimated_constant)
    brute = 0.0
    for row in rep.rows:
        a = _dense_mean(mu.density, row["x0"], row["v"])
        b = _dense_mean(mu.density, row["x0"], row["v_prime"])
        brute = max(brute, a / b, b / a)
    assert rep.estimated_constant == pytest.approx(brute, rel=1e-6)


def test_segment_chain_length():
    assert ck.segment_chain_length(2) == 4
    assert ck.segment_chain_length(3) == 5


def test_face_projection_constant_weight():
    rep = ck.face_projection_check(ms.lebesgue(2), ms.OrientedBox((0.5, 0.5), (0.5, 0.5)))
    assert rep.estimated_constant == pytest.approx(1.0, abs=1e-9)


def test_face_projection_power_weight_column_sums():
    k = 8
    rep = ck.face_projection_check(ms.PowerWeight(0.5), ms.OrientedBox((0.5, 0.5), (0.5, 0.5)), k=k)
    cells = 4000
    g = (np.arange(cells) + 0.5) / cells
    X, Y = np.meshgrid(g, g, indexing="ij")
    col = (np.hypot(X, Y) ** 0.5).sum(axis=0) / cells ** 2
    sums = col.reshape(k, -1).sum(axis=1)
    assert rep.estimated_constant == pytest.approx(sums.max() / sums.min(), rel=1e-4)


def test_face_projection_half_vanishing_fails():
    mu = ms.UniformBox((0.5, 0.75), (0.5, 0.25))
    rep = ck.face_projection_check(mu, ms.OrientedBox((0.5, 0.5), (0.5, 0.5)))
    assert rep.verdict == "fail"
    assert math.isinf(rep.estimated_constant)


def test_ulnc_two_points():
    res = ck.ulnc_check([[0.0, 0.0], [1.0, 0.0]], trials=None, arbitrary_trials=0)
    assert res.tau_hat == pytest.approx(0.5, abs=1e-12)


def test_ulnc_collinear_cloud_degenerates():
    taus = []
    for N in (11, 101, 2001):
        pts = np.stack([np.linspace(0.0, 1.0, N), np.zeros(N)], axis=1)
        res = ck.ulnc_check(pts, trials=300, arbitrary_trials=0)
        taus.append(res.tau_hat)
    assert taus[0] > taus[1] > taus[2]
    assert res.report.verdict == "fail"


def test_ulnc_needs_two_points():
    with pytest.raises(SetTooSmall):
        ck.ulnc_check([[0.0, 0.0], [0.0, 0.0]])


def test_distance_weight_bounds_two_points():
    res = ck.ulnc_check([[0.0, 0.0], [1.0, 0.0]], trials=None, arbitrary_trials=0)
    rep = ck.distance_weight_bounds_check([[0.0, 0.0], [1.0, 0.0]], 1.0, res.tau_hat, trials=50)
    assert rep.verdict == "pass"


@pytest.mark.parametrize("m", [1, 2])
def test_segment_riesz_product_bounded(m):
    rep = ck.segment_integral_check(ms.RieszProduct(m, 2), trials=1000, seed=3)
    assert rep.verdict == "pass"
    # each mean lies in [2^-m, (3/2)^m]
    assert rep.estimated_constant <= 3.0 ** m
