import math

import numpy as np
import pytest

from qcmlab import quadrature as qd


def test_gauss_legendre_unit_interval():
    x, w = qd.gauss_legendre(6)
    assert np.all((x > 0) & (x < 1))
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.sum(w * x ** 11) == pytest.approx(1 / 12, abs=1e-15)


@pytest.mark.parametrize("bad", [dict(truncation_radius=0.5), dict(base_subdivision=1), dict(max_depth=0),
                                 dict(rel_tol=0.0), dict(rel_tol=0.5)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        qd.QuadratureConfig(**bad)


def test_ray_ball_interval():
    U = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    lo, hi = qd.ray_ball(np.zeros(2), U, np.array([2.0, 0.0]), 1.0)
    assert (lo[0], hi[0]) == pytest.approx((1.0, 3.0))
    assert hi[1] < lo[1] or hi[1] < 0
    assert hi[2] < 0


def test_ray_box_interval():
    U = np.array([[1.0, 0.0]])
    lo, hi = qd.ray_box(np.zeros(2), U, np.array([2.0, 0.0]), np.array([0.5, 0.5]), np.eye(2))
    assert (lo[0], hi[0]) == pytest.approx((1.5, 2.5))


def test_support_with_hole():
    s = qd.Support(2, (0.0, 0.0), 2.0, (0.0, 0.0), 1.0)
    Z = np.array([[0.5, 0.0], [1.5, 0.0], [2.5, 0.0]])
    assert s.contains(Z).tolist() == [False, True, False]
    lo, hi = s.ray_intervals(np.array([-3.0, 0.0]), np.array([[1.0, 0.0]]))
    assert sorted(zip(lo[0], hi[0])) == [pytest.approx((1.0, 2.0)), pytest.approx((4.0, 5.0))]


def test_polar_integrate_disk_area():
    cfg = qd.QuadratureConfig(rel_tol=1e-9)
    sup = qd.Support(2, (0.0, 0.0), 1.0)
    one = lambda Z, R, U: np.ones((Z.shape[0], 1))
    est = qd.polar_integrate(one, lambda Z: np.ones(Z.shape[0]), sup, np.array([0.3, 0.2]), cfg)
    assert est.converged
    assert est.scalar == pytest.approx(math.pi, rel=1e-8)


def test_polar_integrate_singular_center():
    # int_{|z|<1} |z - c|^-1 dz about c = 0 is 2 pi
    cfg = qd.QuadratureConfig(rel_tol=1e-8)
    sup = qd.Support(2, (0.0, 0.0), 1.0)
    f = lambda Z, R, U: (1.0 / R)[:, None]
    est = qd.polar_integrate(f, lambda Z: np.ones(Z.shape[0]), sup, np.zeros(2), cfg, singular_center=True)
    assert est.scalar == pytest.approx(2 * math.pi, rel=1e-7)


def test_box_integrate_gaussian():
    cfg = qd.QuadratureConfig(rel_tol=1e-9)
    f = lambda Z: np.ones((Z.shape[0], 1))
    dens = lambda Z: np.exp(-np.sum(Z * Z, axis=1))
    est = qd.box_integrate(f, dens, np.zeros(2), np.array([1.0, 2.0]), np.eye(2), cfg)
    want = math.sqrt(math.pi) * math.erf(1.0) * math.sqrt(math.pi) * math.erf(2.0)
    assert est.scalar == pytest.approx(want, rel=1e-8)


def test_box_integrate_rotated_box_volume():
    c, s = math.cos(0.4), math.sin(0.4)
    rot = np.array([[c, -s], [s, c]])
    est = qd.box_integrate(lambda Z: np.ones((Z.shape[0], 1)), lambda Z: np.ones(Z.shape[0]),
                           np.array([1.0, 1.0]), np.array([0.2, 3.0]), rot, qd.QuadratureConfig())
    assert est.scalar == pytest.approx(0.4 * 6.0, rel=1e-12)


def test_midpoint_richardson():
    val, ok = qd.midpoint_richardson(np.exp, 0.0, 1.0, rel_tol=1e-12)
    assert ok
    assert val == pytest.approx(math.e - 1.0, rel=1e-11)
