import math

import numpy as np
import pytest
from scipy import integrate

from qcmlab import measures as ms
from qcmlab.exceptions import NonIntegrable
from qcmlab.quadrature import QuadratureConfig

from oracles import power_box_grid


def test_uniform_disk_mass():
    mu = ms.UniformBall((0, 0), 1.0, 1.0)
    assert ms.mass(mu, ms.Ball((0, 0), 1.0)) == pytest.approx(math.pi, rel=1e-8)
    assert ms.mass(mu, ms.Ball((0, 0), 2.0)) == pytest.approx(math.pi, rel=1e-8)


def test_power_weight_box_mass_matches_grid():
    mu = ms.PowerWeight(0.5)
    got = ms.mass(mu, ms.OrientedBox((2.0, 0.0), (0.1, 0.1)))
    assert got == pytest.approx(power_box_grid(0.5, (2.0, 0.0), 0.1, cells=1000), rel=1e-4)


def test_power_weight_ball_at_origin_closed_form():
    # int_{|z|<r} |z|^p dz = 2 pi r^(p+2) / (p+2)
    mu = ms.PowerWeight(-1.2)
    assert ms.mass(mu, ms.Ball((0, 0), 0.7)) == pytest.approx(2 * math.pi * 0.7 ** 0.8 / 0.8, rel=1e-6)


def test_gaussian_total_mass_and_tail():
    mu = ms.GaussianWeight(0.5)
    assert ms.mass(mu, ms.Ball((0, 0), 10.0)) == pytest.approx(mu.total_mass(), rel=1e-7)
    # radial oracle for int_{|z|>R} |z|^-1 dmu in the plane
    tail = 2 * math.pi * integrate.quad(lambda r: math.exp(-r * r / 0.5), 1.5, np.inf)[0]
    assert mu.decay_tail(1.5) == pytest.approx(tail, rel=1e-10)


def test_non_integrable_power_weight_raises():
    with pytest.raises(NonIntegrable):
        ms.mass(ms.PowerWeight(-2.5), ms.Ball((0, 0), 1.0))


def test_decay_compact_support():
    res = ms.decay_check(ms.UniformBall((0, 0), 1.0))
    assert res.tail_bound == 0.0
    assert res.verdict == "finite"


def test_decay_power_weight_finite_four_pi():
    res = ms.decay_check(ms.PowerWeight(-1.5))
    assert res.verdict == "finite"
    # 2 pi int_1^R r^-1.5 dr plus the analytic tail
    assert res.integral_estimate + res.tail_bound == pytest.approx(4 * math.pi, rel=1e-6)


def test_decay_lebesgue_infinite():
    assert ms.decay_check(ms.lebesgue(2)).verdict == "infinite"


def test_doubling_near_lebesgue():
    mu = ms.UniformBall((0, 0), 1e3)
    rep = ms.doubling_constant_estimate(mu, ms.Ball((0, 0), 1.0), trials=10, r_min=1e-2, r_max=1.0)
    assert rep.estimated_constant == pytest.approx(4.0, rel=0.05)


def _disk_mass_oracle(p, x, r):
    f = lambda t, s: ((x[0] + s * math.cos(t)) ** 2 + (x[1] + s * math.sin(t)) ** 2) ** (p / 2) * s
    return integrate.dblquad(f, 0.0, r, 0.0, 2 * math.pi, epsabs=0, epsrel=1e-10)[0]


def test_doubling_power_weight_grid():
    mu = ms.PowerWeight(1.0)
    centers = [(a, b) for a in (0.0, 0.3, 1.0) for b in (0.0, 0.5)]
    radii = [0.05, 0.4, 2.0] * 2
    rep = ms.doubling_constant_estimate(mu, None, trials=6, centers=centers, radii=radii)
    brute = max(_disk_mass_oracle(1.0, c, 2 * r) / _disk_mass_oracle(1.0, c, r) for c, r in zip(centers, radii))
    assert rep.estimated_constant == pytest.approx(brute, rel=1e-6)
    assert rep.estimated_constant <= 2 ** 3 + 1e-6


def test_doubling_truncated_lebesgue_fails():
    mu = ms.Truncated(ms.lebesgue(2), 1.0)
    rep = ms.doubling_constant_estimate(mu, None, trials=1, centers=[(0.0, 0.0)], radii=[0.5])
    assert rep.verdict == "fail"
    assert math.isinf(rep.estimated_constant)


def test_cone_condition_lebesgue_and_truncated_finite():
    for mu in (ms.lebesgue(2), ms.Truncated(ms.lebesgue(2), 1.0)):
        rep = ms.cone_condition_check(mu, 0.2, 2.0, trials=8)
        assert rep.verdict == "pass"
        assert math.isfinite(rep.estimated_constant)


def test_cone_condition_line_mass_fails():
    mu = ms.UniformBox((0.0, 0.0), (20.0, 1e-5))
    rep = ms.cone_condition_check(mu, 0.2, 2.0, trials=3, domain=ms.Ball((0.0, 0.0), 1e-9), axis=(1.0, 0.0),
                                  r_min=0.1, r_max=1.0)
    assert rep.verdict == "fail"


def test_grid_measure_integrals():
    g = ms.GridMeasure((0.0, 0.0), 0.5, [[1.0, 2.0], [0.0, 3.0]])
    assert g.total_mass() == 6.0
    assert ms.mass(g, ms.OrientedBox((0.5, 0.5), (0.5, 0.5))) == pytest.approx(6.0)
    assert ms.mass(g, ms.OrientedBox((0.25, 0.25), (0.25, 0.25))) == pytest.approx(1.0)


def test_distance_power_density():
    mu = ms.DistancePower([[0.0, 0.0], [1.0, 0.0]], p=1.0)
    np.testing.assert_allclose(mu.density(np.array([[0.5, 0.0], [0.0, 2.0]])), [0.5, 2.0])


def test_cantor_points():
    pts = ms.cantor_four_corner(depth=2).points
    assert pts.shape == (16, 2)
    assert pts.min() == 0.0 and pts.max() == 1.0 - 0.25 ** 2


@pytest.mark.parametrize("bad", [lambda: ms.Ball((0, 0), 0.0), lambda: ms.OrientedBox((0, 0), (1.0, -1.0)),
                                 lambda: ms.PowerWeight(1.0, n=4), lambda: ms.RieszProduct(-1),
                                 lambda: ms.GridMeasure((0, 0), 1.0, [[-1.0]])])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()
