import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ball_volume_h3, phi0
from symker.geometry import (
    H3,
    ORIGIN,
    GeometryError,
    HPoint,
    ball_volume,
    distance,
    distance_from_origin,
    horocycle_identity_check,
    log_phi0_h3,
    phi0_h3,
    random_point,
    sphere_quadrature,
)

radii = st.floats(0.0, 8.0)
dirs = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: sum(x * x for x in v) > 1e-3)


@given(radii, dirs)
def test_polar_points_sit_on_hyperboloid_at_given_distance(r, d):
    p = HPoint.polar(r, d)
    x = p.array
    assert abs(x[0] ** 2 - x[1:] @ x[1:] - 1.0) < 1e-9 * max(1.0, x[0] ** 2)
    assert distance_from_origin(p) == pytest.approx(r, abs=1e-7)


@given(radii, dirs, radii, dirs, radii, dirs)
def test_distance_is_a_metric(r1, d1, r2, d2, r3, d3):
    p, q, s = HPoint.polar(r1, d1), HPoint.polar(r2, d2), HPoint.polar(r3, d3)
    assert distance(p, q) == pytest.approx(distance(q, p), abs=1e-9)
    assert distance(p, q) <= distance(p, s) + distance(s, q) + 1e-7


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 20))
def test_halfspace_round_trip(y1, y2, z):
    p = HPoint.from_halfspace(y1, y2, z)
    assert np.allclose(p.to_halfspace(), (y1, y2, z), rtol=1e-9, atol=1e-9)


def test_origin_in_halfspace_is_height_one():
    assert ORIGIN.to_halfspace() == (0.0, 0.0, 1.0)
    with pytest.raises(GeometryError):
        HPoint.from_halfspace(0.0, 0.0, 0.0)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 3.0, 7.0])
def test_ball_volume_closed_form(r):
    assert ball_volume(H3, r) == pytest.approx(float(ball_volume_h3(r)), rel=1e-10)


@given(st.floats(0.0, 50.0))
def test_phi0_matches_closed_form(r):
    assert phi0_h3(r) == pytest.approx(float(phi0(r)), rel=1e-12)
    assert log_phi0_h3(r) == pytest.approx(math.log(float(phi0(r))), abs=1e-12)


@pytest.mark.parametrize("order", [8, 16])
def test_sphere_quadrature_weights_and_moments(order):
    q = sphere_quadrature(order, pole=(0.3, -0.2, 0.9))
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-12)
    # second moments of the uniform measure on S^2
    assert q.integrate(q.nodes[:, 0] ** 2) == pytest.approx(1 / 3, abs=1e-10)
    assert q.integrate(q.nodes[:, 2]) == pytest.approx(0.0, abs=1e-10)


def test_horocycle_product_formula_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p, q = random_point(rng, 3.0), random_point(rng, 3.0)
        res = horocycle_identity_check(p, q)
        assert res["rel_err"] < 1e-6
