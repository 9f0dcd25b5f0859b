import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from baton.errors import DegenerateGeometry
from baton.geometry import (KinematicState, LinkGeometry, decompose_normal_velocity, forward_plcr,
                            fresnel_coefficients, plcr_from_decomposition)

APEX_LINK = LinkGeometry((-1.0, 0.0), (1.0, 0.0))
coord = st.floats(-5, 5, allow_nan=False)
speed = st.floats(-2, 2, allow_nan=False)


def test_apex_coefficients():
    ax, ay = fresnel_coefficients(APEX_LINK, (0.0, 1.0))
    assert ax == pytest.approx(0.0, abs=1e-15)
    assert ay == pytest.approx(math.sqrt(2), rel=1e-12)


def test_position_on_endpoint_is_degenerate():
    with pytest.raises(DegenerateGeometry):
        fresnel_coefficients(APEX_LINK, (-1.0, 0.0))


def test_coincident_endpoints_rejected():
    with pytest.raises(DegenerateGeometry):
        LinkGeometry((0.0, 0.0), (0.0, 0.0))


def test_default_layout_centre_coefficients():
    # frozen from a hand evaluation of u_t + u_r at the origin
    ax, ay = fresnel_coefficients(LinkGeometry((2.4, -2.4), (2.4, 2.4)), (0.0, 0.0))
    assert ax == pytest.approx(-1.4142135623730951, rel=1e-12)
    assert ay == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("v, expected", [((1.0, 0.0), 0.0), ((0.0, 1.0), math.sqrt(2))])
def test_apex_plcr(v, expected):
    r = forward_plcr(APEX_LINK, KinematicState((0.0, 1.0), v))
    assert r == pytest.approx(expected, rel=1e-12, abs=1e-15)


@given(coord, coord)
def test_stationary_target_has_zero_plcr(x, y):
    try:
        r = forward_plcr(APEX_LINK, KinematicState((x, y), (0.0, 0.0)))
    except DegenerateGeometry:
        return
    assert r == 0.0


def test_normal_motion_keeps_full_speed():
    pos = (0.3, 1.7)
    ax, ay = fresnel_coefficients(APEX_LINK, pos)
    n = math.hypot(ax, ay)
    d = decompose_normal_velocity(APEX_LINK, KinematicState(pos, (1.2 * ax / n, 1.2 * ay / n)))
    assert d.normal_speed == pytest.approx(1.2, rel=1e-12)


def test_tangential_motion_has_no_normal_component():
    pos = (0.3, 1.7)
    ax, ay = fresnel_coefficients(APEX_LINK, pos)
    state = KinematicState(pos, (-ay, ax))
    assert decompose_normal_velocity(APEX_LINK, state).normal_speed == pytest.approx(0.0, abs=1e-12)
    assert forward_plcr(APEX_LINK, state) == pytest.approx(0.0, abs=1e-12)


@given(coord, coord, speed, speed)
def test_angle_form_matches_vector_form(x, y, vx, vy):
    state = KinematicState((x, y), (vx, vy))
    try:
        d = decompose_normal_velocity(APEX_LINK, state)
    except DegenerateGeometry:
        return
    assert plcr_from_decomposition(d) == pytest.approx(forward_plcr(APEX_LINK, state), rel=1e-9, abs=1e-9)


@given(coord, coord)
def test_coefficient_norm_at_most_two(x, y):
    try:
        ax, ay = fresnel_coefficients(LinkGeometry((2.4, -2.4), (-2.4, 2.4)), (x, y))
    except DegenerateGeometry:
        return
    assert math.hypot(ax, ay) <= 2.0 + 1e-12


@given(coord, coord, speed, speed, st.floats(0.1, 3.0))
def test_cross_link_ratio_invariant_under_speed_change(x, y, vx, vy, k):
    a, b = LinkGeometry((2.4, -2.4), (2.4, 2.4)), LinkGeometry((2.4, -2.4), (-2.4, 2.4))
    s1 = KinematicState((x, y), (vx, vy))
    s2 = KinematicState((x, y), (k * vx, k * vy))
    try:
        ra1, rb1, ra2, rb2 = (forward_plcr(lk, s) for s in (s1, s2) for lk in (a, b))
    except DegenerateGeometry:
        return
    if abs(rb1) < 1e-6:
        return
    assert ra2 / rb2 == pytest.approx(ra1 / rb1, rel=1e-9)
    assert ra2 == pytest.approx(k * ra1, rel=1e-12, abs=1e-15)
