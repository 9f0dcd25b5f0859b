import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from baton.errors import GenerationFailed, InvalidConfig
from baton.geometry import LinkGeometry
from baton.sim import (NAMED_SHAPES, TraceKind, circle, default_links, generate_trajectory, named_shape,
                       random_walk, straight, synthesize_features)


def test_straight_parametric():
    traj = straight((-2.0, 0.0), 0.0, 1.0, 4.0)
    k = np.arange(40)
    np.testing.assert_allclose(traj.positions, np.column_stack([-2 + 0.1 * k, np.zeros(40)]), atol=1e-12)


def test_circle_radius():
    traj = circle((0.2, -0.1), 1.5, 1.0, 8.0)
    assert np.abs(np.hypot(*(traj.positions - [0.2, -0.1]).T) - 1.5).max() < 1e-9


def test_random_walk_deterministic():
    a = generate_trajectory(TraceKind.RANDOMWALK, seed=11)
    b = generate_trajectory(TraceKind.RANDOMWALK, seed=11)
    assert np.array_equal(a.positions, b.positions)


@given(st.integers(0, 2**31 - 1))
def test_random_walk_respects_speed_cap(seed):
    traj = generate_trajectory(TraceKind.RANDOMWALK, seed=seed)
    traj.validate(2.0)
    assert len(traj) == 80


def test_random_walk_gives_up_in_tiny_area():
    with pytest.raises(GenerationFailed):
        random_walk(np.random.default_rng(0), area=(-0.2, 0.2, -0.2, 0.2))


@pytest.mark.parametrize("kind", NAMED_SHAPES)
def test_named_shapes_within_speed_cap(kind):
    traj = named_shape(kind)
    assert len(traj) == 80
    traj.validate(2.0)


def test_named_shape_rejects_walk():
    with pytest.raises(InvalidConfig):
        named_shape(TraceKind.RANDOMWALK)


def test_stationary_trace_gives_zero_features():
    traj = straight((0.5, 0.5), 0.0, 0.0, 2.0)
    assert np.array_equal(synthesize_features(traj, default_links(4)).values, np.zeros((20, 4)))


def test_apex_tangential_column_is_zero():
    link = LinkGeometry((-1.0, 0.0), (1.0, 0.0))
    traj = straight((-0.5, 1.0), 0.0, 1.0, 1.0)  # passes (0, 1) heading +x at slot 5
    p = synthesize_features(traj, [link])
    assert abs(p.values[5, 0]) < 1e-12


def test_noise_is_seeded():
    traj = named_shape(TraceKind.TURN)
    a = synthesize_features(traj, default_links(4), 0.1, seed=5)
    b = synthesize_features(traj, default_links(4), 0.1, seed=5)
    assert a.equals(b)


def test_default_links_bounds():
    with pytest.raises(InvalidConfig):
        default_links(5)
