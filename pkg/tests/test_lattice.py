import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lerwlab import lattice

points = st.tuples(st.integers(-50, 50), st.integers(-50, 50))


def test_norm_and_argument_basics():
    assert lattice.norm((3, 4)) == 5.0
    assert lattice.argument((1, 0)) == 0.0
    assert lattice.argument((0, 1)) == pytest.approx(math.pi / 2)
    assert lattice.argument((-1, 0)) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        lattice.argument((0, 0))


@given(points.filter(lambda p: p != (0, 0)))
def test_argument_branch(p):
    a = lattice.argument(p)
    assert -math.pi < a <= math.pi


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_angular_distance_properties(a, b):
    d = lattice.angular_distance(a, b)
    assert 0.0 <= d <= math.pi + 1e-12
    assert d == pytest.approx(lattice.angular_distance(b, a))
    assert lattice.angular_distance(a, a) == pytest.approx(0.0)
    assert lattice.angular_distance(a + 2 * math.pi, b) == pytest.approx(d, abs=1e-9)


def test_ball_and_boundary_counts():
    # C_1 is just the origin; dC_1 its four neighbors
    assert lattice.ball_points(1).tolist() == [[0, 0]]
    assert len(lattice.boundary_points(1)) == 4
    for r in (1.5, 2, 3.7, 5):
        ball = {tuple(p) for p in lattice.ball_points(r)}
        brute = {
            (x, y)
            for x in range(-10, 11)
            for y in range(-10, 11)
            if x * x + y * y < r * r
        }
        assert ball == brute
        bd = {tuple(p) for p in lattice.boundary_points(r)}
        brute_bd = {
            (x, y)
            for x in range(-12, 13)
            for y in range(-12, 13)
            if (x, y) not in brute
            and any(
                (x + dx, y + dy) in brute
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            )
        }
        assert bd == brute_bd


def test_nearest_neighbor_path_check():
    assert lattice.is_nearest_neighbor_path(np.array([[0, 0], [1, 0], [1, 1]]))
    assert lattice.is_nearest_neighbor_path(np.array([[2, 3]]))
    assert not lattice.is_nearest_neighbor_path(np.array([[0, 0], [1, 1]]))
    assert not lattice.is_nearest_neighbor_path(np.array([[0, 0], [0, 0]]))
    assert not lattice.is_nearest_neighbor_path(np.empty((0, 2)))


def test_first_exit_index():
    path = np.array([[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]])
    assert lattice.first_exit_index(path, 1) == 1
    assert lattice.first_exit_index(path, 2) == 3
    assert lattice.first_exit_index(path, 10) is None


def test_is_inside_uses_exact_integer_comparison():
    # norm(3,4) == 5 exactly: not inside C_5, inside C_5.0001
    assert not lattice.is_inside((3, 4), 5)
    assert lattice.is_inside((3, 4), 5.0001)
