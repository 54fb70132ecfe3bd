import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridreach.errors import ConfigurationError, ValidationError
from hybridreach.levelset import (
    UNIT_BOX,
    BallSet,
    Bilinear,
    BoxSet,
    StateGrid,
    lock_nodes,
    lock_weights,
    phi_initial,
    phi_obstacle,
)
from hybridreach.model import EnergyState

BALL = BallSet((0.5, 0.5), 0.05)


def test_phi_initial_examples():
    assert phi_initial(BALL, EnergyState(0.5, 0.5)) == -0.05
    assert math.isclose(phi_initial(BALL, EnergyState(0.55, 0.5)), 0.0, abs_tol=1e-15)
    assert math.isclose(phi_initial(BALL, EnergyState(0.6, 0.5)), 0.05, abs_tol=1e-15)


def test_phi_obstacle_examples():
    assert phi_obstacle(UNIT_BOX, EnergyState(0.5, 0.5)) == -0.5
    assert math.isclose(phi_obstacle(UNIT_BOX, EnergyState(1.2, 0.5)), 0.2, abs_tol=1e-15)
    assert phi_obstacle(UNIT_BOX, EnergyState(0.0, 1.0)) == 0.0


def test_set_validation():
    with pytest.raises(ValidationError):
        BoxSet((0, 0), (0, 1))
    with pytest.raises(ValidationError):
        BallSet((0, 0), -1.0)


def test_grid_build_defaults():
    grid = StateGrid.build(0.02, 1.0)
    assert grid.p_nodes == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert grid.shape == (71, 71)
    a0, _ = grid.axes
    assert math.isclose(a0[0], -0.2) and math.isclose(a0[-1], 1.2)
    # the admissible box lies strictly inside the boundary nodes
    assert a0[0] < 0 and a0[-1] > 1
    assert grid.dims() == (2, 5, 71, 71)
    assert grid.switch_nodes(1.0).tolist() == [2, 3, 4]


def test_grid_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        StateGrid.build(2.0, 1.0)
    with pytest.raises(ValidationError):
        StateGrid.build(0.0, 1.0)
    with pytest.raises(ValidationError):
        StateGrid((0, 0), (1, 1), 0.1, (0.5, 1.0))
    with pytest.raises(ValidationError):
        StateGrid((0, 0), (1, 1), 0.1, (0.0, 1.0, 1.0))
    with pytest.raises(ConfigurationError):
        lock_nodes(0.0, 0.5)


def test_lock_nodes_cap():
    assert lock_nodes(1.0, 0.5).tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert lock_nodes(1.0, 0.5, horizon=1.2).tolist() == [0.0, 0.5, 1.0, 1.5]
    assert lock_nodes(1.0, 0.4).tolist()[-1] >= 1.0


def test_bilinear_exact_on_affine_functions():
    grid = StateGrid((0.0, 0.0), (1.0, 1.0), 0.1, (0.0,))
    soc, fuel = grid.mesh()
    layer = 2 * soc - 3 * fuel + 1
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(2, 50))
    assert np.allclose(Bilinear(grid, pts[0], pts[1])(layer), 2 * pts[0] - 3 * pts[1] + 1, atol=1e-12)


def test_bilinear_reproduces_nodes_exactly():
    grid = StateGrid.build(0.03, 1.0)
    soc, fuel = grid.mesh()
    layer = np.sin(7 * soc) * np.cos(5 * fuel)
    assert np.array_equal(Bilinear(grid, soc, fuel)(layer), layer)


def test_bilinear_clamps_outside():
    grid = StateGrid((0.0, 0.0), (1.0, 1.0), 0.5, (0.0,))
    soc, fuel = grid.mesh()
    layer = soc + 10 * fuel
    assert Bilinear(grid, np.array(-5.0), np.array(7.0))(layer) == layer[0, -1]


def test_lock_weights():
    nodes = (0.0, 0.5, 1.0, 1.5)
    assert lock_weights(nodes, -1.0) == (0, 0, 0.0)
    assert lock_weights(nodes, 0.5) == (1, 1, 0.0)
    i0, i1, w = lock_weights(nodes, 0.6)
    assert (i0, i1) == (1, 2) and math.isclose(w, 0.2)
    assert lock_weights(nodes, 9.0) == (3, 3, 0.0)


points = st.tuples(st.floats(-0.2, 1.2), st.floats(-0.2, 1.2))


@given(points)
def test_sign_characterisation(pt):
    x = EnergyState(*pt)
    assert (phi_obstacle(UNIT_BOX, x) <= 0) == bool(UNIT_BOX.contains(*pt))
    assert (phi_initial(BALL, x) <= 0) == bool(BALL.contains(*pt))


@given(points, points)
def test_lipschitz(p1, p2):
    x1, x2 = EnergyState(*p1), EnergyState(*p2)
    euclid = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
    maxnorm = max(abs(p1[0] - p2[0]), abs(p1[1] - p2[1]))
    assert abs(phi_initial(BALL, x1) - phi_initial(BALL, x2)) <= euclid + 1e-12
    assert abs(phi_obstacle(UNIT_BOX, x1) - phi_obstacle(UNIT_BOX, x2)) <= maxnorm + 1e-12
