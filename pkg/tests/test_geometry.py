import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarnav.errors import EdgeMinimumError, LargeAngleError
from sarnav.geometry import (
    SlowTimeGrid,
    Target,
    closest_approach,
    corrupted_trajectory,
    refine_argmin,
    slant_range,
    truth_trajectory,
)
from sarnav.kinematics import ErrorState, FlightParams

P = FlightParams()
GRID = SlowTimeGrid(prf=100.0, n_pulses=101)


def test_target_validation():
    with pytest.raises(ValueError):
        Target((0, 1))
    with pytest.raises(ValueError):
        Target((0, 1, 2), amplitude=-1)


def test_slow_time_grid():
    g = SlowTimeGrid(256.0, 128)
    assert g.eta[0] == 0.0
    assert g.eta[-1] == pytest.approx(127 / 256)
    with pytest.raises(ValueError):
        SlowTimeGrid(0, 10)
    with pytest.raises(ValueError):
        SlowTimeGrid(100, 1)


def test_truth_trajectory_examples():
    tr = truth_trajectory(P, GRID)
    np.testing.assert_array_equal(tr.positions[0], 0)
    np.testing.assert_allclose(tr.positions[50], [50, 0, 0], atol=1e-12)
    steps = np.diff(tr.positions, axis=0)
    np.testing.assert_allclose(steps, np.broadcast_to(steps[0], steps.shape), atol=1e-12)


def test_corrupted_zero_is_bitwise_truth():
    a = truth_trajectory(P, GRID).positions
    b = corrupted_trajectory(P, GRID, ErrorState()).positions
    assert a.tobytes() == b.tobytes()


def test_corrupted_yaw_is_bitwise_truth():
    a = truth_trajectory(P, GRID).positions
    b = corrupted_trajectory(P, GRID, ErrorState(dtheta=(0, 0, 0.1))).positions
    assert a.tobytes() == b.tobytes()


def test_corrupted_constant_offset():
    tr = truth_trajectory(P, GRID).positions
    co = corrupted_trajectory(P, GRID, ErrorState(dp=(0, 3, 0))).positions
    np.testing.assert_array_equal(co, tr - [0, 3, 0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_corrupted_depends_on_yaw_not_at_all(rx, py, y1, y2):
    a = corrupted_trajectory(P, GRID, ErrorState(dtheta=(rx, py, y1))).positions
    b = corrupted_trajectory(P, GRID, ErrorState(dtheta=(rx, py, y2))).positions
    assert a.tobytes() == b.tobytes()


def test_corrupted_large_angle():
    with pytest.raises(LargeAngleError):
        corrupted_trajectory(P, GRID, ErrorState(dtheta=(0, 0.6, 0)))


def test_slant_range_examples():
    assert slant_range((0, 1000, 500), (0, 0, 0)) == pytest.approx(1118.033989, abs=1e-6)
    assert slant_range((100, 1000, 500), (100, 0, 0)) == pytest.approx(1118.033989, abs=1e-6)
    assert slant_range((1, 2, 3), (1, 2, 3)) == 0.0


def test_slant_range_symmetric_and_triangle(rng):
    for _ in range(100):
        a, b, c = rng.normal(0, 100, (3, 3))
        assert slant_range(a, b) == slant_range(b, a)
        assert slant_range(a, c) <= slant_range(a, b) + slant_range(b, c) + 1e-9


def test_closest_approach_broadside():
    r0, eta0 = closest_approach((50, 1000, 500), truth_trajectory(P, GRID))
    assert eta0 == pytest.approx(0.5, abs=1e-6)
    assert r0 == pytest.approx(1118.033989, abs=1e-6)


def test_closest_approach_dense_oracle(rng):
    tr = truth_trajectory(P, GRID)
    for _ in range(10):
        p_t = np.array([rng.uniform(10, 90), rng.uniform(200, 2000), rng.uniform(100, 800)])
        _, eta0 = closest_approach(p_t, tr)
        fine = np.linspace(0, 1, 100 * 1000 + 1)
        r = np.linalg.norm(p_t - fine[:, None] * P.v0, axis=1)
        assert abs(eta0 - fine[np.argmin(r)]) <= fine[1] - fine[0]


def test_closest_approach_off_grid_target(rng):
    tr = truth_trajectory(P, GRID)
    for x in rng.uniform(5, 95, 10):
        _, eta0 = closest_approach((x, 800, 300), tr)
        assert eta0 == pytest.approx(x / 100, abs=1e-6)


def test_closest_approach_edges():
    tr = truth_trajectory(P, GRID)
    with pytest.raises(EdgeMinimumError):
        closest_approach((0, 0, 0), tr)
    with pytest.raises(EdgeMinimumError):
        closest_approach((150, 1000, 500), tr)


def test_refine_argmin_exact_on_parabola():
    eta = np.linspace(0, 1, 11)
    vals = 3.0 + 2.0 * (eta - 0.437) ** 2
    v, e = refine_argmin(vals, eta)
    assert e == pytest.approx(0.437, abs=1e-12)
    assert v == pytest.approx(3.0, abs=1e-12)
