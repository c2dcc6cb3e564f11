import math

import numpy as np
import pytest

from wplab.errors import ConvergenceError, DomainError
from wplab.geodesics import (
    Polyline,
    coincide,
    connect,
    distance,
    midpoint,
    minimize_path,
    oracle_length,
    path_functionals,
    shoot,
    solve_product,
)
from wplab.model_metric import ChartPoint, ModelSpec, TangentVector
from wplab.npc import convexity_scan, u_squared

S1 = ModelSpec(1)


def test_radial_shot_is_straight_in_u():
    tr = shoot(S1, ChartPoint([1.0]), TangentVector([-1.0], [0.0]), 0.5, n_samples=11)
    np.testing.assert_allclose(tr.X[:, 0], 1.0 - tr.s, atol=1e-12)
    assert tr.termination == "length-reached"
    assert tr.length == pytest.approx(0.5)


def test_radial_shot_hits_boundary_at_unit_length():
    tr = shoot(S1, ChartPoint([1.0]), TangentVector([-1.0], [0.0]), 2.0)
    assert tr.termination == "boundary-hit"
    assert tr.event_block == 0
    assert tr.length == pytest.approx(1.0, abs=1e-9)
    assert tr.end.u[0] == 0.0
    assert np.all(np.diff(tr.s) > 0)


def test_flat_shot_is_a_line():
    s = ModelSpec(0, 1)
    tr = shoot(s, ChartPoint([], [], [0j]), TangentVector([], [], [3 + 4j]), 2.0, n_samples=5)
    assert tr.end.t[0] == pytest.approx(1.2 + 1.6j)


def test_shoot_input_checks():
    with pytest.raises(DomainError):
        shoot(S1, ChartPoint([0.0]), TangentVector([-1.0], [0.0]), 1.0)
    with pytest.raises(DomainError):
        shoot(S1, ChartPoint([0.0]), TangentVector([1.0], [1.0]), 1.0)
    with pytest.raises(DomainError):
        shoot(S1, ChartPoint([1.0]), TangentVector([1.0], [0.0]), -1.0)


def test_conserved_quantities():
    s = ModelSpec(2, 1, (1.0, 2.0), (0.3, 0.0))
    tr = shoot(s, ChartPoint([1.0, 0.7], [0.0, 1.0], [0j]), TangentVector([0.1, -0.2], [0.5, 2.0], [0.3j]), 3.0, tol=1e-10)
    d = tr.drift()
    assert max(d.values()) < 1e-8
    assert set(d) == {"energy", "momentum1", "momentum2"}


def test_csv_header_and_rows():
    s = ModelSpec(2, 1)
    tr = shoot(s, ChartPoint([1.0, 1.0], [0, 0], [0j]), TangentVector([0.0, 0.0], [1.0, 1.0], [1.0]), 1.0, n_samples=5)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "s,u1,u2,theta1,theta2,ret1,imt1"
    assert len(lines) == 6


def test_frozen_block_lengths():
    # 30-digit shooting on the Clairaut integrals
    sol = solve_product(S1, ChartPoint([1.0], [0.0]), ChartPoint([1.0], [1.0]))
    assert sol.length == pytest.approx(0.460046592051244280637, rel=1e-12)
    assert distance(S1, ChartPoint([0.8], [0.0]), ChartPoint([0.6], [4.0])) == pytest.approx(
        0.546964930030877433812, rel=1e-12
    )


def test_boundary_distance_is_radial():
    assert distance(S1, ChartPoint([1.0], [0.3]), ChartPoint([0.0])) == pytest.approx(1.0, abs=1e-13)
    assert distance(S1, ChartPoint([0.0]), ChartPoint([0.0], [2.0])) == 0.0
    s = ModelSpec(1, 0, (4.0,))
    assert distance(s, ChartPoint([1.0]), ChartPoint([0.5])) == pytest.approx(1.0, abs=1e-13)


def test_product_distance():
    s = ModelSpec(2, 1)
    p = ChartPoint([1.0, 0.5], [0.0, 0.0], [0j])
    q = ChartPoint([0.0, 0.5], [0.0, 0.0], [1j])
    assert distance(s, p, q) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_unwrapped_theta_is_a_different_point():
    a, b = ChartPoint([1.0], [0.0]), ChartPoint([1.0], [2 * math.pi])
    assert a == b
    assert not coincide(S1, a, b)
    assert distance(S1, a, b) > 0


def test_connect_reaches_target():
    s = ModelSpec(2, 1, (1.0, 2.0))
    p = ChartPoint([1.0, 0.4], [0.0, 1.0], [0j])
    q = ChartPoint([0.6, 1.2], [2.0, -1.0], [1 - 1j])
    tr = connect(s, p, q, tol=1e-8)
    np.testing.assert_allclose(tr.end.to_vector(), q.to_vector(), atol=1e-8)
    assert tr.length == pytest.approx(distance(s, p, q), rel=1e-9)
    with pytest.raises(DomainError):
        connect(s, p, p)


def test_connect_to_stratum():
    p, q = ChartPoint([1.0], [0.0]), ChartPoint([0.0])
    tr = connect(S1, p, q)
    assert tr.end.u[0] == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(tr.X[:, 1], 0.0, atol=1e-12)


def test_midpoint_halves_the_distance():
    s = ModelSpec(1, 1)
    p, q = ChartPoint([1.2], [0.0], [0j]), ChartPoint([0.5], [3.0], [1j])
    m = midpoint(s, p, q)
    d = distance(s, p, q)
    assert distance(s, p, m) == pytest.approx(d / 2, rel=1e-8)
    assert distance(s, m, q) == pytest.approx(d / 2, rel=1e-8)


def test_distance_matches_discrete_oracle():
    p, q = ChartPoint([0.8], [0.0]), ChartPoint([0.6], [4.0])
    assert oracle_length(S1, p, q) == pytest.approx(distance(S1, p, q), abs=1e-7)


def test_path_functionals_inequality():
    s = ModelSpec(1, 1)
    poly = Polyline.straight(s, ChartPoint([1.0], [0.0], [0j]), ChartPoint([0.3], [2.0], [2j]), 17)
    L, E = path_functionals(s, poly)
    assert L * L <= poly.n_segments * E * (1 + 1e-14)


def test_minimize_path_flat_is_straight():
    s = ModelSpec(0, 1)
    init = Polyline(s, np.array([[0.0, 0.0], [0.7, 0.9], [0.2, -0.5], [1.0, 1.0]]))
    out = minimize_path(s, init, 1e-12)
    np.testing.assert_allclose(out.X[1:-1], [[1 / 3, 1 / 3], [2 / 3, 2 / 3]], atol=1e-9)


def test_minimize_path_stays_feasible_and_decreases():
    init = Polyline.straight(S1, ChartPoint([0.3], [0.0]), ChartPoint([0.3], [6.0]), 33)
    out, info = minimize_path(S1, init, 1e-9, return_info=True)
    assert np.all(out.X[:, 0] >= 0)
    assert np.all(np.diff(info.energies) <= 1e-15)
    assert info.converged


def test_minimize_path_budget():
    init = Polyline.straight(S1, ChartPoint([0.3], [0.0]), ChartPoint([0.3], [6.0]), 33)
    with pytest.raises(ConvergenceError) as exc:
        minimize_path(S1, init, 1e-12, max_iter=2)
    assert isinstance(exc.value.best, Polyline)


def test_polyline_refine():
    poly = Polyline.straight(S1, ChartPoint([1.0]), ChartPoint([0.5], [1.0]), 5)
    r = poly.refine()
    assert r.n_segments == 8
    np.testing.assert_allclose(r.X[::2], poly.X)


def test_u_squared_convex_along_geodesic():
    s = ModelSpec(2, 1, (1.0, 2.0))
    p = ChartPoint([1.0, 0.4], [0.0, 1.0], [0j])
    q = ChartPoint([0.2, 1.2], [3.0, -1.0], [1 - 1j])
    tr = connect(s, p, q, n_samples=129)
    for i in range(2):
        assert convexity_scan(s, u_squared(i), tr) >= -1e-6
