import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from wplab.collar import CollarParams, collar_factor
from wplab.geodesics import distance, midpoint, shoot
from wplab.model_metric import ChartPoint, ModelSpec, TangentVector, coordinate_transform, metric_tensor
from wplab.npc import IsometrySpec, SampledFunction, cat0_check, harnack_bound, harnack_verify

S = ModelSpec(1, 1, (1.5,))
u_ = st.floats(0.1, 2.0)
th_ = st.floats(-3.0, 3.0)
fl_ = st.floats(-2.0, 2.0)


@st.composite
def points(draw, spec=S, boundary=False):
    u = [0.0 if boundary and draw(st.booleans()) else draw(u_) for _ in range(spec.p)]
    th = [draw(th_) for _ in range(spec.p)]
    t = [complex(draw(fl_), draw(fl_)) for _ in range(spec.m)]
    return ChartPoint(u, th, t)


@given(points(boundary=True))
def test_point_json_round_trip(x):
    assert ChartPoint.from_json(x.to_json()) == x


@given(st.floats(0.05, 3.0), th_)
def test_plumbing_round_trip(u, th):
    x = ChartPoint([u], [th])
    back = coordinate_transform(coordinate_transform(x, "to-plumbing"), "from-plumbing")
    assert back.u[0] == pytest.approx(u, rel=1e-13)
    assert back == x or abs(math.remainder(back.theta[0] - th, 2 * math.pi)) < 1e-12


@given(points())
def test_metric_positive_definite_in_interior(x):
    assert np.all(np.linalg.eigvalsh(metric_tensor(S, x)) > 0)


@given(points(boundary=True), points(boundary=True))
def test_distance_symmetric_and_bounded(p, q):
    d = distance(S, p, q)
    assert d == pytest.approx(distance(S, q, p), rel=1e-9, abs=1e-12)
    flat = abs(p.t[0] - q.t[0])
    radial = math.sqrt(S.A[0]) * abs(p.u[0] - q.u[0])
    assert d >= math.hypot(flat, radial) - 1e-9
    # through the stratum: radial in, flat across, radial out
    via = math.hypot(math.sqrt(S.A[0]) * (p.u[0] + q.u[0]), flat)
    assert d <= via + 1e-9


@given(points(), points(), points())
def test_triangle_inequality(p, q, r):
    assert distance(S, p, r) <= distance(S, p, q) + distance(S, q, r) + 1e-9


@given(points(), points(), st.floats(-3, 3), fl_, fl_)
def test_distance_isometry_invariant(p, q, ang, a, b):
    g = IsometrySpec.compose(IsometrySpec.rotation(0, ang), IsometrySpec.translation([complex(a, b)]))
    d = distance(S, g.apply(S, p), g.apply(S, q))
    assert d == pytest.approx(distance(S, p, q), rel=1e-9, abs=1e-12)


@given(points(), points(), st.floats(0.3, 3.0))
def test_distance_homogeneous(p, q, lam):
    def scale(x):
        return ChartPoint(lam * x.u, x.theta / lam**2, lam * x.t)

    assert distance(S, scale(p), scale(q)) == pytest.approx(lam * distance(S, p, q), rel=1e-8, abs=1e-12)


@given(points(), points())
def test_midpoint_equidistant(p, q):
    d = distance(S, p, q)
    assume(d > 1e-3)
    m = midpoint(S, p, q)
    assert distance(S, p, m) == pytest.approx(d / 2, rel=1e-6)
    assert distance(S, m, q) == pytest.approx(d / 2, rel=1e-6)


@given(points(), points(), points(boundary=True))
def test_cat0_inequality(p, q, r):
    assert cat0_check(S, p, q, r).slack >= -1e-7


@given(points(), st.floats(-1, 1), st.floats(-4, 4), st.floats(-1, 1), st.floats(1.0, 4.0))
def test_shoot_conserves_energy_and_u_squared_convex(x, du, dth, dt, L):
    assume(abs(du) + abs(dth) > 1e-3)
    tr = shoot(S, x, TangentVector([du], [dth], [complex(dt, 0.3)]), L, tol=1e-10, n_samples=65)
    assert tr.drift()["energy"] < 1e-7
    s, u2 = tr.s, tr.X[:, 0] ** 2
    h0, h1 = s[1:-1] - s[:-2], s[2:] - s[1:-1]
    sd = 2 * (h0 * u2[2:] - (h0 + h1) * u2[1:-1] + h1 * u2[:-2]) / (h0 * h1 * (h0 + h1))
    assert sd.min() >= -1e-5


@given(st.floats(1e-12, 1e-3), st.floats(0.0, 1.0))
def test_collar_dominates_cusp(tmod, w):
    prm = CollarParams(tmod)
    r = math.sqrt(tmod) ** (1 - w) * prm.delta**w
    assume(math.sqrt(tmod) < r < prm.delta)
    assert collar_factor(r, prm) >= collar_factor(r, prm, "cusp") * (1 - 1e-12)


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.25, 2.0), st.floats(0.5, 1.5))
def test_harnack_bound_holds_for_positive_solutions(a, b, C1, R0):
    assume(a + b > 1e-3)
    k = math.sqrt(C1)
    f = SampledFunction.sample(lambda x: a * math.exp(k * x) + b * math.exp(-k * x), -2 * R0, 2 * R0, 257)
    rep = harnack_verify(f, C1, R0)
    assert rep.hypothesis_ok
    assert rep.ratio <= harnack_bound(C1, R0) * (1 + 1e-9)
