import json
import math

import numpy as np
import pytest

from wplab.errors import DegenerateCoordinateError, DomainError
from wplab.model_metric import (
    ChartPoint,
    ModelSpec,
    PlumbingCoords,
    TangentVector,
    christoffel,
    coordinate_transform,
    gauss_curvature_block,
    metric_tensor,
)
from wplab.oracles import block_curvature_fd, christoffel_fd


def test_spec_defaults_and_validation():
    s = ModelSpec(2, 1)
    assert s.A == (1.0, 1.0) and s.pert == (0.0, 0.0) and s.dim == 6
    with pytest.raises(DomainError):
        ModelSpec(0, 0)
    with pytest.raises(DomainError):
        ModelSpec(1, 0, (0.0,))
    with pytest.raises(DomainError):
        ModelSpec(1, 0, (1.0,), (-0.1,))
    with pytest.raises(DomainError):
        ModelSpec(2, 0, (1.0,))


def test_spec_json_round_trip():
    s = ModelSpec(2, 1, (0.5, 2.0), (0.0, 1.5))
    d = json.loads(s.to_json())
    assert set(d) == {"p", "m", "A", "pert"}
    assert ModelSpec.from_json(s.to_json()) == s


def test_point_equality_reduces_theta_mod_two_pi():
    a = ChartPoint([1.0], [0.3])
    assert a == ChartPoint([1.0], [0.3 + 2 * math.pi])
    assert a != ChartPoint([1.0], [0.4])
    # theta is irrelevant on the stratum u = 0
    assert ChartPoint([0.0], [0.1]) == ChartPoint([0.0], [2.5])
    assert ChartPoint([0.0, 1.0], [9.0, 1.0], [1j]) != ChartPoint([0.0, 1.0], [9.0, 1.0], [2j])


def test_point_rejects_negative_u():
    with pytest.raises(DomainError):
        ChartPoint([-0.1])


def test_point_json_layout():
    x = ChartPoint([1.0, 0.5], [0.0, 2.0], [1 + 2j])
    d = json.loads(x.to_json())
    assert d == {"u": [1.0, 0.5], "theta": [0.0, 2.0], "t": [[1.0, 2.0]]}
    assert ChartPoint.from_json(x.to_json()) == x


def test_metric_examples():
    s = ModelSpec(1)
    np.testing.assert_allclose(metric_tensor(s, ChartPoint([1.0])), np.diag([1.0, 0.25]))
    np.testing.assert_allclose(metric_tensor(s, ChartPoint([0.0])), np.diag([1.0, 0.0]))
    sp = ModelSpec(1, 0, pert=(1.0,))
    np.testing.assert_allclose(metric_tensor(sp, ChartPoint([1.0])), np.diag([2.0, 0.5]))


def test_metric_flat_block_is_identity():
    s = ModelSpec(1, 2, (3.0,))
    g = metric_tensor(s, ChartPoint([0.5], [0.0], [1j, 2.0]))
    np.testing.assert_allclose(g[2:, 2:], np.eye(4))
    assert np.count_nonzero(g - np.diag(np.diag(g))) == 0


def test_tangent_norm_ignores_dtheta_on_boundary():
    s = ModelSpec(1)
    v = TangentVector([0.0], [5.0])
    assert v.norm(s, ChartPoint([0.0])) == 0.0
    assert v.norm(s, ChartPoint([1.0])) == pytest.approx(2.5)


def test_christoffel_unperturbed_values():
    s = ModelSpec(1)
    G = christoffel(s, ChartPoint([1.0]))
    # frozen from central differences of the metric, h = 1e-5
    assert G[0, 1, 1] == pytest.approx(-0.75, abs=1e-9)
    assert G[1, 0, 1] == pytest.approx(3.0, abs=1e-9)
    assert G[1, 1, 0] == G[1, 0, 1]
    assert G[0, 0, 0] == 0.0
    assert G[1, 1, 1] == 0.0 and G[0, 0, 1] == 0.0


@pytest.mark.parametrize("u", [0.2, 0.7, 1.3, 2.0])
def test_christoffel_matches_finite_differences(u):
    s = ModelSpec(2, 1, (1.5, 0.5), (0.7, 0.0))
    x = ChartPoint([u, 1.1], [0.2, -0.4], [0.3 - 1j])
    np.testing.assert_allclose(christoffel(s, x), christoffel_fd(s, x), atol=1e-6, rtol=0)


def test_christoffel_undefined_on_boundary():
    with pytest.raises(DegenerateCoordinateError):
        christoffel(ModelSpec(1), ChartPoint([0.0]))


def test_curvature_examples():
    assert gauss_curvature_block(1.0) == -6.0
    assert gauss_curvature_block(2.0) == -1.5
    assert block_curvature_fd(ModelSpec(1), 0, 1.0) == pytest.approx(-6.0, rel=1e-4)
    assert block_curvature_fd(ModelSpec(1), 0, 2.0) == pytest.approx(-1.5, rel=1e-4)
    with pytest.raises(DomainError):
        gauss_curvature_block(0.0)
    with pytest.raises(DomainError):
        gauss_curvature_block(1.0, -1.0)


def test_plumbing_examples():
    pc = coordinate_transform(ChartPoint([1.0], [0.0]), "to-plumbing")
    assert pc.t[0] == pytest.approx(math.exp(-2 * math.pi**2), rel=1e-14)
    assert pc.t[0] == pytest.approx(2.66e-9, rel=1e-2)
    pc2 = coordinate_transform(ChartPoint([math.sqrt(2)], [0.0]), "to-plumbing")
    assert pc2.neglog[0] == pytest.approx(math.pi**2, rel=1e-15)
    back = coordinate_transform(PlumbingCoords.from_complex([0j]), "from-plumbing")
    assert back.u[0] == 0.0
    pz = coordinate_transform(ChartPoint([0.0]), "to-plumbing")
    assert pz.t[0] == 0


def test_plumbing_rejects_unit_modulus():
    with pytest.raises(DomainError):
        PlumbingCoords.from_complex([1.0 + 0j])
    with pytest.raises(DomainError):
        coordinate_transform(PlumbingCoords(np.array([0.0]), np.array([0.0]), np.array([])), "from-plumbing")


def test_plumbing_argument_is_theta():
    pc = coordinate_transform(ChartPoint([2.0], [1.25]), "to-plumbing")
    t = pc.t[0]
    assert math.atan2(t.imag, t.real) == pytest.approx(1.25)
    back = coordinate_transform(pc, "from-plumbing")
    assert back == ChartPoint([2.0], [1.25])
