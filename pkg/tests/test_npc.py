import math

import numpy as np
import pytest

from wplab.errors import DomainError, UsageError
from wplab.model_metric import ChartPoint, ModelSpec
from wplab.npc import (
    IsometrySpec,
    SampledFunction,
    axis_construct,
    cat0_check,
    cat0_csv,
    cat0_suite,
    displacement,
    harnack_bound,
    harnack_verify,
    second_differences,
)

S = ModelSpec(2, 1, (1.0, 2.0))


def test_isometry_validation():
    with pytest.raises(DomainError):
        IsometrySpec("reflection")
    with pytest.raises(DomainError):
        IsometrySpec.rotation(2, 0.1).validate(S)
    with pytest.raises(DomainError):
        IsometrySpec.translation([1, 2]).validate(S)


def test_isometries_preserve_metric():
    x = ChartPoint([0.7, 1.3], [0.2, 0.1], [1j])
    rng = np.random.default_rng(3)
    for g in (
        IsometrySpec.translation([2 - 1j]),
        IsometrySpec.rotation(1, 0.7),
        IsometrySpec.compose(IsometrySpec.translation([1.0]), IsometrySpec.rotation(0, 2.0)),
    ):
        v, w = rng.normal(size=S.dim), rng.normal(size=S.dim)
        assert g.pullback_error(S, x, v, w) < 1e-13


def test_translation_displacement_is_constant():
    g = IsometrySpec.translation([3 + 4j])
    for u in (0.0, 0.5, 2.0):
        x = ChartPoint([u, 1.0], [0.0, 0.0], [1j])
        assert displacement(S, g, x) == pytest.approx(5.0, abs=1e-12)


def test_rotation_displacement_vanishes_on_stratum():
    g = IsometrySpec.rotation(0, 1.0)
    assert displacement(S, g, ChartPoint([0.0, 1.0], [0.0, 0.0], [0j])) == 0.0
    s1 = ModelSpec(1)
    vals = [displacement(s1, g, ChartPoint([2.0**-k])) for k in range(1, 6)]
    assert np.all(np.diff(vals) < 0)
    # below the arc length u^3/2 along the theta circle
    assert all(d <= u**3 / 2 + 1e-12 for d, u in zip(vals, [2.0**-k for k in range(1, 6)]))


def test_cat0_examples():
    r = cat0_check(S, ChartPoint([1.0, 0.5], [0, 0], [0j]), ChartPoint([0.3, 1.0], [2, 1], [1.0]), ChartPoint([0.8, 0.8], [-1, 0], [1j]))
    assert r.passed and r.slack >= -1e-8
    flat = ModelSpec(0, 2)
    r = cat0_check(flat, ChartPoint([], [], [0, 0]), ChartPoint([], [], [2, 0]), ChartPoint([], [], [1j, 1]))
    assert abs(r.slack) < 1e-12


def test_cat0_suite_and_csv():
    reps = cat0_suite(S, 6, seed=1)
    assert all(r.passed for r in reps)
    lines = cat0_csv(reps).splitlines()
    assert lines[0] == "case_id,lhs,rhs,slack,pass" and len(lines) == 7


def test_second_differences_exact_for_quadratics():
    s = np.array([0.0, 0.1, 0.35, 0.4, 1.0, 1.7])
    np.testing.assert_allclose(second_differences(s, 3 * s**2 - s + 2), 6.0, rtol=1e-12)


def test_sampled_function_preconditions():
    with pytest.raises(DomainError):
        SampledFunction([0, 1, 3], [1, 1, 1])
    with pytest.raises(DomainError):
        SampledFunction([0, 1, 2], [1, -1, 1])


def test_harnack_bound_is_sharp_and_holds():
    C1, R0 = 1.0, 1.0
    bound = harnack_bound(C1, R0)
    assert bound == pytest.approx(4 * math.cosh(1.0) ** 2 - 1)
    shifted = SampledFunction.sample(lambda x: math.sinh(x + 2 + 1e-9), -2, 2, 801)
    rep = harnack_verify(shifted, C1, R0)
    assert rep.hypothesis_ok and rep.ratio <= bound
    assert rep.ratio > math.cosh(2.0)  # exceeds the weaker cosh(2 sqrt(C1) R0) estimate
    ex = harnack_verify(SampledFunction.sample(math.exp, -2, 2, 801), C1, R0)
    assert ex.ratio == pytest.approx(math.e**2, rel=1e-10)


def test_harnack_detects_violations():
    f = SampledFunction.sample(lambda x: math.exp(2 * x), -2, 2, 801)
    assert not harnack_verify(f, 1.0, 1.0).hypothesis_ok
    z = SampledFunction.sample(lambda x: x * x, -2, 2, 801)
    rep = harnack_verify(z, 1.0, 1.0)
    assert rep.inf == 0 and rep.ratio == math.inf


def test_harnack_usage_errors():
    with pytest.raises(UsageError):
        harnack_verify(SampledFunction.sample(math.exp, -2, 2, 17), 1.0, 1.0)
    with pytest.raises(UsageError):
        harnack_verify(SampledFunction.sample(math.exp, -1, 1, 801), 1.0, 1.0)
    with pytest.raises(UsageError):
        harnack_verify(SampledFunction.sample(math.exp, -2, 2, 801), 0.0, 1.0)


def test_axis_translation_attained():
    g = IsometrySpec.translation([1.0])
    rep = axis_construct(S, g, ChartPoint([1.0, 1.0], [0, 0], [0j]))
    assert rep.attained
    assert rep.translation_length == pytest.approx(1.0, abs=1e-9)
    assert rep.collinearity_error < 1e-6


def test_axis_rotation_escapes():
    rep = axis_construct(ModelSpec(1), IsometrySpec.rotation(0, 1.0), ChartPoint([1.0]))
    assert not rep.attained
    d = [v for _, v in rep.sequence]
    assert np.all(np.diff(d) < 0)
    assert rep.point.u[0] < 1e-3
