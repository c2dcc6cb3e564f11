import json
import math

import numpy as np
import pytest

from wplab.collar import (
    CollarParams,
    FitReport,
    asymptotic_fit,
    collar_expansion_coefficients,
    collar_expansion_error,
    collar_factor,
    pairing_sweep,
    power_fit,
    sweep_csv,
    wolpert_length,
    wp_pairing,
)
from wplab.errors import DomainError, NumericalError
from wplab.model_metric import ChartPoint, coordinate_transform
from wplab.oracles import sin_sq_moment


def test_params_validation():
    CollarParams(1e-6, 0.1)
    with pytest.raises(DomainError):
        CollarParams(0.9, 0.1)
    with pytest.raises(DomainError):
        CollarParams(1e-3, 1.0)


def test_cusp_value():
    assert collar_factor(math.exp(-1), CollarParams(1e-3), "cusp") == pytest.approx(math.e**2)


def test_collar_core_value_is_finite():
    p = CollarParams(1e-6)
    r = math.sqrt(p.tmod)
    expected = math.pi**2 / (math.log(p.tmod) ** 2 * p.tmod)
    assert collar_factor(r, p) == pytest.approx(expected, rel=1e-12)


def test_collar_tends_to_cusp():
    p = CollarParams(1e-8)
    ratio = collar_factor(0.5, p) / collar_factor(0.5, p, "cusp")
    assert 0 <= ratio - 1 < 1e-2


def test_collar_domain():
    p = CollarParams(1e-4)
    for r in (1e-5, 1.0, 1.5):
        with pytest.raises(DomainError):
            collar_factor(r, p)
    with pytest.raises(DomainError):
        collar_factor(0.0, p, "cusp")
    with pytest.raises(DomainError):
        collar_factor(0.5, p, "horn")


def test_expansion_error_is_sixth_order():
    assert collar_expansion_error(1e-4) < 1e-25
    assert collar_expansion_error(0.1) / collar_expansion_error(0.05) == pytest.approx(64, rel=0.1)
    with pytest.raises(DomainError):
        collar_expansion_error(2.0)


def test_expansion_error_continuous_across_series_switch():
    a, b = collar_expansion_error(0.05 - 1e-9), collar_expansion_error(0.05 + 1e-9)
    assert a == pytest.approx(b, rel=1e-4)


def test_expansion_coefficients():
    c1, c2 = collar_expansion_coefficients()
    assert c1 == pytest.approx(1 / 3, abs=1e-3)
    assert c2 == pytest.approx(1 / 15, abs=1e-3)


def test_wolpert_length():
    assert wolpert_length(math.exp(-2 * math.pi**2)) == pytest.approx(1.0)
    assert wolpert_length(math.exp(-math.pi**2)) == pytest.approx(2.0)
    t = 1e-7
    pc = coordinate_transform(ChartPoint([math.sqrt(wolpert_length(t))]), "to-plumbing")
    assert pc.neglog[0] == pytest.approx(-math.log(t), rel=1e-14)
    for bad in (0.0, 1.0):
        with pytest.raises(DomainError):
            wolpert_length(bad)


def test_pairing_frozen_value():
    # 30-digit quadrature of the same integral in the radial variable
    assert wp_pairing(CollarParams(1e-6)) == pytest.approx(8.5045224490857729609e-11, rel=1e-11)


def test_pairing_normalized_bounds_and_limit():
    rows = pairing_sweep([10.0**-k for k in range(4, 13)])
    norm = [v / (t**2 * (-math.log(t)) ** 3) for t, _, v in rows]
    assert 0 < min(norm) <= max(norm) < 1
    # limit of the model integral: (4/pi^4) * integral of s^2/sqrt(1-s^2)
    limit = 4 / math.pi**4 * sin_sq_moment()
    assert norm[-1] == pytest.approx(limit, rel=1e-5)
    assert limit == pytest.approx(1 / math.pi**3, rel=1e-14)


def test_pairing_monotone():
    vals = [v for _, _, v in pairing_sweep(np.geomspace(1e-12, 1e-4, 17))]
    assert np.all(np.diff(vals) > 0)


def test_sweep_csv_header():
    text = sweep_csv(pairing_sweep([1e-4, 1e-5]))
    assert text.splitlines()[0] == "tmod,delta,value"
    assert text.splitlines()[1].startswith("0.0001,0.1,")


def test_fit_recovers_planted_exponents():
    t = np.geomspace(1e-12, 1e-4, 9)
    f = asymptotic_fit(list(zip(t, t**2)))
    assert (f.alpha, f.beta) == pytest.approx((2, 0), abs=1e-10) and f.residual < 1e-10
    f = asymptotic_fit(list(zip(t, 0.7 * t**2 * (-np.log(t)) ** 3)))
    assert (f.alpha, f.beta, f.constant) == pytest.approx((2, 3, 0.7), abs=1e-9)


def test_fit_of_pairing():
    rows = pairing_sweep([10.0**-k for k in range(4, 13)])
    f = asymptotic_fit([(t, v) for t, _, v in rows])
    assert f.alpha == pytest.approx(2, abs=0.05)
    assert f.beta == pytest.approx(3, abs=0.05)


def test_fit_preconditions():
    with pytest.raises(DomainError):
        asymptotic_fit([(1e-4, 1.0), (1e-5, 1.0), (1e-6, 1.0)])
    with pytest.raises(DomainError):
        asymptotic_fit([(1e-4, 1.0), (2e-4, 1.0), (3e-4, 1.0), (4e-4, 1.0)])
    with pytest.raises(NumericalError):
        asymptotic_fit([(1e-4, 1.0), (1e-4, 1.0), (1e-8, 2.0), (1e-8, 2.0)])


def test_fit_report_json():
    r = FitReport(2.0, 3.0, 0.5, 1e-9)
    assert set(json.loads(r.to_json())) == {"alpha", "beta", "constant", "residual"}
    assert FitReport.from_json(r.to_json()).beta == 3.0


def test_power_fit():
    x = np.array([0.4, 0.2, 0.1, 0.05])
    f = power_fit(x, 3 * x**5)
    assert f.alpha == pytest.approx(5) and f.constant == pytest.approx(3)
