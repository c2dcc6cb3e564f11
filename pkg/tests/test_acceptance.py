"""The eleven acceptance criteria at their stated tolerances.

Criterion 3 is expected to fail on its constant check only: the model's
pairing limit is 1/pi^3, not the stated target.  It is marked as a strict
xfail so that an unexpected pass is reported too.
"""
import pytest

from wplab.acceptance import CRITERIA, run_acceptance

KNOWN_FAILURES = {3: "fitted constant converges to 1/pi^3, the stated target is a factor pi^2/2 larger"}


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in run_acceptance()}


def test_report(results, capsys):
    with capsys.disabled():
        print()
        for k in sorted(results):
            print(results[k].line())
    assert sorted(results) == list(range(1, 12))


@pytest.mark.parametrize(
    "number",
    [
        pytest.param(k, marks=pytest.mark.xfail(reason=KNOWN_FAILURES[k], strict=True)) if k in KNOWN_FAILURES else k
        for k in sorted(CRITERIA)
    ],
)
def test_criterion(results, number):
    r = results[number]
    assert r.passed, r.line()


def test_blowup_rate_fails_only_on_constant(results):
    r = results[3]
    assert [k for k, ok in r.checks.items() if not ok] == ["constant"]
    assert r.metrics["constant_vs_model_limit"] < 1e-3
