import json
import os
import subprocess
import sys

import numpy as np
import pytest

from wplab import _kernels as K
from wplab._jit import NUMBA_ENABLED

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled")


def _random_path(rng, p, m, n=12):
    X = np.empty((n, 2 * p + 2 * m))
    X[:, :p] = rng.uniform(0.05, 1.5, (n, p))
    X[:, p:] = rng.normal(size=(n, p + 2 * m))
    return X


@pytest.mark.parametrize("p,m", [(1, 0), (2, 1), (0, 2)])
def test_path_energy_loop_matches_numpy(p, m):
    rng = np.random.default_rng(p + 7 * m)
    X = _random_path(rng, p, m)
    A = rng.uniform(0.5, 2, p)
    pert = rng.uniform(0, 1, p)
    for a, b in zip(K._path_energy_grad_loop(X, A, pert, p), K._path_energy_grad_numpy(X, A, pert, p)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_path_energy_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    X = _random_path(rng, 2, 1, 6)
    A, pert = np.array([1.0, 2.0]), np.array([0.5, 0.0])
    _, G, _, _ = K.path_energy_grad(X, A, pert, 2)
    h = 1e-6
    for k, j in [(1, 0), (2, 1), (3, 2), (4, 4), (2, 5)]:
        Xp, Xm = X.copy(), X.copy()
        Xp[k, j] += h
        Xm[k, j] -= h
        fd = (K.path_energy_grad(Xp, A, pert, 2)[0] - K.path_energy_grad(Xm, A, pert, 2)[0]) / (2 * h)
        assert G[k, j] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_tridiag_loop_matches_numpy():
    rng = np.random.default_rng(2)
    W = rng.uniform(0.1, 2.0, (9, 3))
    G = rng.normal(size=(10, 3))
    np.testing.assert_allclose(K._tridiag_precondition_loop(W, G), K._tridiag_precondition_numpy(W, G), rtol=1e-12)


@needs_numba
def test_integrator_compiled_matches_python():
    y0 = np.array([1.0, 0.6, 0.0, 0.3, 0.2, -0.1, 0.5, 1.0, 0.2, 0.1])
    pert = np.array([0.3, 0.0])
    grid = np.linspace(0, 2.0, 9)[1:]
    a = K.integrate_geodesic(y0, pert, 2, 2.0, 1e-10, grid, 100000)
    b = K.integrate_geodesic.py_func(y0, pert, 2, 2.0, 1e-10, grid, 100000)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-13)
    assert a[2:] == b[2:]


@needs_numba
def test_clairaut_compiled_matches_python():
    args = (0.5, 1.0, 0.25, 0.1, 1.0, 0.2, 1e-12, 200)
    np.testing.assert_allclose(K.clairaut_integrals(*args), K.clairaut_integrals.py_func(*args), rtol=1e-13)
    assert K.turning_point(0.1, 1.0, 0.5) == pytest.approx(K.turning_point.py_func(0.1, 1.0, 0.5), rel=1e-14)


_SCRIPT = """
import json
from wplab import _kernels, ChartPoint, ModelSpec, distance, connect
from wplab._jit import NUMBA_ENABLED
s = ModelSpec(2, 1, (1.0, 2.0), (0.3, 0.0))
p = ChartPoint([1.0, 0.4], [0.0, 1.0], [0j])
q = ChartPoint([0.6, 1.2], [2.0, -1.0], [1 - 1j])
tr = connect(s, p, q, n_samples=9)
print(json.dumps({"numba": NUMBA_ENABLED, "energy_kernel": _kernels.path_energy_grad.__name__,
                  "d": distance(s, p, q), "end": tr.X[-1].tolist()}))
"""


def test_numpy_fallback_agrees():
    env = dict(os.environ, WPLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    res = json.loads(out.stdout)
    assert res["numba"] is False and res["energy_kernel"] == "_path_energy_grad_numpy"
    from wplab import ChartPoint, ModelSpec, distance

    s = ModelSpec(2, 1, (1.0, 2.0), (0.3, 0.0))
    d = distance(s, ChartPoint([1.0, 0.4], [0.0, 1.0], [0j]), ChartPoint([0.6, 1.2], [2.0, -1.0], [1 - 1j]))
    assert res["d"] == pytest.approx(d, rel=1e-12)
    np.testing.assert_allclose(res["end"], [0.6, 1.2, 2.0, -1.0, 1.0, -1.0], atol=1e-8)
