"""Compare the numba kernels against their uncompiled and numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat N]

The uncompiled timings call ``.py_func`` on the same source, so the comparison
needs numba installed and not disabled.
"""
import argparse
import timeit

import numpy as np

from wplab import _kernels as K
from wplab._jit import NUMBA_ENABLED


def _cases():
    y0 = np.array([1.0, 0.6, 0.0, 0.3, 0.2, -0.1, 0.5, 1.0, 0.2, 0.1])
    pert = np.array([0.3, 0.0])
    grid = np.empty(0)
    ivp = (y0, pert, 2, 5.0, 1e-10, grid, 1_000_000)
    quad = (0.05, 1.5, 0.0025, 0.04, 1.0, 0.2, 1e-13, 400)
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(0.1, 1.5, (257, 2)), rng.normal(size=(257, 4))])
    A, pp = np.array([1.0, 2.0]), np.array([0.3, 0.0])
    _, G, W, _ = K._path_energy_grad_numpy(X, A, pp, 2)
    return [
        ("integrate_geodesic", K.integrate_geodesic, getattr(K.integrate_geodesic, "py_func", None), None, ivp),
        ("clairaut_integrals", K.clairaut_integrals, getattr(K.clairaut_integrals, "py_func", None), None, quad),
        ("path_energy_grad", K._path_energy_grad_loop, getattr(K._path_energy_grad_loop, "py_func", None),
         K._path_energy_grad_numpy, (X, A, pp, 2)),
        ("tridiag_precondition", K._tridiag_precondition_loop, getattr(K._tridiag_precondition_loop, "py_func", None),
         K._tridiag_precondition_numpy, (W, G)),
    ]


def _time(fn, args, repeat):
    fn(*args)
    n, _ = timeit.Timer(lambda: fn(*args)).autorange()
    return min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        raise SystemExit("numba is disabled; unset WPLAB_DISABLE_NUMBA to compare")
    K.warmup()
    print(f"{'kernel':<22}{'numba [s]':>12}{'python [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, jit, py, vec, a in _cases():
        tj = _time(jit, a, args.repeat)
        tp = _time(py, a, 1)
        tv = _time(vec, a, args.repeat) if vec else float("nan")
        ref = tv if vec else tp
        print(f"{name:<22}{tj:>12.3e}{tp:>12.3e}{tv:>12.3e}{ref / tj:>9.1f}x")


if __name__ == "__main__":
    main()
