"""Geodesics of the model metric: initial and boundary value problems.

The model space is a Riemannian product of two-dimensional node blocks and a
flat factor, so a geodesic between two points is the product of the block
geodesics traversed at constant speeds.  Each block problem is solved
semi-analytically through its Clairaut integral; :func:`connect` turns that
into an initial velocity, integrates the geodesic equation and corrects the
shot with Newton iterations when needed.  :func:`minimize_path` is the
independent discrete-energy oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from ._clairaut import solve_block
from .errors import ConvergenceError, DomainError, NumericalError
from .io import csv_text
from .model_metric import ChartPoint, ModelSpec, TangentVector, metric_diagonal

TERMINATIONS = {
    K.STATUS_LENGTH: "length-reached",
    K.STATUS_BOUNDARY: "boundary-hit",
    K.STATUS_STEP_FAILURE: "step-failure",
}

DEFAULT_TOL = 1e-8


def _energy(spec: ModelSpec, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    return (metric_diagonal(spec, X) * V * V).sum(axis=-1)


def _momenta(spec: ModelSpec, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    p = spec.p
    if p == 0:
        return np.zeros((X.shape[0], 0))
    g = metric_diagonal(spec, X)
    return g[:, p : 2 * p] * V[:, p : 2 * p]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled geodesic.

    ``X[k]`` and ``V[k]`` are the real coordinate vector and velocity at
    arclength ``s[k]``; ``energy`` and ``momenta`` are the conserved records
    g(v, v) and b_i(u_i) dtheta_i/ds.
    """

    spec: ModelSpec
    s: np.ndarray
    X: np.ndarray
    V: np.ndarray
    termination: str
    event_block: Optional[int] = None
    energy: np.ndarray = field(default=None)
    momenta: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.energy is None:
            object.__setattr__(self, "energy", _energy(self.spec, self.X, self.V))
        if self.momenta is None:
            object.__setattr__(self, "momenta", _momenta(self.spec, self.X, self.V))

    def __len__(self):
        return self.s.shape[0]

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def points(self) -> list:
        return [ChartPoint.from_vector(x, self.spec.p) for x in self.X]

    @property
    def samples(self) -> list:
        p = self.spec.p
        return [
            (float(s), ChartPoint.from_vector(x, p), TangentVector.from_vector(v, p))
            for s, x, v in zip(self.s, self.X, self.V)
        ]

    @property
    def start(self) -> ChartPoint:
        return ChartPoint.from_vector(self.X[0], self.spec.p)

    @property
    def end(self) -> ChartPoint:
        return ChartPoint.from_vector(self.X[-1], self.spec.p)

    def u(self, i: int = 0) -> np.ndarray:
        return self.X[:, i]

    def drift(self) -> dict:
        """Maximum relative drift of each conserved quantity per unit arclength."""
        L = max(self.length, 1e-300)
        e = self.energy
        out = {"energy": float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300) / L)}
        for i in range(self.momenta.shape[1]):
            m = self.momenta[:, i]
            scale = abs(m[0])
            out[f"momentum{i + 1}"] = 0.0 if scale == 0 else float(np.max(np.abs(m - m[0])) / scale / L)
        return out

    def csv_header(self) -> list:
        p, m = self.spec.p, self.spec.m
        cols = ["s"] + [f"u{i + 1}" for i in range(p)] + [f"theta{i + 1}" for i in range(p)]
        for j in range(m):
            cols += [f"ret{j + 1}", f"imt{j + 1}"]
        return cols

    def csv_rows(self) -> list:
        return [[float(s)] + [float(v) for v in x] for s, x in zip(self.s, self.X)]

    def to_csv(self) -> str:
        return csv_text(self.csv_header(), self.csv_rows())

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "termination": self.termination,
            "event_block": self.event_block,
            "length": self.length,
            "start": self.start.to_dict(),
            "end": self.end.to_dict(),
            "drift": self.drift(),
            "n_samples": len(self),
        }


@dataclass(frozen=True, eq=False)
class Polyline:
    """Discrete path with vertices ``X[k]`` in real coordinates."""

    spec: ModelSpec
    X: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] != self.spec.dim:
            raise DomainError(f"polyline needs >= 2 points of dimension {self.spec.dim}")
        if not np.all(np.isfinite(X)):
            raise DomainError("polyline contains non-finite coordinates")
        if self.spec.p and np.any(X[:, : self.spec.p] < 0):
            raise DomainError("polyline leaves the model space (u < 0)")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @classmethod
    def from_points(cls, spec: ModelSpec, points: Sequence[ChartPoint]) -> "Polyline":
        return cls(spec, np.array([pt.check(spec).to_vector() for pt in points]))

    @classmethod
    def straight(cls, spec: ModelSpec, p: ChartPoint, q: ChartPoint, n_points: int = 33) -> "Polyline":
        """Coordinate-straight path; boundary angles are aligned with the other end."""
        a, b = _aligned_vectors(spec, p, q)
        s = np.linspace(0.0, 1.0, n_points)[:, None]
        return cls(spec, (1.0 - s) * a + s * b)

    @property
    def points(self) -> list:
        return [ChartPoint.from_vector(x, self.spec.p) for x in self.X]

    @property
    def n_segments(self) -> int:
        return self.X.shape[0] - 1

    def refine(self) -> "Polyline":
        """Insert segment midpoints (dyadic refinement)."""
        X = self.X
        out = np.empty((2 * X.shape[0] - 1, X.shape[1]))
        out[0::2] = X
        out[1::2] = 0.5 * (X[1:] + X[:-1])
        return Polyline(self.spec, out)


# ---------------------------------------------------------------------------
# initial value problem
# ---------------------------------------------------------------------------


def _unit_velocity(spec: ModelSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    nrm = math.sqrt(float(metric_diagonal(spec, x) @ (v * v)))
    if not nrm > 0 or not math.isfinite(nrm):
        raise DomainError("initial velocity must have positive finite norm")
    return v / nrm


def _integrate(spec, x, v, length, tol, n_samples=None, max_steps=2_000_000):
    y0 = np.concatenate([x, v])
    grid = np.empty(0) if not n_samples else np.linspace(0.0, length, int(n_samples))[1:]
    S, Y, status, ev, _ = K.integrate_geodesic(
        y0, spec.pert_array, spec.p, float(length), float(tol), grid, int(max_steps)
    )
    n = spec.dim
    X, V = Y[:, :n].copy(), Y[:, n:].copy()
    if spec.p:
        X[:, : spec.p] = np.maximum(X[:, : spec.p], 0.0)
    return Trajectory(spec, S, X, V, TERMINATIONS[int(status)], int(ev) if ev >= 0 else None)


def shoot(
    spec: ModelSpec,
    x0: ChartPoint,
    v0: TangentVector,
    length: float,
    tol: float = DEFAULT_TOL,
    n_samples: Optional[int] = None,
) -> Trajectory:
    """Unit-speed geodesic from ``x0`` in direction ``v0`` up to arclength ``length``.

    Integration stops at the first boundary event u_i = 0.  With ``n_samples``
    the trajectory is recorded on a uniform arclength grid, otherwise at every
    accepted step.
    """
    x0.check(spec)
    if not length > 0:
        raise DomainError(f"length must be positive, got {length}")
    if not 0 < tol <= 1e-2:
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol}")
    x, v = x0.to_vector(), v0.to_vector()
    if v.shape != x.shape:
        raise DomainError("tangent vector does not match the point dimension")
    p = spec.p
    for i in range(p):
        if x[i] == 0.0 and v[p + i] != 0.0:
            raise DomainError(f"dtheta_{i + 1} must vanish at u_{i + 1} = 0")
        if x[i] == 0.0 and v[i] < 0.0:
            raise DomainError(f"velocity leaves the model space through u_{i + 1} = 0")
    v = _unit_velocity(spec, x, v)
    return _integrate(spec, x, v, length, tol, n_samples)


# ---------------------------------------------------------------------------
# boundary value problem
# ---------------------------------------------------------------------------


def _aligned_vectors(spec, p: ChartPoint, q: ChartPoint):
    """Coordinate vectors with theta copied across blocks where one end has u = 0."""
    p.check(spec)
    q.check(spec)
    a, b = p.to_vector(), q.to_vector()
    P = spec.p
    for i in range(P):
        if a[i] == 0.0:
            a[P + i] = b[P + i]
        elif b[i] == 0.0:
            b[P + i] = a[P + i]
    return a, b


def coincide(spec: ModelSpec, p: ChartPoint, q: ChartPoint) -> bool:
    """True when p and q are the same point of the model space (theta unwrapped)."""
    a, b = _aligned_vectors(spec, p, q)
    return bool(np.array_equal(a, b))


@dataclass(frozen=True)
class ProductSolution:
    """Block-wise solution of the two-point problem."""

    length: float
    block_lengths: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    v0: np.ndarray  # unit initial velocity


def solve_product(spec: ModelSpec, p: ChartPoint, q: ChartPoint) -> ProductSolution:
    a, b = _aligned_vectors(spec, p, q)
    P = spec.p
    blocks = [
        solve_block(a[i], a[P + i], b[i], b[P + i], spec.A[i], spec.pert[i]) for i in range(P)
    ]
    ells = np.array([g.length for g in blocks])
    flat = b[2 * P :] - a[2 * P :]
    L = math.sqrt(float(ells @ ells + flat @ flat))
    v = np.zeros(spec.dim)
    if L > 0:
        for i, g in enumerate(blocks):
            du, dth = g.initial_velocity(spec.A[i], spec.pert[i])
            v[i] = du * g.length / L
            v[P + i] = dth * g.length / L
        v[2 * P :] = flat / L
    return ProductSolution(L, ells, a, b, v)


def _mismatch(spec, x, target):
    """Metric-weighted endpoint error, angles ignored where the target is on the boundary."""
    g = metric_diagonal(spec, 0.5 * (x + target))
    d = x - target
    return math.sqrt(float(g @ (d * d)))


def _newton_correct(spec, x0, v0, L, target, tol, ivp_tol, max_iter=25):
    """Damped Newton on the initial velocity V (|V| = length) of the shot."""
    n = spec.dim

    def endpoint(V):
        nrm = math.sqrt(float(metric_diagonal(spec, x0) @ (V * V)))
        traj = _integrate(spec, x0, V / nrm, nrm, ivp_tol)
        return traj.X[-1], traj

    V = v0 * L
    xe, _ = endpoint(V)
    res = xe - target
    err = _mismatch(spec, xe, target)
    for _ in range(max_iter):
        if err <= tol:
            return V, err
        J = np.empty((n, n))
        for j in range(n):
            h = 1e-7 * max(1.0, abs(V[j]))
            Vh = V.copy()
            Vh[j] += h
            J[:, j] = (endpoint(Vh)[0] - xe) / h
        step = np.linalg.lstsq(J, -res, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            Vt = V + lam * step
            xt, _ = endpoint(Vt)
            et = _mismatch(spec, xt, target)
            if et < err:
                V, xe, err, res = Vt, xt, et, xt - target
                break
            lam *= 0.5
        else:
            break
    return V, err


def connect(
    spec: ModelSpec,
    p: ChartPoint,
    q: ChartPoint,
    tol: float = DEFAULT_TOL,
    n_samples: int = 65,
    seed: int = 0,
) -> Trajectory:
    """Geodesic from ``p`` to ``q`` sampled at ``n_samples`` arclength values.

    The shot uses the block-wise Clairaut solution as initial direction; the
    attached length is the quadrature value.  Falls back to damped Newton and
    finally to the discrete minimizer when the endpoint misses by more than
    ``tol``.  The construction is deterministic, ``seed`` is accepted for
    interface symmetry with the random suites.
    """
    if not 0 < tol <= 1e-2:
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol}")
    if coincide(spec, p, q):
        raise DomainError("connect needs two distinct points")
    sol = solve_product(spec, p, q)
    ivp_tol = min(1e-2 * tol, 1e-11)
    traj = _integrate(spec, sol.x0, sol.v0, sol.length, ivp_tol, n_samples)
    err = _mismatch(spec, traj.X[-1], sol.x1)
    if err <= tol and _complete(traj, sol.length, tol):
        return traj
    V, err = _newton_correct(spec, sol.x0, sol.v0, sol.length, sol.x1, tol, ivp_tol)
    if err <= tol:
        nrm = math.sqrt(float(metric_diagonal(spec, sol.x0) @ (V * V)))
        traj = _integrate(spec, sol.x0, V / nrm, nrm, ivp_tol, n_samples)
        if _complete(traj, nrm, tol):
            return traj
    try:
        poly = minimize_path(spec, Polyline.straight(spec, p, q, n_samples), tol)
    except ConvergenceError as exc:
        raise ConvergenceError(
            "connect did not converge", best=traj, mismatch=err, polyline=exc.best
        ) from exc
    return _trajectory_from_polyline(spec, poly)


def _complete(traj, L, tol):
    return traj.termination == "length-reached" or (
        traj.termination == "boundary-hit" and abs(traj.length - L) <= max(tol, 1e-9 * L)
    )


def _trajectory_from_polyline(spec, poly):
    X = np.array(poly.X)
    D = np.diff(X, axis=0)
    g = metric_diagonal(spec, 0.5 * (X[1:] + X[:-1]))
    seg = np.sqrt((g * D * D).sum(axis=1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    V = np.gradient(X, s, axis=0)
    return Trajectory(spec, s, X, V, "length-reached")


def distance(spec: ModelSpec, p: ChartPoint, q: ChartPoint, tol: float = DEFAULT_TOL) -> float:
    """Length of the connecting geodesic, evaluated by the Clairaut quadrature."""
    if coincide(spec, p, q):
        return 0.0
    return solve_product(spec, p, q).length


def midpoint(spec: ModelSpec, p: ChartPoint, q: ChartPoint, tol: float = DEFAULT_TOL) -> ChartPoint:
    """Point halfway along the geodesic from p to q."""
    if coincide(spec, p, q):
        return p
    sol = solve_product(spec, p, q)
    traj = _integrate(spec, sol.x0, sol.v0, 0.5 * sol.length, min(1e-2 * tol, 1e-12))
    if traj.termination == "step-failure":
        raise NumericalError("midpoint integration failed", p=p.to_dict(), q=q.to_dict())
    return ChartPoint.from_vector(traj.X[-1], spec.p)


# ---------------------------------------------------------------------------
# discrete functionals and the minimization oracle
# ---------------------------------------------------------------------------


def path_functionals(spec: ModelSpec, path: Polyline):
    """(length, energy) of a polyline with the metric frozen at segment midpoints.

    energy = sum_k |dx_k|^2, so that length^2 <= n_segments * energy.
    """
    E, _, _, seg = K.path_energy_grad(np.ascontiguousarray(path.X), spec.A_array, spec.pert_array, spec.p)
    return float(seg.sum()), float(E)


@dataclass(frozen=True)
class MinimizeInfo:
    iterations: int
    energy: float
    energies: tuple
    converged: bool


def _project(spec, X):
    if spec.p:
        np.maximum(X[1:-1, : spec.p], 0.0, out=X[1:-1, : spec.p])
    return X


def minimize_path(
    spec: ModelSpec,
    init: Polyline,
    tol: float = DEFAULT_TOL,
    max_iter: int = 20000,
    return_info: bool = False,
):
    """Minimize the discrete energy with endpoints pinned.

    Each step is a gradient step preconditioned by the frozen-metric Hessian
    (a tridiagonal solve per coordinate) with Armijo backtracking and
    projection onto u >= 0.  Stops when the relative energy decrease of an
    accepted step falls below ``tol**2`` or the step itself is below ``tol``.
    """
    if init.X.shape[0] < 3:
        raise DomainError("minimize_path needs at least 3 points")
    A, pert, p = spec.A_array, spec.pert_array, spec.p
    X = np.array(init.X)
    E, G, W, _ = K.path_energy_grad(X, A, pert, p)
    energies = [E]
    converged = False
    small = 0
    it = 0
    for it in range(1, max_iter + 1):
        Wreg = W + 1e-14 * np.maximum(W.max(axis=0), 1e-300)
        d = K.tridiag_precondition(Wreg, G)
        slope = float((G * d).sum())
        if not slope > 0:
            converged = True
            break
        lam = 1.0
        while True:
            Xt = _project(spec, X - lam * d)
            Et, Gt, Wt, _ = K.path_energy_grad(Xt, A, pert, p)
            if Et <= E - 1e-4 * lam * slope or lam < 1e-12:
                break
            lam *= 0.5
        if Et > E:
            converged = True
            break
        step = float(np.max(np.abs(Xt - X)))
        dec = (E - Et) / max(E, 1e-300)
        X, E, G, W = Xt, Et, Gt, Wt
        energies.append(E)
        if dec <= tol * tol or step <= 1e-2 * tol:
            small += 1
            if small >= 3:
                converged = True
                break
        else:
            small = 0
    out = Polyline(spec, X)
    info = MinimizeInfo(it, E, tuple(energies), converged)
    if not converged:
        raise ConvergenceError("minimize_path iteration budget exhausted", best=out, info=info)
    return (out, info) if return_info else out


def oracle_length(
    spec: ModelSpec,
    p: ChartPoint,
    q: ChartPoint,
    tol: float = 1e-10,
    levels: Sequence[int] = (16, 32, 64, 128, 256),
) -> float:
    """Length of the discrete energy minimizer, Richardson-extrapolated in h^2.

    Minimizes on successively refined polylines (each initialized from the
    previous minimizer) and extrapolates the two finest lengths.
    """
    poly = Polyline.straight(spec, p, q, levels[0] + 1)
    lengths = []
    for k, n in enumerate(levels):
        if k:
            while poly.n_segments < n:
                poly = poly.refine()
        poly = minimize_path(spec, poly, tol)
        lengths.append(path_functionals(spec, poly)[0])
    if len(lengths) == 1:
        return lengths[0]
    r = (levels[-1] / levels[-2]) ** 2
    return (r * lengths[-1] - lengths[-2]) / (r - 1.0)
