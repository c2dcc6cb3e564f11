"""Comparison geometry and isometries of the model space."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, UsageError
from .geodesics import DEFAULT_TOL, Trajectory, connect, distance, midpoint
from .io import csv_text
from .model_metric import ChartPoint, ModelSpec, TangentVector, metric_diagonal

# ---------------------------------------------------------------------------
# isometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsometrySpec:
    """Flat translation, theta-rotation of one block, or a composition."""

    kind: str
    vector: tuple = ()
    block: int = 0
    angle: float = 0.0
    parts: tuple = ()

    def __post_init__(self):
        if self.kind not in ("flat-translation", "theta-rotation", "composition"):
            raise DomainError(f"unknown isometry kind {self.kind!r}")
        if self.kind == "flat-translation":
            object.__setattr__(self, "vector", tuple(complex(z) for z in np.atleast_1d(self.vector)))
        if self.kind == "theta-rotation" and (self.block < 0 or not math.isfinite(self.angle)):
            raise DomainError("theta-rotation needs a block index >= 0 and a finite angle")
        if self.kind == "composition":
            object.__setattr__(self, "parts", tuple(self.parts))

    @classmethod
    def translation(cls, vector) -> "IsometrySpec":
        return cls("flat-translation", vector=tuple(np.atleast_1d(vector)))

    @classmethod
    def rotation(cls, block: int, angle: float) -> "IsometrySpec":
        return cls("theta-rotation", block=int(block), angle=float(angle))

    @classmethod
    def compose(cls, *parts: "IsometrySpec") -> "IsometrySpec":
        return cls("composition", parts=parts)

    @classmethod
    def identity(cls) -> "IsometrySpec":
        return cls("composition", parts=())

    def validate(self, spec: ModelSpec) -> "IsometrySpec":
        if self.kind == "flat-translation" and len(self.vector) != spec.m:
            raise DomainError(f"translation vector needs {spec.m} entries")
        if self.kind == "theta-rotation" and self.block >= spec.p:
            raise DomainError(f"block {self.block} out of range for p={spec.p}")
        for part in self.parts:
            part.validate(spec)
        return self

    def apply_vector(self, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float)
        if self.kind == "flat-translation":
            v = np.asarray(self.vector, dtype=complex)
            x[2 * spec.p :: 2] += v.real
            x[2 * spec.p + 1 :: 2] += v.imag
        elif self.kind == "theta-rotation":
            x[spec.p + self.block] += self.angle
        else:
            for part in self.parts:
                x = part.apply_vector(spec, x)
        return x

    def apply(self, spec: ModelSpec, x: ChartPoint) -> ChartPoint:
        self.validate(spec)
        return ChartPoint.from_vector(self.apply_vector(spec, x.check(spec).to_vector()), spec.p)

    def differential(self, spec: ModelSpec) -> np.ndarray:
        """Jacobian in real coordinates (both generators are translations of the chart)."""
        return np.eye(spec.dim)

    def pullback_error(self, spec: ModelSpec, x: ChartPoint, v: np.ndarray, w: np.ndarray) -> float:
        """|g_{gamma x}(dgamma v, dgamma w) - g_x(v, w)|."""
        J = self.differential(spec)
        gx = metric_diagonal(spec, x.to_vector())
        gy = metric_diagonal(spec, self.apply_vector(spec, x.to_vector()))
        return float(abs((J @ v) @ (gy * (J @ w)) - v @ (gx * w)))

    def to_dict(self) -> dict:
        if self.kind == "flat-translation":
            return {"kind": self.kind, "vector": [[z.real, z.imag] for z in self.vector]}
        if self.kind == "theta-rotation":
            return {"kind": self.kind, "block": self.block, "angle": self.angle}
        return {"kind": self.kind, "parts": [p.to_dict() for p in self.parts]}


def displacement(spec: ModelSpec, gamma: IsometrySpec, x: ChartPoint, tol: float = DEFAULT_TOL) -> float:
    """delta_gamma(x) = d(x, gamma x)."""
    return distance(spec, x, gamma.apply(spec, x), tol)


# ---------------------------------------------------------------------------
# CAT(0) comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cat0Report:
    lhs: float
    rhs: float
    slack: float
    passed: bool
    case_id: int = 0

    def row(self):
        return [self.case_id, self.lhs, self.rhs, self.slack, self.passed]


CAT0_HEADER = ["case_id", "lhs", "rhs", "slack", "pass"]


def cat0_check(spec: ModelSpec, p: ChartPoint, q: ChartPoint, r: ChartPoint, tol: float = DEFAULT_TOL, case_id: int = 0) -> Cat0Report:
    """Midpoint form of the CAT(0) inequality.

    lhs = d(m, r) with m the midpoint of [p, q]; rhs is the length of the
    corresponding median of the Euclidean comparison triangle.
    """
    a = distance(spec, p, r, tol)
    b = distance(spec, q, r, tol)
    c = distance(spec, p, q, tol)
    m = midpoint(spec, p, q, tol)
    lhs = distance(spec, m, r, tol)
    rhs = math.sqrt(max(0.0, 0.5 * a * a + 0.5 * b * b - 0.25 * c * c))
    slack = rhs - lhs
    return Cat0Report(lhs, rhs, slack, slack >= -3.0 * tol, case_id)


def random_point(spec: ModelSpec, rng: np.random.Generator, u_range=(0.3, 2.0), theta_scale=1.5, t_scale=1.0) -> ChartPoint:
    u = rng.uniform(*u_range, spec.p)
    theta = rng.uniform(-theta_scale, theta_scale, spec.p)
    t = t_scale * (rng.normal(size=spec.m) + 1j * rng.normal(size=spec.m))
    return ChartPoint(u, theta, t)


def flat_point(spec: ModelSpec, rng: np.random.Generator, t_scale=1.0) -> ChartPoint:
    """Random point of the boundary stratum u = 0."""
    t = t_scale * (rng.normal(size=spec.m) + 1j * rng.normal(size=spec.m))
    return ChartPoint(np.zeros(spec.p), rng.uniform(-3, 3, spec.p), t)


def cat0_suite(spec: ModelSpec, n: int, seed: int = 0, tol: float = DEFAULT_TOL, flat: bool = False, u_range=(0.3, 2.0)) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        if flat:
            pts = [flat_point(spec, rng) for _ in range(3)]
        else:
            pts = [random_point(spec, rng, u_range) for _ in range(3)]
        out.append(cat0_check(spec, *pts, tol=tol, case_id=k))
    return out


def cat0_csv(reports: Sequence[Cat0Report]) -> str:
    return csv_text(CAT0_HEADER, [r.row() for r in reports])


# ---------------------------------------------------------------------------
# convexity
# ---------------------------------------------------------------------------


def second_differences(s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Three-point second derivative on a possibly non-uniform grid."""
    h0 = s[1:-1] - s[:-2]
    h1 = s[2:] - s[1:-1]
    return 2.0 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))


def convexity_scan(spec: ModelSpec, field: Callable[[ChartPoint], float], traj: Trajectory) -> float:
    """Minimum central second difference of ``field`` along the trajectory."""
    if len(traj) < 5:
        raise DomainError("convexity_scan needs at least 5 samples")
    vals = np.array([field(pt) for pt in traj.points])
    return float(np.min(second_differences(traj.s, vals)))


def u_squared(i: int = 0) -> Callable[[ChartPoint], float]:
    return lambda x: float(x.u[i] ** 2)


def displacement_field(spec: ModelSpec, gamma: IsometrySpec, tol: float = DEFAULT_TOL):
    return lambda x: displacement(spec, gamma, x, tol)


# ---------------------------------------------------------------------------
# Harnack-type verifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 3:
            raise DomainError("grid and values must be 1-d arrays of equal length >= 3")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise DomainError("grid and values must be finite")
        h = np.diff(g)
        if np.any(h <= 0):
            raise DomainError("grid must be increasing")
        if np.max(np.abs(h - h.mean())) > 1e-12 * max(abs(h.mean()), np.max(np.abs(g))):
            raise DomainError("grid must be uniform")
        if np.any(v < 0):
            raise DomainError("values must be >= 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func, lo: float, hi: float, n: int) -> "SampledFunction":
        g = np.linspace(lo, hi, n)
        return cls(g, np.array([func(x) for x in g], dtype=float))

    @property
    def step(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))


@dataclass(frozen=True)
class HarnackReport:
    hypothesis_ok: bool
    ratio: float
    violation: float
    sup: float
    inf: float
    vanishing_violation: bool

    def to_dict(self):
        return dict(self.__dict__)


def harnack_verify(f: SampledFunction, C1: float, R0: float, tol: float = 1e-3) -> HarnackReport:
    """Check f'' <= C1 f on the grid and report sup/inf of f on [-R0, R0].

    The hypothesis holds when max(f'' - C1 f) <= tol * max|f| with f'' from
    central differences.  ``vanishing_violation`` flags a function that passes the
    hypothesis yet vanishes somewhere in [-R0, R0] without vanishing identically.
    """
    if not (C1 > 0 and R0 > 0):
        raise UsageError("C1 and R0 must be positive")
    h = f.step
    slack = 1e-9 * max(1.0, R0)
    if f.grid[0] > -2 * R0 + slack or f.grid[-1] < 2 * R0 - slack:
        raise UsageError("grid must cover [-2 R0, 2 R0]")
    if R0 / h < 16 - 1e-9:
        raise UsageError(f"grid too coarse: {R0 / h:.3g} points per R0, need >= 16")
    v = f.values
    fpp = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
    viol = float(np.max(fpp - C1 * v[1:-1]))
    scale = float(np.max(np.abs(v)))
    ok = viol <= tol * scale
    inner = np.abs(f.grid) <= R0 + 1e-12 * max(1.0, R0)
    sup = float(np.max(v[inner]))
    inf = float(np.min(v[inner]))
    if inf > 0:
        ratio = sup / inf
    elif sup > 0:
        ratio = math.inf
    else:
        ratio = math.nan
    return HarnackReport(bool(ok), ratio, viol, sup, inf, bool(ok and inf == 0 and sup > 0))


def harnack_bound(C1: float, R0: float) -> float:
    """Sharp sup/inf bound on [-R0, R0] for positive solutions of f'' = C1 f on [-2R0, 2R0]."""
    c = math.cosh(math.sqrt(C1) * R0)
    return 4.0 * c * c - 1.0


# ---------------------------------------------------------------------------
# axis construction
# ---------------------------------------------------------------------------


@dataclass
class AxisReport:
    attained: bool
    translation_length: float
    point: ChartPoint
    orbit: list = field(default_factory=list)
    collinearity_error: float = math.nan
    midpoint_displacement: float = math.nan
    sequence: list = field(default_factory=list)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "attained": self.attained,
            "translation_length": self.translation_length,
            "point": self.point.to_dict(),
            "orbit": [x.to_dict() for x in self.orbit],
            "collinearity_error": self.collinearity_error,
            "midpoint_displacement": self.midpoint_displacement,
            "sequence": [[x.to_dict(), d] for x, d in self.sequence],
            "iterations": self.iterations,
        }


def axis_construct(
    spec: ModelSpec,
    gamma: IsometrySpec,
    seed: ChartPoint,
    tol: float = DEFAULT_TOL,
    u_floor: float = 1e-3,
    max_iter: int = 10000,
) -> AxisReport:
    """Minimize delta_gamma from ``seed`` by deterministic coordinate descent.

    Steps start at half the seed's scale and halve whenever a full sweep
    brings no improvement.  A u-coordinate is never pushed to or below 0; a
    descent that keeps halving some u_i below ``u_floor`` while delta_gamma
    decreases is reported as not attained, with its minimizing sequence.
    Otherwise the infimum is attained at q and the orbit q, gamma q,
    gamma^2 q is checked for collinearity.
    """
    gamma.validate(spec)
    seed.check(spec)
    if spec.p and np.any(seed.u <= 0):
        raise DomainError("axis_construct needs an interior seed")
    x = seed.to_vector()
    p = spec.p

    def delta(vec):
        return displacement(spec, gamma, ChartPoint.from_vector(vec, p), tol)

    best = delta(x)
    seq = [(ChartPoint.from_vector(x, p), best)]
    step = 0.5 * max(1.0, float(np.max(np.abs(x)))) if x.size else 0.0
    escaping = False
    it = 0
    while step > tol and it < max_iter:
        improved = False
        for j in range(x.size):
            for sgn in (-1.0, 1.0):
                it += 1
                trial = x.copy()
                trial[j] += sgn * step
                if j < p and trial[j] <= 0:
                    trial[j] = 0.5 * x[j]
                d = delta(trial)
                if d < best - 1e-15 * max(best, 1.0):
                    x, best = trial, d
                    seq.append((ChartPoint.from_vector(x, p), best))
                    improved = True
                    break
        if p and np.min(x[:p]) < u_floor:
            escaping = True
            break
        if not improved:
            step *= 0.5
    if it >= max_iter and not escaping:
        raise ConvergenceError("axis descent budget exhausted", best=seq[-1])
    q = ChartPoint.from_vector(x, p)
    if escaping:
        return AxisReport(False, best, q, sequence=seq, iterations=it)
    gq = gamma.apply(spec, q)
    g2q = gamma.apply(spec, gq)
    rep = AxisReport(True, best, q, orbit=[q, gq, g2q], sequence=seq, iterations=it)
    if best > tol:
        rep.collinearity_error = abs(distance(spec, q, g2q, tol) - 2.0 * best)
        m1 = midpoint(spec, q, gq, tol)
        rep.midpoint_displacement = displacement(spec, gamma, m1, tol)
    else:
        rep.collinearity_error = 0.0
        rep.midpoint_displacement = best
    return rep
