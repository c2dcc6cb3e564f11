"""Model Weil-Petersson metric near a boundary stratum.

The metric on ``p`` node blocks and ``m`` flat complex directions is

    sum_i f_i(u_i) A_i (du_i^2 + u_i^6 / 4 dtheta_i^2) + sum_j |dt_j|^2,

with f_i(u) = 1 + pert_i u^4.  u_i = sqrt(l_i) is the square root of the
length of the i-th pinching curve and theta_i its twist angle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateCoordinateError, DomainError

TWO_PI_SQ = 2.0 * math.pi**2


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions and constants of the model metric."""

    p: int
    m: int = 0
    A: tuple = None
    pert: tuple = None

    def __post_init__(self):
        if self.p < 0 or self.m < 0 or self.p + self.m < 1:
            raise DomainError(f"need p, m >= 0 and p + m >= 1, got p={self.p}, m={self.m}")
        A = (1.0,) * self.p if self.A is None else tuple(float(a) for a in np.atleast_1d(self.A))
        pert = (0.0,) * self.p if self.pert is None else tuple(float(c) for c in np.atleast_1d(self.pert))
        if len(A) != self.p or len(pert) != self.p:
            raise DomainError("A and pert must have one entry per node block")
        if any(not a > 0 for a in A):
            raise DomainError(f"block constants must be positive, got {A}")
        if any(not c >= 0 for c in pert):
            raise DomainError(f"perturbation coefficients must be >= 0, got {pert}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "pert", pert)

    @property
    def dim(self) -> int:
        """Number of real coordinates."""
        return 2 * self.p + 2 * self.m

    @property
    def A_array(self) -> np.ndarray:
        return np.asarray(self.A, dtype=float)

    @property
    def pert_array(self) -> np.ndarray:
        return np.asarray(self.pert, dtype=float)

    def unperturbed(self) -> "ModelSpec":
        return ModelSpec(self.p, self.m, self.A, (0.0,) * self.p)

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "A": list(self.A), "pert": list(self.pert)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(int(d["p"]), int(d.get("m", 0)), d.get("A"), d.get("pert"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def _as_real(values, length, name):
    arr = np.asarray(values if values is not None else np.zeros(length), dtype=float).reshape(-1)
    if arr.shape[0] != length:
        raise DomainError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def _as_complex(values, length, name):
    arr = np.asarray(values if values is not None else np.zeros(length), dtype=complex).reshape(-1)
    if arr.shape[0] != length:
        raise DomainError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Point (u, theta, t) of the model space.

    ``theta`` is stored unwrapped.  Equality compares theta modulo 2 pi, and
    ignores theta_i wherever u_i = 0 (a single nodal surface).
    """

    u: np.ndarray
    theta: np.ndarray = None
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1)
        p = u.shape[0]
        theta = _as_real(self.theta, p, "theta")
        t = np.asarray(self.t if self.t is not None else [], dtype=complex).reshape(-1)
        if np.any(~np.isfinite(u)) or np.any(~np.isfinite(theta)) or np.any(~np.isfinite(t)):
            raise DomainError("chart coordinates must be finite")
        if np.any(u < 0):
            raise DomainError(f"u must be >= 0, got {u}")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "theta", _frozen(theta))
        object.__setattr__(self, "t", _frozen(t))

    @property
    def p(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.t.shape[0]

    def check(self, spec: ModelSpec) -> "ChartPoint":
        if self.p != spec.p or self.m != spec.m:
            raise DomainError(f"point has (p={self.p}, m={self.m}), spec has (p={spec.p}, m={spec.m})")
        return self

    def to_vector(self) -> np.ndarray:
        out = np.empty(2 * self.p + 2 * self.m)
        out[: self.p] = self.u
        out[self.p : 2 * self.p] = self.theta
        out[2 * self.p :: 2] = self.t.real
        out[2 * self.p + 1 :: 2] = self.t.imag
        return out

    @classmethod
    def from_vector(cls, x, p: int) -> "ChartPoint":
        x = np.asarray(x, dtype=float)
        u = x[:p].copy()
        # integrator round-off can leave -1e-17 at a boundary
        u[(u < 0) & (u > -1e-12)] = 0.0
        return cls(u, x[p : 2 * p], x[2 * p :: 2] + 1j * x[2 * p + 1 :: 2])

    def __eq__(self, other):
        if not isinstance(other, ChartPoint):
            return NotImplemented
        if self.p != other.p or self.m != other.m:
            return False
        if not (np.array_equal(self.u, other.u) and np.array_equal(self.t, other.t)):
            return False
        for ui, a, b in zip(self.u, self.theta, other.theta):
            if ui > 0 and not _same_angle(a, b):
                return False
        return True

    def __hash__(self):
        return hash((self.u.tobytes(), self.t.tobytes()))

    def isclose(self, other: "ChartPoint", atol: float = 1e-9) -> bool:
        """Approximate version of ``==`` with the same angle semantics."""
        if self.p != other.p or self.m != other.m:
            return False
        if not (np.allclose(self.u, other.u, atol=atol, rtol=0) and np.allclose(self.t, other.t, atol=atol, rtol=0)):
            return False
        for ui, a, b in zip(self.u, self.theta, other.theta):
            if ui > atol:
                d = math.remainder(a - b, 2 * math.pi)
                if abs(d) > atol:
                    return False
        return True

    def to_dict(self) -> dict:
        return {
            "u": [float(v) for v in self.u],
            "theta": [float(v) for v in self.theta],
            "t": [[float(z.real), float(z.imag)] for z in self.t],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChartPoint":
        t = [complex(re, im) for re, im in d.get("t", [])]
        return cls(d["u"], d.get("theta"), t)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ChartPoint":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"ChartPoint(u={self.u.tolist()}, theta={self.theta.tolist()}, t={self.t.tolist()})"


def _same_angle(a, b):
    d = math.remainder(a - b, 2 * math.pi)
    return abs(d) <= 4 * np.finfo(float).eps * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Components (du, dtheta, dt) of a tangent vector in the chart."""

    du: np.ndarray
    dtheta: np.ndarray = None
    dt: np.ndarray = None

    def __post_init__(self):
        du = np.asarray(self.du, dtype=float).reshape(-1)
        p = du.shape[0]
        object.__setattr__(self, "du", _frozen(du))
        object.__setattr__(self, "dtheta", _frozen(_as_real(self.dtheta, p, "dtheta")))
        dt = np.asarray(self.dt if self.dt is not None else [], dtype=complex).reshape(-1)
        object.__setattr__(self, "dt", _frozen(dt))

    def to_vector(self) -> np.ndarray:
        p, m = self.du.shape[0], self.dt.shape[0]
        out = np.empty(2 * p + 2 * m)
        out[:p] = self.du
        out[p : 2 * p] = self.dtheta
        out[2 * p :: 2] = self.dt.real
        out[2 * p + 1 :: 2] = self.dt.imag
        return out

    @classmethod
    def from_vector(cls, v, p: int) -> "TangentVector":
        v = np.asarray(v, dtype=float)
        return cls(v[:p], v[p : 2 * p], v[2 * p :: 2] + 1j * v[2 * p + 1 :: 2])

    def norm(self, spec: ModelSpec, x: ChartPoint) -> float:
        v = self.to_vector()
        return float(math.sqrt(v @ metric_tensor(spec, x) @ v))


# ---------------------------------------------------------------------------
# plumbing coordinates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlumbingCoords:
    """Plumbing moduli t_i = |t_i| e^{i arg_i} of the node blocks plus flat t.

    ``neglog`` stores -log|t_i| so that tiny moduli (|t| = e^{-2 pi^2 / u^2})
    do not underflow; ``inf`` encodes t_i = 0.
    """

    neglog: np.ndarray
    arg: np.ndarray
    flat: np.ndarray

    @property
    def t(self) -> np.ndarray:
        """Complex plumbing moduli (may underflow to 0 for small u)."""
        return np.exp(-np.asarray(self.neglog)) * np.exp(1j * np.asarray(self.arg))

    @classmethod
    def from_complex(cls, t, flat=()) -> "PlumbingCoords":
        t = np.asarray(t, dtype=complex).reshape(-1)
        mod = np.abs(t)
        if np.any(mod >= 1):
            raise DomainError(f"plumbing moduli must satisfy |t| < 1, got {mod}")
        with np.errstate(divide="ignore"):
            neglog = -np.log(mod)
        return cls(neglog, np.angle(t), np.asarray(flat, dtype=complex).reshape(-1))


def coordinate_transform(x, direction: str = "to-plumbing"):
    """Convert between chart points (u, theta, t) and plumbing coordinates.

    ``to-plumbing`` maps a :class:`ChartPoint` to :class:`PlumbingCoords` with
    -log|t_i| = 2 pi^2 / u_i^2 and arg t_i = theta_i. ``from-plumbing`` inverts
    it; the recovered angle is the principal value in (-pi, pi].
    """
    if direction == "to-plumbing":
        u = np.asarray(x.u, dtype=float)
        if np.any(~np.isfinite(u)):
            raise DomainError("u must be finite")
        with np.errstate(divide="ignore"):
            neglog = np.where(u > 0, TWO_PI_SQ / np.where(u > 0, u, 1.0) ** 2, np.inf)
        return PlumbingCoords(neglog, np.array(x.theta, dtype=float), np.array(x.t))
    if direction == "from-plumbing":
        if not isinstance(x, PlumbingCoords):
            x = PlumbingCoords.from_complex(*x) if isinstance(x, tuple) else PlumbingCoords.from_complex(x)
        neglog = np.asarray(x.neglog, dtype=float)
        if np.any(~(neglog > 0)):
            raise DomainError("plumbing moduli must satisfy |t| < 1")
        u = np.where(np.isinf(neglog), 0.0, np.sqrt(TWO_PI_SQ / neglog))
        theta = np.angle(np.exp(1j * np.asarray(x.arg, dtype=float)))
        return ChartPoint(u, theta, x.flat)
    raise DomainError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# metric, connection, curvature
# ---------------------------------------------------------------------------


def metric_diagonal(spec: ModelSpec, xvec: np.ndarray) -> np.ndarray:
    """Diagonal of the metric at a real coordinate vector (or a stack of them)."""
    xvec = np.asarray(xvec, dtype=float)
    g = np.ones_like(xvec)
    p = spec.p
    if p:
        u = xvec[..., :p]
        f = 1.0 + spec.pert_array * u**4
        g[..., :p] = spec.A_array * f
        g[..., p : 2 * p] = 0.25 * spec.A_array * f * u**6
    return g


def metric_tensor(spec: ModelSpec, x: ChartPoint) -> np.ndarray:
    """Matrix of the metric in the real coordinates ``x.to_vector()``."""
    x.check(spec)
    return np.diag(metric_diagonal(spec, x.to_vector()))


def christoffel(spec: ModelSpec, x: ChartPoint) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` of the second kind."""
    x.check(spec)
    if np.any(x.u <= 0):
        raise DegenerateCoordinateError("Gamma^theta_{u theta} is undefined at u = 0")
    n, p = spec.dim, spec.p
    gamma = np.zeros((n, n, n))
    for i in range(p):
        u, c = x.u[i], spec.pert[i]
        f = 1.0 + c * u**4
        fp = 4.0 * c * u**3
        fpu = fp / f
        ti = p + i
        gamma[i, i, i] = 0.5 * fpu
        gamma[i, ti, ti] = -(fp * u**6 + 6.0 * f * u**5) / (8.0 * f)
        gamma[ti, i, ti] = gamma[ti, ti, i] = 0.5 * (fpu + 6.0 / u)
    return gamma


def gauss_curvature_block(u: float, A: float = 1.0) -> float:
    """Gaussian curvature -6 / (A u^2) of an unperturbed node block."""
    if not u > 0:
        raise DomainError(f"curvature needs u > 0, got {u}")
    if not A > 0:
        raise DomainError(f"A must be positive, got {A}")
    return -6.0 / (A * u * u)


def metric_norm(spec: ModelSpec, x: ChartPoint, v: TangentVector) -> float:
    return v.norm(spec, x)
