"""End-to-end quantitative experiments on the model geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .collar import FitReport, power_fit
from .errors import DomainError, NumericalError
from .geodesics import DEFAULT_TOL, Polyline, Trajectory, connect, distance, path_functionals
from .model_metric import ChartPoint, ModelSpec, metric_diagonal
from .npc import second_differences

# ---------------------------------------------------------------------------
# corner comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CornerParams:
    """Two-node corner with metric Cc dl1^2/l1 + Ct dl2^2/l2 + |dT|^2."""

    eps: float
    Cc: float = 1.0
    Ct: float = 1.0
    T1: tuple = (0j,)
    T2: tuple = (0j,)

    def __post_init__(self):
        if not (self.eps > 0 and self.Cc > 0 and self.Ct > 0):
            raise DomainError("eps, Cc and Ct must be positive")
        T1 = tuple(complex(z) for z in np.atleast_1d(self.T1))
        T2 = tuple(complex(z) for z in np.atleast_1d(self.T2))
        if len(T1) != len(T2):
            raise DomainError("T1 and T2 must have the same dimension")
        object.__setattr__(self, "T1", T1)
        object.__setattr__(self, "T2", T2)


@lru_cache(maxsize=8)
def _legendre_rule(n):
    return np.polynomial.legendre.leggauss(n)


def _gauss_legendre(func, a, b, n):
    x, w = _legendre_rule(n)
    xm = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * float(w @ func(xm))


def _checked_quadrature(func, a, b, n=48):
    coarse = _gauss_legendre(func, a, b, n)
    fine = _gauss_legendre(func, a, b, 2 * n)
    if not abs(fine - coarse) <= 1e-13 * max(abs(fine), 1e-300):
        raise NumericalError("corner quadrature not converged", coarse=coarse, fine=fine)
    return fine


def _corner_speed(params, l1, l2, dl1, dl2, dT2):
    """Model speed given coordinates, velocities and |dT/dx|^2."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(dl1 == 0, 0.0, params.Cc * dl1 * dl1 / l1)
        b = np.where(dl2 == 0, 0.0, params.Ct * dl2 * dl2 / l2)
    return np.sqrt(a + b + dT2)


@dataclass(frozen=True)
class CornerResult:
    L1: float
    L2: float
    gap: float

    def to_dict(self):
        return {"L1": self.L1, "L2": self.L2, "gap": self.gap}


def corner_comparison(params: CornerParams) -> CornerResult:
    """Model lengths of the diagonal path sigma_1 and the two-leg corner path sigma_2.

    sigma_1(s) = ((1 - s) eps, s eps, sqrt(eps)((1 - s) T1 + s T2)) is
    integrated with s = sin^2(phi); each leg of sigma_2 with s = sigma^2.
    Both substitutions turn the 1/sqrt endpoint singularities into analytic
    integrands.
    """
    eps = params.eps
    T1 = np.asarray(params.T1)
    T2 = np.asarray(params.T2)
    dT = float(np.sum(np.abs(T2 - T1) ** 2))

    def sigma1(phi):
        sn, cs = np.sin(phi), np.cos(phi)
        ds = 2.0 * sn * cs
        return _corner_speed(params, eps * cs * cs, eps * sn * sn, -eps * ds, eps * ds, eps * dT * ds * ds)

    def leg(C_first, Tn2):
        # the active coordinate runs eps * sigma^2, the flat offset sqrt(eps) T sigma^2
        def f(sig):
            l = eps * sig * sig
            dl = 2.0 * eps * sig
            dT2 = eps * Tn2 * (2.0 * sig) ** 2
            if C_first:
                return _corner_speed(params, l, np.ones_like(l), dl, np.zeros_like(l), dT2)
            return _corner_speed(params, np.ones_like(l), l, np.zeros_like(l), dl, dT2)

        return f

    L1 = _checked_quadrature(sigma1, 0.0, 0.5 * math.pi)
    L2 = _checked_quadrature(leg(True, float(np.sum(np.abs(T1) ** 2))), 0.0, 1.0) + _checked_quadrature(
        leg(False, float(np.sum(np.abs(T2) ** 2))), 0.0, 1.0
    )
    return CornerResult(L1, L2, L2 - L1)


CORNER_GRID = {
    "C": (0.25, 0.5, 1.0, 2.0, 4.0),
    "D": (0.0, 1.0, 2.0, 3.0, 4.0),
    "eps": (1e-2, 1e-4),
}


def corner_grid(grid=CORNER_GRID) -> list:
    """(params, result) over the grid; the offset D enters as T1 = 0, T2 = D."""
    out = []
    for eps in grid["eps"]:
        for Cc in grid["C"]:
            for Ct in grid["C"]:
                for D in grid["D"]:
                    prm = CornerParams(eps, Cc, Ct, (0j,), (complex(D),))
                    out.append((prm, corner_comparison(prm)))
    return out


# ---------------------------------------------------------------------------
# non-refraction and the differential inequality
# ---------------------------------------------------------------------------


@dataclass
class ProbeResult:
    min_interior_u: float
    trajectory: Trajectory

    def to_dict(self):
        return {"min_interior_u": self.min_interior_u, "termination": self.trajectory.termination,
                "length": self.trajectory.length}


def nonrefraction_probe(spec: ModelSpec, p: ChartPoint, q: ChartPoint, tol: float = DEFAULT_TOL, n_samples: int = 65) -> ProbeResult:
    """Minimum of every u_i over the samples of connect(p, q) except the endpoint q."""
    if spec.p == 0:
        raise DomainError("non-refraction needs at least one node block")
    if np.any(p.u <= 0):
        raise DomainError("p must be interior")
    if not np.any(q.u == 0):
        raise DomainError("q must lie on the boundary")
    traj = connect(spec, p, q, tol, n_samples)
    return ProbeResult(float(np.min(traj.X[:-1, : spec.p])), traj)


def stratum_geodesic_stays(spec: ModelSpec, p: ChartPoint, q: ChartPoint, tol: float = DEFAULT_TOL, n_samples: int = 33) -> bool:
    """Both endpoints in one stratum: every boundary block stays exactly at u = 0."""
    traj = connect(spec, p, q, tol, n_samples)
    zero = (p.u == 0) & (q.u == 0)
    return bool(np.all(traj.X[:, : spec.p][:, zero] == 0.0))


def christoffel_bound(spec: ModelSpec, i: int, u: float, M: float = 1.0) -> float:
    """sup |Gamma^u_{ab} v^a v^b| / u over g(v, v) <= M^2 at level u of block i."""
    A, c = spec.A[i], spec.pert[i]
    f = 1.0 + c * u**4
    fp = 4.0 * c * u**3
    g_uu = A * f
    g_tt = 0.25 * A * f * u**6
    # Gamma^u_uu >= 0 and Gamma^u_thth <= 0, so the extremes are the pure directions
    radial = abs(fp / (2 * f)) / g_uu
    angular = abs((fp * u**6 + 6 * f * u**5) / (8 * f)) / g_tt
    return M * M * max(radial, angular) / u


@dataclass(frozen=True)
class DiffIneqResult:
    max_violation: float
    C: float
    max_closed_form_error: float

    def to_dict(self):
        return dict(self.__dict__)


def differential_inequality_check(spec: ModelSpec, traj: Trajectory, block: int = 0, n_range: int = 64) -> DiffIneqResult:
    """max over interior samples of u'' - C u with u'' from central differences.

    C is the supremum of the Christoffel bound over the u-range of those
    samples at the trajectory's energy level.
    """
    if len(traj) < 9:
        raise DomainError("need at least 9 samples")
    s = traj.s
    u = traj.X[:, block]
    upp = second_differences(s, u)
    ui = u[1:-1]
    M = math.sqrt(float(np.max(traj.energy)))
    lo, hi = float(np.min(ui)), float(np.max(ui))
    if not lo > 0:
        raise DomainError("differential inequality needs interior samples with u > 0")
    grid = np.geomspace(lo, hi, n_range) if hi > lo else np.array([lo])
    C = max(christoffel_bound(spec, block, float(x), M) for x in grid)
    viol = float(np.max(upp - C * ui))
    # closed form u'' = -Gamma^u_uu u'^2 - Gamma^u_thth theta'^2
    X, V = traj.X[1:-1], traj.V[1:-1]
    P = spec.p
    c = spec.pert[block]
    f = 1.0 + c * ui**4
    fp = 4.0 * c * ui**3
    exact = -0.5 * fp / f * V[:, block] ** 2 + (fp * ui**6 + 6 * f * ui**5) / (8 * f) * V[:, P + block] ** 2
    return DiffIneqResult(viol, C, float(np.max(np.abs(upp - exact))))


# ---------------------------------------------------------------------------
# distance approximation under the perturbation
# ---------------------------------------------------------------------------


def perturbation_pairs(spec: ModelSpec, U: float, n: int = 4, seed: int = 0) -> list:
    """Pairs at scale U: u ~ U, theta offsets ~ U^-2, flat offsets ~ U.

    The unperturbed model is homogeneous under (u, theta, t) -> (l u, theta / l^2, l t),
    so the same pattern is used at every scale.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = rng.uniform(0.3, 1.0, (2, spec.p))
        th = rng.uniform(-2.0, 2.0, (2, spec.p))
        w = rng.normal(size=(2, spec.m)) + 1j * rng.normal(size=(2, spec.m))
        out.append(
            (
                ChartPoint(U * a[0], th[0] / U**2, 0.5 * U * w[0]),
                ChartPoint(U * a[1], th[1] / U**2, 0.5 * U * w[1]),
            )
        )
    return out


@dataclass
class GapRecord:
    U: float
    d_pert: float
    d_model: float
    gap: float
    path_bound: float


def perturbation_gaps(spec: ModelSpec, pairs, U: float, tol: float = DEFAULT_TOL, n_path: int = 129) -> list:
    """d_pert - d_model per pair together with the path bound L_pert(sigma_0) - d_model."""
    model = spec.unperturbed()
    out = []
    for p, q in pairs:
        d1 = distance(spec, p, q, tol)
        d0 = distance(model, p, q, tol)
        traj = connect(model, p, q, tol, n_path)
        poly = Polyline(spec, traj.X)
        bound = path_functionals(spec, poly)[0] - path_functionals(model, Polyline(model, traj.X))[0]
        out.append(GapRecord(U, d1, d0, d1 - d0, bound))
    return out


DEFAULT_SCALES = (0.4, 0.2, 0.1, 0.05, 0.025)


def perturbation_gap_fit(spec: ModelSpec, scales: Sequence[float] = DEFAULT_SCALES, n_pairs: int = 4, seed: int = 0, tol: float = DEFAULT_TOL):
    """Power-law exponent of the mean gap against the scale U."""
    if not any(c > 0 for c in spec.pert):
        raise DomainError("perturbation_gap_fit needs pert > 0 in some block")
    records = []
    for U in scales:
        records += perturbation_gaps(spec, perturbation_pairs(spec, U, n_pairs, seed), U, tol)
    mean = [np.mean([r.gap for r in records if r.U == U]) for U in scales]
    return power_fit(scales, mean), records


# ---------------------------------------------------------------------------
# Dehn twist
# ---------------------------------------------------------------------------


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def _smoothstep_deriv(x):
    x = np.clip(x, 0.0, 1.0)
    return 30.0 * x * x * (1.0 - x) ** 2


@dataclass(frozen=True)
class TwistProfile:
    """Bump phi(r) on [tmod^(1/2), tmod^(1/4)] with unit integral.

    ``kind="smoothstep"`` uses S'(xi) / (r log(b/a)) with S the quintic
    smoothstep and xi = log(r/a) / log(b/a); ``kind="flat-top"`` replaces S'
    by a plateau with smoothstep ramps of relative width ``ramp``.
    """

    tmod: float
    kind: str = "smoothstep"
    ramp: float = 0.25

    def __post_init__(self):
        if not 0 < self.tmod < 1:
            raise DomainError(f"tmod must lie in (0, 1), got {self.tmod}")
        if self.kind not in ("smoothstep", "flat-top"):
            raise DomainError(f"unknown profile {self.kind!r}")
        if not 0 < self.ramp <= 0.5:
            raise DomainError("ramp must lie in (0, 1/2]")
        if self.log_width < 1e-8:
            raise DomainError("support is empty: tmod too close to 1")

    @property
    def support(self):
        return self.tmod**0.5, self.tmod**0.25

    @property
    def log_width(self) -> float:
        return -0.25 * math.log(self.tmod)

    def shape(self, xi):
        """Density in xi on [0, 1] with unit integral."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "smoothstep":
            return _smoothstep_deriv(xi)
        rho = self.ramp
        up = _smoothstep(xi / rho)
        down = _smoothstep((1.0 - xi) / rho)
        return np.minimum(up, down) / (1.0 - rho)

    def phi(self, r):
        a, _ = self.support
        r = np.asarray(r, dtype=float)
        Lg = self.log_width
        xi = np.log(r / a) / Lg
        inside = (xi >= 0) & (xi <= 1)
        return np.where(inside, self.shape(xi) / (r * Lg), 0.0)

    def integral(self) -> float:
        a, b = self.support
        val, _ = quad(lambda y: float(self.phi(math.exp(y))) * math.exp(y), math.log(a), math.log(b), epsabs=0, epsrel=1e-13, limit=200)
        return val


def dehn_twist_norm(profile: TwistProfile) -> float:
    """(pi/2) * integral of phi(r)^2 r / (log r)^2 over the support of phi."""
    a, _ = profile.support
    Lg = profile.log_width
    la = math.log(a)

    # in xi: phi^2 r dr / (log r)^2 = shape(xi)^2 / (Lg (log r)^2) dxi
    def integrand(xi):
        lr = la + Lg * xi
        return float(profile.shape(xi)) ** 2 / (lr * lr)

    pts = None if profile.kind == "smoothstep" else [profile.ramp, 1.0 - profile.ramp]
    val, err = quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200, points=pts)
    if not err <= 1e-10 * abs(val):
        raise NumericalError("twist quadrature not converged", value=val, error=err)
    return 0.5 * math.pi * val / Lg


def dehn_twist_sweep(ks=range(2, 13), kind: str = "smoothstep"):
    tm = [10.0**-k for k in ks]
    vals = [dehn_twist_norm(TwistProfile(t, kind)) for t in tm]
    return tm, vals
