"""Conformal factors of a degenerating collar and the pairing asymptotics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import bernoulli, factorial

from .errors import DomainError, NumericalError
from .io import csv_text

DEFAULT_DELTA = 0.1


@dataclass(frozen=True)
class CollarParams:
    tmod: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.tmod < (1 - self.delta) ** 2:
            raise DomainError(f"need 0 < tmod < (1 - delta)^2, got tmod={self.tmod}, delta={self.delta}")

    @property
    def neglog(self) -> float:
        return -math.log(self.tmod)


def collar_factor(r: float, params: CollarParams, variant: str = "collar") -> float:
    """Conformal factor rho^2 of the collar (or cusp) metric at |z| = r."""
    if variant == "cusp":
        if not 0 < r < 1:
            raise DomainError(f"cusp factor needs 0 < r < 1, got {r}")
        lr = math.log(r)
        return 1.0 / (r * r * lr * lr)
    if variant != "collar":
        raise DomainError(f"unknown variant {variant!r}")
    if not params.tmod < r < 1:
        raise DomainError(f"collar factor needs tmod < r < 1, got r={r}")
    lt = math.log(params.tmod)
    s = math.sin(math.pi * math.log(r) / lt)
    return (math.pi / lt) ** 2 / (s * s * r * r)


_THETA_SERIES_TERMS = 12


def _theta_csc_coeffs(nterms: int = _THETA_SERIES_TERMS) -> np.ndarray:
    """Taylor coefficients of (x csc x)^2 in powers of x^2."""
    n = np.arange(nterms)
    B = bernoulli(2 * nterms)[2 * n]
    return (-1.0) ** (n + 1) * (2 * n - 1) * 4.0**n * B / factorial(2 * n)


_COEFFS = _theta_csc_coeffs()


def theta_csc_sq(Theta: float) -> float:
    return (Theta / math.sin(Theta)) ** 2


def collar_expansion_error(Theta: float) -> float:
    """|(Theta csc Theta)^2 - (1 + Theta^2/3 + Theta^4/15)|."""
    if not 0 < Theta < math.pi / 2:
        raise DomainError(f"Theta must lie in (0, pi/2), got {Theta}")
    if Theta < 0.05:
        # the direct difference cancels catastrophically; sum the tail instead
        x2 = Theta * Theta
        return float(abs(np.polyval(_COEFFS[3:][::-1], x2) * x2**3))
    return abs(theta_csc_sq(Theta) - (1.0 + Theta**2 / 3.0 + Theta**4 / 15.0))


def collar_expansion_coefficients(lo: float = 1e-3, hi: float = 1e-1, n: int = 200):
    """Least-squares (c1, c2) in (Theta csc Theta)^2 - 1 ~ c1 Theta^2 + c2 Theta^4."""
    Th = np.geomspace(lo, hi, n)
    y = np.array([theta_csc_sq(t) - 1.0 for t in Th])
    # dividing by Theta^2 equilibrates the rows
    M = np.column_stack([np.ones_like(Th), Th**2])
    coef, *_ = np.linalg.lstsq(M, y / Th**2, rcond=None)
    return float(coef[0]), float(coef[1])


def wolpert_length(tmod: float) -> float:
    """Leading-order hyperbolic length 2 pi^2 / (-log tmod) of the core geodesic."""
    if not 0 < tmod < 1:
        raise DomainError(f"tmod must lie in (0, 1), got {tmod}")
    return 2.0 * math.pi**2 / (-math.log(tmod))


def wp_pairing(params: CollarParams, epsrel: float = 1e-11) -> float:
    """(|t|^2 / pi^2) * integral over the annulus of r^-4 rho^-2 r dr dtheta.

    Integrated in y = log r, where r^-2 / rho^2 is a bounded sin^2 profile.
    """
    lo, hi = math.log(params.tmod), math.log(1.0 - params.delta)

    def integrand(y):
        r = math.exp(y)
        return 1.0 / (r * r * collar_factor(r, params))

    val, err = quad(integrand, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)
    if not (math.isfinite(val) and err <= 10 * epsrel * abs(val)):
        raise NumericalError("pairing quadrature did not converge", value=val, error=err, tmod=params.tmod)
    return params.tmod**2 / math.pi**2 * 2.0 * math.pi * val


def pairing_sweep(tmods: Iterable[float], delta: float = DEFAULT_DELTA) -> list:
    return [(float(t), float(delta), wp_pairing(CollarParams(t, delta))) for t in tmods]


def sweep_csv(rows) -> str:
    return csv_text(["tmod", "delta", "value"], rows)


@dataclass(frozen=True)
class FitReport:
    """value ~ constant * x^alpha * (-log x)^beta, fitted in log space."""

    alpha: float
    beta: float
    constant: float
    residual: float
    n: int = 0

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "constant": self.constant, "residual": self.residual}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FitReport":
        d = json.loads(text)
        return cls(d["alpha"], d["beta"], d["constant"], d["residual"])


def _lstsq_fit(M, y):
    if np.linalg.matrix_rank(M) < M.shape[1] or np.linalg.cond(M) > 1e12:
        raise NumericalError("degenerate design matrix", cond=float(np.linalg.cond(M)))
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    res = y - M @ coef
    return coef, float(math.sqrt(np.mean(res * res)))


def asymptotic_fit(samples: Sequence) -> FitReport:
    """Fit log value = log C + alpha log t + beta log(-log t)."""
    t = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[-1] for s in samples], dtype=float)
    if t.size < 4:
        raise DomainError("asymptotic_fit needs at least 4 samples")
    if np.any(~(t > 0)) or np.any(~(t < 1)) or np.any(~(v > 0)):
        raise DomainError("samples need 0 < tmod < 1 and positive values")
    if math.log10(t.max() / t.min()) < 4 - 1e-9:
        raise DomainError("samples must span at least 4 decades of tmod")
    M = np.column_stack([np.ones_like(t), np.log(t), np.log(-np.log(t))])
    coef, res = _lstsq_fit(M, np.log(v))
    return FitReport(float(coef[1]), float(coef[2]), float(math.exp(coef[0])), res, int(t.size))


def power_fit(x: Sequence[float], y: Sequence[float]) -> FitReport:
    """Fit y ~ constant * x^alpha (beta is 0)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("power_fit needs >= 2 positive samples")
    M = np.column_stack([np.ones_like(x), np.log(x)])
    coef, res = _lstsq_fit(M, np.log(y))
    return FitReport(float(coef[1]), 0.0, float(math.exp(coef[0])), res, int(x.size))
