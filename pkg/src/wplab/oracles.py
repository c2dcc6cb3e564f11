"""Finite-difference oracles computed from ``metric_tensor`` alone.

They share no code with the closed forms they check and are used by the
acceptance suite and the tests.
"""
from __future__ import annotations

import math

import numpy as np

from .model_metric import ChartPoint, ModelSpec, metric_tensor


def _metric_at(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    return metric_tensor(spec, ChartPoint.from_vector(x, spec.p))


def christoffel_fd(spec: ModelSpec, x: ChartPoint, h: float = 1e-5) -> np.ndarray:
    """Gamma^k_ij from central differences of the metric tensor."""
    x0 = x.to_vector()
    n = x0.size
    dg = np.empty((n, n, n))  # dg[l] = d g / d x^l
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        dg[l] = (_metric_at(spec, x0 + e) - _metric_at(spec, x0 - e)) / (2 * h)
    ginv = np.linalg.inv(_metric_at(spec, x0))
    # Gamma^k_ij = 1/2 g^{kl} (d_j g_il + d_i g_lj - d_l g_ij)
    term = np.einsum("jil->lij", dg) + np.einsum("ilj->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, term)


def brioschi_curvature(E, G, u: float, v: float, h: float = 1e-4) -> float:
    """Gaussian curvature of E du^2 + G dv^2 by nested central differences.

    For an orthogonal metric the Brioschi formula reduces to
    K = -1/(2 sqrt(EG)) [ d_u (G_u / sqrt(EG)) + d_v (E_v / sqrt(EG)) ].
    """

    def W(a, b):
        return math.sqrt(E(a, b) * G(a, b))

    def Gu_over_W(a, b):
        return (G(a + h, b) - G(a - h, b)) / (2 * h) / W(a, b)

    def Ev_over_W(a, b):
        return (E(a, b + h) - E(a, b - h)) / (2 * h) / W(a, b)

    d1 = (Gu_over_W(u + h, v) - Gu_over_W(u - h, v)) / (2 * h)
    d2 = (Ev_over_W(u, v + h) - Ev_over_W(u, v - h)) / (2 * h)
    return -(d1 + d2) / (2 * W(u, v))


def block_curvature_fd(spec: ModelSpec, block: int, u: float, h: float = 1e-4) -> float:
    """Brioschi curvature of one block, with E and G read off metric_tensor."""
    p = spec.p

    def comp(idx):
        def g(a, b):
            uu = np.full(p, 1.0)
            th = np.zeros(p)
            uu[block] = a
            th[block] = b
            pt = ChartPoint(uu, th, np.zeros(spec.m, dtype=complex))
            return float(metric_tensor(spec, pt)[idx, idx])

        return g

    return brioschi_curvature(comp(block), comp(p + block), u, 0.0, h)


def sin_sq_moment(epsrel: float = 1e-13) -> float:
    """The integral of s^2 / sqrt(1 - s^2) over [0, 1], by adaptive quadrature.

    (1 - s^2)^(-1/2) = (1 - s)^(-1/2) (1 + s)^(-1/2); the first factor is
    handled by the algebraic-weight rule.
    """
    from scipy.integrate import quad

    val, _ = quad(
        lambda s: s * s / math.sqrt(1.0 + s), 0.0, 1.0, weight="alg", wvar=(0.0, -0.5), epsabs=0.0, epsrel=epsrel
    )
    return val
