"""Two-point problem for a single node block via the Clairaut integral.

A block geodesic with Clairaut constant P either moves monotonically in u
(P^2 <= b(u_lo)) or turns once at u* = b^{-1}(P^2) < u_lo.  The total twist
is a continuous monotone function of the parameter

    eta in [0, 1]:  monotone branch, P = eta * sqrt(b(u_lo))
    eta > 1:        turning branch,  P = sqrt(b(u_lo)) * exp(1 - eta)

running from 0 to infinity, so the twist equation is solved by bracketing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from . import _kernels as K
from .errors import NumericalError

EPSREL = 1e-13
MAX_INTERVALS = 400


@dataclass(frozen=True)
class BlockGeodesic:
    length: float
    P: float  # signed Clairaut constant b(u) * dtheta/ds in block arclength
    u0: float
    u1: float
    turning: bool
    u_turn: float

    def initial_velocity(self, A: float, c: float):
        """(du/ds, dtheta/ds) at the start, unit speed in the block."""
        if self.length == 0.0:
            return 0.0, 0.0
        u = self.u0
        a = A * (1.0 + c * u**4)
        b = K.block_b(u, A, c)
        if b == 0.0:
            return 1.0 / math.sqrt(a), 0.0
        rad = max(b - self.P**2, 0.0) / (a * b)
        if self.turning or self.u1 < self.u0:
            sign = -1.0
        else:
            sign = 1.0
        if self.turning and rad == 0.0:
            sign = 1.0
        return sign * math.sqrt(rad), self.P / b


def _integrals(ubase, uend, R, P, A, c):
    th, ln, eth, eln, ok = K.clairaut_integrals(ubase, uend, R, P, A, c, EPSREL, MAX_INTERVALS)
    if not ok and (eth > 1e-10 * max(abs(th), 1.0) or eln > 1e-10 * max(ln, 1.0)):
        raise NumericalError(
            "Clairaut quadrature did not converge",
            ubase=ubase, uend=uend, P=P, err_theta=eth, err_length=eln,
        )
    return th, ln


def _evaluate(eta, u0, u1, A, c):
    """Twist, length, P, turning flag and turning point for parameter eta."""
    ulo, uhi = min(u0, u1), max(u0, u1)
    pc = math.sqrt(K.block_b(ulo, A, c))
    if eta <= 1.0:
        P = eta * pc
        R = pc * pc - P * P
        if eta == 1.0:
            R = 0.0
        th, ln = _integrals(ulo, uhi, R, P, A, c)
        return th, ln, P, False, ulo
    P = pc * math.exp(1.0 - eta)
    us = K.turning_point(P, A, c)
    us = min(us, ulo)
    th0, ln0 = _integrals(us, u0, 0.0, P, A, c)
    th1, ln1 = _integrals(us, u1, 0.0, P, A, c)
    return th0 + th1, ln0 + ln1, P, True, us


def radial_length(u0: float, u1: float, A: float, c: float) -> float:
    """Length of the radial segment between u0 and u1."""
    lo, hi = min(u0, u1), max(u0, u1)
    if hi == lo:
        return 0.0
    _, ln = _integrals(lo, hi, K.block_b(lo, A, c), 0.0, A, c)
    return ln


def solve_block(u0: float, theta0: float, u1: float, theta1: float, A: float, c: float) -> BlockGeodesic:
    """Geodesic of one block from (u0, theta0) to (u1, theta1).

    theta is taken on the real line.  A boundary endpoint (u = 0) forces the
    radial solution because all angles are identified there.
    """
    dth = theta1 - theta0
    if u0 == 0.0 or u1 == 0.0 or dth == 0.0:
        return BlockGeodesic(radial_length(u0, u1, A, c), 0.0, u0, u1, False, min(u0, u1))
    sgn = 1.0 if dth > 0 else -1.0
    target = abs(dth)

    def resid(eta):
        return _evaluate(eta, u0, u1, A, c)[0] - target

    th1 = resid(1.0)
    if th1 >= 0.0:
        # twist at eta = 0 is 0, so the root lies in the monotone branch
        lo, hi = 0.0, 1.0
        if th1 == 0.0:
            lo = hi = 1.0
    else:
        lo, hi = 1.0, 2.0
        while resid(hi) < 0.0:
            lo, hi = hi, hi + 2.0 * (hi - 1.0)
            if hi > 800.0:
                raise NumericalError("twist bracket exceeded", u0=u0, u1=u1, dtheta=dth)
    eta = lo if lo == hi else brentq(resid, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    _, ln, P, turning, us = _evaluate(eta, u0, u1, A, c)
    return BlockGeodesic(ln, sgn * P, u0, u1, turning, us)
