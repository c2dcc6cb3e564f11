"""The eleven acceptance criteria as runnable checks.

Each ``criterion_*`` function returns a :class:`CriterionResult`; a result
passes only if every numeric condition holds and the wall time is below the
budget.  Kernels are compiled by :func:`run_acceptance` before any timing.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import _kernels
from .collar import asymptotic_fit, collar_expansion_coefficients, pairing_sweep
from .errors import WPLabError
from .experiments import (
    CornerParams,
    TwistProfile,
    corner_comparison,
    corner_grid,
    dehn_twist_sweep,
    differential_inequality_check,
    nonrefraction_probe,
    perturbation_gap_fit,
    stratum_geodesic_stays,
)
from .geodesics import connect, oracle_length, shoot
from .model_metric import ChartPoint, ModelSpec, TangentVector, gauss_curvature_block
from .npc import (
    IsometrySpec,
    axis_construct,
    cat0_suite,
    convexity_scan,
    displacement,
    displacement_field,
    random_point,
    u_squared,
)
from .oracles import block_curvature_fd, sin_sq_moment

TOL = 1e-8


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        failed = [k for k, ok in self.checks.items() if not ok]
        extra = f"  failed: {', '.join(failed)}" if failed else ""
        return f"[{flag}] {self.number:2d} {self.name} ({self.runtime:.2f} s / {self.budget:g} s){extra}"

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "pass": self.passed,
            "runtime": self.runtime,
            "budget": self.budget,
            "metrics": self.metrics,
            "checks": self.checks,
        }


def _timed(number, name, budget, body: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        checks, metrics = body()
    except WPLabError as exc:
        checks, metrics = {"completed": False}, {"error": f"{type(exc).__name__}: {exc}"}
    dt = time.perf_counter() - t0
    checks = dict(checks)
    checks["runtime"] = dt < budget
    return CriterionResult(number, name, all(checks.values()), dt, budget, metrics, checks)


MIXED_SPEC = ModelSpec(2, 1, (1.0, 2.0))


# 1 ----------------------------------------------------------------------------


def criterion_conservation(n: int = 100, seed: int = 0, tol: float = 1e-10, length: float = 5.0):
    def body():
        rng = np.random.default_rng(seed)
        worst = {"energy": 0.0, "momentum": 0.0}
        terms = {}
        for _ in range(n):
            p = int(rng.integers(1, 4))
            m = int(rng.integers(0, 3))
            spec = ModelSpec(p, m, tuple(rng.uniform(0.5, 2.0, p)), tuple(rng.choice([0.0, 1.0], p)))
            x = ChartPoint(rng.uniform(0.05, 3.0, p), rng.uniform(-3, 3, p), rng.normal(size=m) + 1j * rng.normal(size=m))
            v = TangentVector(rng.normal(size=p), rng.normal(size=p) / x.u**3, rng.normal(size=m) + 1j * rng.normal(size=m))
            tr = shoot(spec, x, v, length, tol)
            terms[tr.termination] = terms.get(tr.termination, 0) + 1
            for k, d in tr.drift().items():
                key = "energy" if k == "energy" else "momentum"
                worst[key] = max(worst[key], d)
        checks = {"energy_drift": worst["energy"] < 1e-8, "momentum_drift": worst["momentum"] < 1e-8}
        return checks, {"max_energy_drift": worst["energy"], "max_momentum_drift": worst["momentum"], "terminations": terms}

    return _timed(1, "conservation", 10.0, body)


# 2 ----------------------------------------------------------------------------


def criterion_curvature():
    def body():
        worst = 0.0
        for A in (0.5, 1.0, 2.0):
            spec = ModelSpec(1, 0, (A,))
            for u in np.linspace(0.2, 2.0, 20):
                K = gauss_curvature_block(float(u), A)
                Kfd = block_curvature_fd(spec, 0, float(u))
                worst = max(worst, abs(Kfd / K - 1.0))
        return {"relative_error": worst < 1e-4}, {"max_relative_error": worst}

    return _timed(2, "curvature oracle", 1.0, body)


# 3 ----------------------------------------------------------------------------


def criterion_blowup_rate(delta: float = 0.1):
    def body():
        rows = pairing_sweep([10.0**-k for k in range(4, 13)], delta)
        fit = asymptotic_fit([(t, v) for t, _, v in rows])
        target = (1.0 / math.pi**3) * 2.0 * math.pi * sin_sq_moment()
        rel = abs(fit.constant / target - 1.0)
        # the model's exact limit of value / (t^2 (-log t)^3)
        exact = 1.0 / math.pi**3
        checks = {
            "alpha": abs(fit.alpha - 2.0) <= 0.05,
            "beta": abs(fit.beta - 3.0) <= 0.05,
            "constant": rel <= 0.02,
        }
        metrics = {
            "fit": fit.to_dict(),
            "target_constant": target,
            "constant_relative_error": rel,
            "model_limit_constant": exact,
            "constant_vs_model_limit": abs(fit.constant / exact - 1.0),
        }
        return checks, metrics

    return _timed(3, "blow-up rate", 30.0, body)


# 4 ----------------------------------------------------------------------------


def criterion_collar_expansion():
    def body():
        c1, c2 = collar_expansion_coefficients()
        e1, e2 = abs(c1 - 1 / 3), abs(c2 - 1 / 15)
        return {"c1": e1 <= 1e-3, "c2": e2 <= 1e-3}, {"c1": c1, "c2": c2, "err_c1": e1, "err_c2": e2}

    return _timed(4, "collar expansion", 1.0, body)


# 5 ----------------------------------------------------------------------------


def criterion_corner():
    def body():
        base = corner_comparison(CornerParams(1.0))
        grid = corner_grid()
        min_gap = min(r.gap for _, r in grid)
        homog = 0.0
        for prm, res in grid:
            unit = corner_comparison(CornerParams(1.0, prm.Cc, prm.Ct, prm.T1, prm.T2))
            s = math.sqrt(prm.eps)
            homog = max(homog, abs(res.L1 / (s * unit.L1) - 1.0), abs(res.L2 / (s * unit.L2) - 1.0))
        checks = {
            "L1": abs(base.L1 - math.pi) <= 1e-6,
            "L2": abs(base.L2 - 4.0) <= 1e-6,
            "gap_positive": min_gap > 0,
            "homogeneity": homog <= 1e-10,
        }
        return checks, {"L1": base.L1, "L2": base.L2, "min_gap": min_gap, "max_homogeneity_error": homog, "cells": len(grid)}

    return _timed(5, "corner comparison", 5.0, body)


# 6 ----------------------------------------------------------------------------


def criterion_cat0(seed: int = 0, tol: float = TOL, spec: ModelSpec = MIXED_SPEC):
    def body():
        reps = cat0_suite(spec, 100, seed, tol)
        flat = cat0_suite(spec, 20, seed + 1, tol, flat=True)
        min_slack = min(r.slack for r in reps)
        flat_err = max(abs(r.slack) for r in flat)
        checks = {"inequality": min_slack >= -3 * tol, "flat_equality": flat_err <= 2 * tol}
        return checks, {"min_slack": min_slack, "max_flat_deviation": flat_err}

    return _timed(6, "CAT(0) comparison", 60.0, body)


# 7 ----------------------------------------------------------------------------

ISOMETRIES = {
    "flat-translation": IsometrySpec.translation([0.7 - 0.4j]),
    "theta-rotation": IsometrySpec.rotation(0, 1.3),
    "composition": IsometrySpec.compose(IsometrySpec.rotation(1, -0.8), IsometrySpec.translation([0.5j])),
}


def _random_geodesic(spec, rng, n_samples=65, u_range=(0.3, 2.0)):
    p, q = random_point(spec, rng, u_range), random_point(spec, rng, u_range)
    return connect(spec, p, q, TOL, n_samples)


def criterion_convexity(seed: int = 0, spec: ModelSpec = MIXED_SPEC):
    def body():
        rng = np.random.default_rng(seed)
        min_u2 = math.inf
        for _ in range(50):
            tr = _random_geodesic(spec, rng)
            for i in range(spec.p):
                min_u2 = min(min_u2, convexity_scan(spec, u_squared(i), tr))
        min_delta = {}
        for name, gamma in ISOMETRIES.items():
            worst = math.inf
            for _ in range(20):
                tr = _random_geodesic(spec, rng)
                worst = min(worst, convexity_scan(spec, displacement_field(spec, gamma, TOL), tr))
            min_delta[name] = worst
        checks = {"u_squared": min_u2 >= -1e-6}
        checks.update({f"delta_{k}": v >= -1e-5 for k, v in min_delta.items()})
        return checks, {"min_second_difference_u2": min_u2, "min_second_difference_delta": min_delta}

    return _timed(7, "convexity", 60.0, body)


# 8 ----------------------------------------------------------------------------


def criterion_nonrefraction(seed: int = 0, spec: ModelSpec = MIXED_SPEC):
    def body():
        rng = np.random.default_rng(seed)
        min_u = math.inf
        worst_viol = -math.inf
        for k in range(20):
            p = random_point(spec, rng, (0.3, 1.5))
            q = random_point(spec, rng, (0.3, 1.5))
            u = np.array(q.u)
            # boundary in block 0 always, block 1 every third probe
            u[0] = 0.0
            if k % 3 == 2:
                u[1] = 0.0
            q = ChartPoint(u, q.theta, q.t)
            probe = nonrefraction_probe(spec, p, q, TOL)
            min_u = min(min_u, probe.min_interior_u)
            for i in range(spec.p):
                worst_viol = max(worst_viol, differential_inequality_check(spec, probe.trajectory, i).max_violation)
        stays = True
        for _ in range(5):
            a, b = random_point(spec, rng), random_point(spec, rng)
            ua, ub = np.array(a.u), np.array(b.u)
            ua[0] = ub[0] = 0.0
            stays &= stratum_geodesic_stays(spec, ChartPoint(ua, a.theta, a.t), ChartPoint(ub, b.theta, b.t), TOL)
            stays &= stratum_geodesic_stays(
                spec, ChartPoint([0.0, 0.0], a.theta, a.t), ChartPoint([0.0, 0.0], b.theta, b.t), TOL
            )
        checks = {"min_interior_u": min_u > 1e-3, "differential_inequality": worst_viol <= 1e-6, "stratum": stays}
        return checks, {"min_interior_u": min_u, "max_violation": worst_viol}

    return _timed(8, "non-refraction", 30.0, body)


# 9 ----------------------------------------------------------------------------


def criterion_perturbation(seed: int = 0):
    def body():
        spec = ModelSpec(1, 1, pert=(1.0,))
        fit, records = perturbation_gap_fit(spec, seed=seed)
        nonneg = all(r.gap >= 0 for r in records)
        bounded = all(r.gap <= r.path_bound * (1 + 1e-3) + 1e-14 for r in records)
        checks = {"exponent": fit.alpha >= 2.8, "gap_nonnegative": nonneg, "path_bound": bounded}
        return checks, {"fit": fit.to_dict()}

    return _timed(9, "distance approximation rate", 60.0, body)


# 10 ---------------------------------------------------------------------------


def criterion_dehn_twist(alpha: float = 1.0, tol: float = TOL):
    def body():
        tm, vals = dehn_twist_sweep(range(2, 13))
        decreasing = bool(np.all(np.diff(vals) < 0))
        decay = vals[-1] / vals[0]
        spec = ModelSpec(1, 1)
        A = spec.A[0]
        gamma = IsometrySpec.rotation(0, alpha)
        us = [2.0**-k for k in range(1, 9)]
        deltas = [displacement(spec, gamma, ChartPoint([u], [0.0], [0j]), tol) for u in us]
        arc_ok = all(d <= 0.5 * math.sqrt(A) * u**3 * alpha + tol for u, d in zip(us, deltas))
        axis = axis_construct(spec, gamma, ChartPoint([1.0], [0.0], [0j]), tol)
        seq = [d for _, d in axis.sequence]
        checks = {
            "twist_decreasing": decreasing,
            "twist_decay": decay < 1e-2,
            "displacement_decreasing": bool(np.all(np.diff(deltas) < 0)),
            "arc_bound": arc_ok,
            "not_attained": not axis.attained,
            "sequence_to_zero": bool(np.all(np.diff(seq) < 0)) and seq[-1] < 1e-6,
        }
        metrics = {"twist_ratio": decay, "twist_values": vals, "displacements": deltas, "axis_final_delta": seq[-1]}
        return checks, metrics

    return _timed(10, "Dehn-twist decay", 30.0, body)


# 11 ---------------------------------------------------------------------------


def criterion_oracle(seed: int = 0, spec: ModelSpec = MIXED_SPEC, n: int = 30):
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            p, q = random_point(spec, rng), random_point(spec, rng)
            L = connect(spec, p, q, TOL).length
            worst = max(worst, abs(L - oracle_length(spec, p, q)))
        return {"agreement": worst <= 1e-5}, {"max_abs_difference": worst}

    return _timed(11, "BVP / oracle equivalence", 60.0, body)


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: criterion_conservation,
    2: criterion_curvature,
    3: criterion_blowup_rate,
    4: criterion_collar_expansion,
    5: criterion_corner,
    6: criterion_cat0,
    7: criterion_convexity,
    8: criterion_nonrefraction,
    9: criterion_perturbation,
    10: criterion_dehn_twist,
    11: criterion_oracle,
}

TOTAL_BUDGET = 300.0


def run_acceptance(numbers: Optional[Sequence[int]] = None, echo: Optional[Callable[[str], None]] = None) -> List[CriterionResult]:
    _kernels.warmup()
    out = []
    for k in numbers or sorted(CRITERIA):
        res = CRITERIA[k]()
        out.append(res)
        if echo:
            echo(res.line())
    return out
