"""Command-line front end.

Exit status: 0 when every check passed, 1 when a check failed, 2 on usage
or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import _kernels
from .errors import DomainError, UsageError, WPLabError
from .io import csv_text, dat_text, json_text, write_atomic
from .model_metric import ChartPoint, ModelSpec, TangentVector, christoffel, gauss_curvature_block, metric_tensor

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    spec: Optional[ModelSpec] = None
    tolerances: dict = field(default_factory=lambda: {"ivp": 1e-10, "bvp": 1e-8, "quadrature": 1e-11})
    grids: dict = field(default_factory=dict)
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    run_id: str = "run"

    def validate(self) -> "RunConfig":
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and 0 < v <= 1e-2):
                raise UsageError(f"tolerance {k}={v} must lie in (0, 1e-2]")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise UsageError("seed must be an unsigned integer")
        if self.format not in ("csv", "json", "dat"):
            raise UsageError(f"unknown format {self.format!r}")
        return self


def load_config(path: Optional[str]) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    known = {"spec", "tolerances", "grids", "seed", "out", "format", "run_id"}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "spec" in data:
        try:
            cfg.spec = ModelSpec.from_dict(data["spec"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad spec in config: {exc}") from exc
    if "tolerances" in data:
        cfg.tolerances = {**cfg.tolerances, **data["tolerances"]}
    for key in ("grids", "seed", "out", "format", "run_id"):
        if key in data:
            setattr(cfg, key, data[key])
    return cfg


# ---------------------------------------------------------------------------
# point syntax: "u=1,0.5; theta=0,1; t=1+2j"
# ---------------------------------------------------------------------------

_FIELDS = {"u": "u", "theta": "theta", "t": "t", "du": "du", "dtheta": "dtheta", "dt": "dt"}


def parse_fields(text: str) -> dict:
    out = {}
    for part in re.split(r"[;\s]+", text.strip()):
        if not part:
            continue
        if "=" not in part:
            raise UsageError(f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise UsageError(f"unknown coordinate {key!r}")
        items = [v for v in val.split(",") if v.strip()]
        try:
            if key in ("t", "dt"):
                out[key] = [complex(v.replace("i", "j")) for v in items]
            else:
                out[key] = [float(v) for v in items]
        except ValueError as exc:
            raise UsageError(f"bad number in {part!r}") from exc
    return out


def _fit(vals, n, name, dtype=float):
    vals = list(vals or [])
    if len(vals) > n:
        raise UsageError(f"{name} has {len(vals)} entries, spec allows {n}")
    return np.array(vals + [0] * (n - len(vals)), dtype=dtype)


def parse_point(text: str, spec: ModelSpec) -> ChartPoint:
    f = parse_fields(text)
    return ChartPoint(_fit(f.get("u"), spec.p, "u"), _fit(f.get("theta"), spec.p, "theta"),
                      _fit(f.get("t"), spec.m, "t", complex))


def parse_vector(text: str, spec: ModelSpec) -> TangentVector:
    f = parse_fields(text)
    return TangentVector(_fit(f.get("du"), spec.p, "du"), _fit(f.get("dtheta"), spec.p, "dtheta"),
                         _fit(f.get("dt"), spec.m, "dt", complex))


def _flag_spec(args, cfg: RunConfig, default: ModelSpec) -> ModelSpec:
    """Spec from the command-line flags, the config, or ``default``, in that order."""
    if args.p is not None or args.m is not None or args.A or args.pert:
        return _infer_spec(args, cfg)
    return cfg.spec or default


def _infer_spec(args, cfg: RunConfig, *texts) -> ModelSpec:
    if args.p is not None or args.m is not None or args.A or args.pert:
        base = cfg.spec
        p = args.p if args.p is not None else (base.p if base else 1)
        m = args.m if args.m is not None else (base.m if base else 0)
        A = args.A or (base.A if base and base.p == p else None)
        pert = args.pert or (base.pert if base and base.p == p else None)
        return ModelSpec(p, m, A, pert)
    if cfg.spec is not None:
        return cfg.spec
    p = m = 0
    for t in texts:
        if t:
            f = parse_fields(t)
            p = max(p, len(f.get("u", [])), len(f.get("theta", [])), len(f.get("du", [])), len(f.get("dtheta", [])))
            m = max(m, len(f.get("t", [])), len(f.get("dt", [])))
    if p + m == 0:
        p = 1
    return ModelSpec(p, m)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


class Emitter:
    def __init__(self, cfg: RunConfig, stdout):
        self.cfg = cfg
        self.stdout = stdout

    def table(self, name: str, header, rows):
        rows = [list(r) for r in rows]
        fmt = self.cfg.format
        if fmt == "json":
            text = json_text([dict(zip(header, r)) for r in rows])
        elif fmt == "dat":
            text = dat_text(header, rows)
        else:
            text = csv_text(header, rows)
        if self.cfg.out:
            ext = {"csv": ".csv", "json": ".rows.json", "dat": ".dat"}[fmt]
            write_atomic(Path(self.cfg.out) / f"{self.cfg.run_id}_{name}{ext}", text)
        else:
            self.stdout.write(text)

    def summary(self, name: str, summary: dict):
        if self.cfg.out:
            write_atomic(Path(self.cfg.out) / f"{self.cfg.run_id}_{name}.json", json_text(summary))
        elif self.cfg.format == "json":
            self.stdout.write(json_text(summary))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_metric_eval(args, cfg, em):
    spec = _infer_spec(args, cfg, args.point)
    x = parse_point(args.point, spec)
    g = metric_tensor(spec, x)
    rows = [[i, j, float(g[i, j])] for i in range(spec.dim) for j in range(spec.dim)]
    em.table("metric", ["row", "col", "value"], rows)
    summ = {"experiment": "metric-eval", "params": {"spec": spec.to_dict(), "point": x.to_dict()}, "pass": True,
            "metrics": {"metric": g.tolist()}}
    if spec.p and np.all(x.u > 0):
        summ["metrics"]["christoffel"] = christoffel(spec, x).tolist()
        if not any(spec.pert):
            summ["metrics"]["curvature"] = [gauss_curvature_block(float(u), a) for u, a in zip(x.u, spec.A)]
    em.summary("metric", summ)
    return True


def _traj_out(em, name, traj, extra):
    em.table(name, traj.csv_header(), traj.csv_rows())
    em.summary(name, {"experiment": name, "params": extra, "pass": traj.termination != "step-failure",
                      "metrics": traj.to_dict()})
    return traj.termination != "step-failure"


def cmd_shoot(args, cfg, em):
    from .geodesics import shoot

    spec = _infer_spec(args, cfg, args.start, args.velocity)
    x = parse_point(args.start, spec)
    v = parse_vector(args.velocity, spec)
    traj = shoot(spec, x, v, args.length, cfg.tolerances["ivp"], args.samples)
    return _traj_out(em, "shoot", traj, {"length": args.length})


def cmd_connect(args, cfg, em):
    from .geodesics import connect

    spec = _infer_spec(args, cfg, args.start, args.to)
    traj = connect(spec, parse_point(args.start, spec), parse_point(args.to, spec), cfg.tolerances["bvp"], args.samples, cfg.seed)
    return _traj_out(em, "connect", traj, {"samples": args.samples})


def cmd_distance(args, cfg, em):
    from .geodesics import distance

    spec = _infer_spec(args, cfg, args.start, args.to)
    d = distance(spec, parse_point(args.start, spec), parse_point(args.to, spec), cfg.tolerances["bvp"])
    em.table("distance", ["distance"], [[d]])
    em.summary("distance", {"experiment": "distance", "params": {"spec": spec.to_dict()}, "pass": True,
                            "metrics": {"distance": d}})
    return True


def cmd_corner(args, cfg, em):
    from .experiments import CornerParams, corner_comparison

    prm = CornerParams(args.eps, args.Cc, args.Ct, (complex(args.T1),), (complex(args.T2),))
    res = corner_comparison(prm)
    ok = res.gap > 0
    em.table("corner", ["eps", "Cc", "Ct", "T1", "T2", "L1", "L2", "gap", "pass"],
             [[prm.eps, prm.Cc, prm.Ct, args.T1, args.T2, res.L1, res.L2, res.gap, ok]])
    em.summary("corner", {"experiment": "corner", "params": vars_of(prm), "pass": ok, "metrics": res.to_dict()})
    return ok


def vars_of(prm):
    d = {}
    for k, v in prm.__dict__.items():
        d[k] = [[z.real, z.imag] for z in v] if isinstance(v, tuple) else v
    return d


def cmd_pairing(args, cfg, em):
    from .collar import asymptotic_fit, pairing_sweep, sweep_csv

    ks = range(args.kmin, args.kmax + 1)
    rows = pairing_sweep([10.0**-k for k in ks], args.delta)
    fit = asymptotic_fit([(t, v) for t, _, v in rows])
    ok = abs(fit.alpha - 2) <= 0.05 and abs(fit.beta - 3) <= 0.05
    em.table("pairing", ["tmod", "delta", "value"], rows)
    em.summary("pairing", {"experiment": "pairing", "params": {"delta": args.delta, "k": [args.kmin, args.kmax]},
                           "pass": ok, "metrics": {"fit": fit.to_dict(), "model_limit_constant": 1 / math.pi**3}})
    return ok


def cmd_dehn(args, cfg, em):
    from .collar import power_fit
    from .experiments import dehn_twist_sweep

    tm, vals = dehn_twist_sweep(range(args.kmin, args.kmax + 1), args.profile)
    dec = bool(np.all(np.diff(vals) < 0))
    slope = power_fit(tm, vals)
    logslope = power_fit([-math.log(t) for t in tm], vals)
    em.table("dehn_twist", ["tmod", "value"], zip(tm, vals))
    em.summary("dehn_twist", {"experiment": "dehn-twist", "params": {"profile": args.profile}, "pass": dec,
                              "metrics": {"ratio": vals[-1] / vals[0], "loglog_slope": slope.alpha,
                                          "slope_vs_neglog": logslope.alpha}})
    return dec


def cmd_nonrefraction(args, cfg, em):
    from .acceptance import MIXED_SPEC
    from .experiments import differential_inequality_check, nonrefraction_probe
    from .npc import random_point

    spec = _flag_spec(args, cfg, MIXED_SPEC)
    rng = np.random.default_rng(cfg.seed)
    rows, ok_all = [], True
    for k in range(args.n):
        p = random_point(spec, rng, (0.3, 1.5))
        q = random_point(spec, rng, (0.3, 1.5))
        u = np.array(q.u)
        u[0] = 0.0
        pr = nonrefraction_probe(spec, p, ChartPoint(u, q.theta, q.t), cfg.tolerances["bvp"])
        viol = max(differential_inequality_check(spec, pr.trajectory, i).max_violation for i in range(spec.p))
        ok = pr.min_interior_u > 1e-3 and viol <= 1e-6
        ok_all &= ok
        rows.append([k, pr.min_interior_u, viol, ok])
    em.table("nonrefraction", ["case_id", "min_interior_u", "max_violation", "pass"], rows)
    em.summary("nonrefraction", {"experiment": "nonrefraction", "params": {"n": args.n, "seed": cfg.seed},
                                 "pass": ok_all, "metrics": {"min_interior_u": min(r[1] for r in rows)}})
    return ok_all


def cmd_cat0(args, cfg, em):
    from .acceptance import MIXED_SPEC
    from .npc import CAT0_HEADER, cat0_suite

    spec = _flag_spec(args, cfg, MIXED_SPEC)
    reps = cat0_suite(spec, args.n, cfg.seed, cfg.tolerances["bvp"], flat=args.flat)
    ok = all(r.passed for r in reps)
    em.table("cat0", CAT0_HEADER, [r.row() for r in reps])
    em.summary("cat0", {"experiment": "cat0", "params": {"n": args.n, "seed": cfg.seed, "flat": args.flat},
                        "pass": ok, "metrics": {"min_slack": min(r.slack for r in reps)}})
    return ok


def cmd_harnack(args, cfg, em):
    from .npc import SampledFunction, harnack_bound, harnack_verify

    C1, R0 = args.C1, args.R0
    k = math.sqrt(C1)
    n = int(args.points_per_R0 * 4) + 1
    funcs = {
        "constant": lambda x: 1.0,
        "cosh": lambda x: math.cosh(k * x),
        "exp": lambda x: math.exp(k * x),
        "sinh_shifted": lambda x: math.sinh(k * (x + 2 * R0 + 1e-3)),
    }
    bound = harnack_bound(C1, R0)
    rows, ok_all = [], True
    for name, fn in funcs.items():
        rep = harnack_verify(SampledFunction.sample(fn, -2 * R0, 2 * R0, n), C1, R0)
        ok = rep.hypothesis_ok and rep.ratio <= bound * (1 + 1e-9)
        ok_all &= ok
        rows.append([name, rep.hypothesis_ok, rep.ratio, bound, ok])
    em.table("harnack", ["function", "hypothesis_ok", "ratio", "bound", "pass"], rows)
    em.summary("harnack", {"experiment": "harnack", "params": {"C1": C1, "R0": R0}, "pass": ok_all,
                           "metrics": {"bound": bound}})
    return ok_all


def cmd_perturbation(args, cfg, em):
    from .experiments import perturbation_gap_fit

    spec = _flag_spec(args, cfg, ModelSpec(1, 1, pert=(1.0,)))
    if not any(spec.pert):
        raise UsageError("the perturbation experiment needs --pert > 0 in some block")
    scales = tuple(cfg.grids.get("scales", (0.4, 0.2, 0.1, 0.05, 0.025)))
    fit, recs = perturbation_gap_fit(spec, scales, args.pairs, cfg.seed, cfg.tolerances["bvp"])
    ok = fit.alpha >= 2.8
    em.table("perturbation", ["U", "d_pert", "d_model", "gap", "path_bound"],
             [[r.U, r.d_pert, r.d_model, r.gap, r.path_bound] for r in recs])
    em.summary("perturbation", {"experiment": "perturbation", "params": {"scales": list(scales)}, "pass": ok,
                                "metrics": {"fit": fit.to_dict()}})
    return ok


def cmd_acceptance(args, cfg, em):
    from .acceptance import run_acceptance

    results = run_acceptance(args.only or None, echo=lambda s: print(s, file=sys.stderr))
    ok = all(r.passed for r in results)
    em.table("acceptance", ["criterion", "name", "pass", "runtime"],
             [[r.number, r.name.replace(" ", "_"), r.passed, round(r.runtime, 3)] for r in results])
    em.summary("acceptance", {"experiment": "acceptance", "params": {}, "pass": ok,
                              "metrics": {str(r.number): r.to_dict() for r in results}})
    return ok


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _globals(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON run configuration")
    parser.add_argument("--out", default=d, help="output directory (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json", "dat"), default=d)
    parser.add_argument("--seed", type=int, default=d)
    parser.add_argument("--tol", type=float, default=d, help="overrides every tolerance")
    parser.add_argument("--run-id", default=d)


def _spec_flags(parser):
    parser.add_argument("--p", type=int, default=None, help="number of node blocks")
    parser.add_argument("--m", type=int, default=None, help="number of flat complex directions")
    parser.add_argument("--A", type=float, nargs="+", default=None)
    parser.add_argument("--pert", type=float, nargs="+", default=None)


def build_parser() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    _globals(parent, suppress=True)
    ap = _Parser(prog="wplab", description="Numerical laboratory for the model Weil-Petersson geometry.")
    _globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    metric = sub.add_parser("metric").add_subparsers(dest="sub", required=True, parser_class=_Parser)
    ev = metric.add_parser("eval", parents=[parent])
    ev.add_argument("--point", required=True)
    _spec_flags(ev)
    ev.set_defaults(func=cmd_metric_eval)

    geo = sub.add_parser("geodesic").add_subparsers(dest="sub", required=True, parser_class=_Parser)
    sh = geo.add_parser("shoot", parents=[parent])
    sh.add_argument("--from", dest="start", required=True)
    sh.add_argument("--velocity", required=True)
    sh.add_argument("--length", type=float, required=True)
    sh.add_argument("--samples", type=int, default=None)
    _spec_flags(sh)
    sh.set_defaults(func=cmd_shoot)
    co = geo.add_parser("connect", parents=[parent])
    co.add_argument("--from", dest="start", required=True)
    co.add_argument("--to", required=True)
    co.add_argument("--samples", type=int, default=65)
    _spec_flags(co)
    co.set_defaults(func=cmd_connect)

    di = sub.add_parser("distance", parents=[parent])
    di.add_argument("--from", dest="start", required=True)
    di.add_argument("--to", required=True)
    _spec_flags(di)
    di.set_defaults(func=cmd_distance)

    ex = sub.add_parser("experiment").add_subparsers(dest="sub", required=True, parser_class=_Parser)
    c = ex.add_parser("corner", parents=[parent])
    c.add_argument("--eps", type=float, default=1.0)
    c.add_argument("--Cc", type=float, default=1.0)
    c.add_argument("--Ct", type=float, default=1.0)
    c.add_argument("--T1", default="0")
    c.add_argument("--T2", default="0")
    c.set_defaults(func=cmd_corner)
    pa = ex.add_parser("pairing", parents=[parent])
    pa.add_argument("--delta", type=float, default=0.1)
    pa.add_argument("--kmin", type=int, default=4)
    pa.add_argument("--kmax", type=int, default=12)
    pa.set_defaults(func=cmd_pairing)
    dt = ex.add_parser("dehn-twist", parents=[parent])
    dt.add_argument("--kmin", type=int, default=2)
    dt.add_argument("--kmax", type=int, default=12)
    dt.add_argument("--profile", choices=("smoothstep", "flat-top"), default="smoothstep")
    dt.set_defaults(func=cmd_dehn)
    nr = ex.add_parser("nonrefraction", parents=[parent])
    nr.add_argument("--n", type=int, default=20)
    _spec_flags(nr)
    nr.set_defaults(func=cmd_nonrefraction)
    ca = ex.add_parser("cat0", parents=[parent])
    ca.add_argument("--n", type=int, default=100)
    ca.add_argument("--flat", action="store_true", help="triangles in the boundary stratum")
    _spec_flags(ca)
    ca.set_defaults(func=cmd_cat0)
    ha = ex.add_parser("harnack", parents=[parent])
    ha.add_argument("--C1", type=float, default=1.0)
    ha.add_argument("--R0", type=float, default=1.0)
    ha.add_argument("--points-per-R0", type=int, default=64)
    ha.set_defaults(func=cmd_harnack)
    pe = ex.add_parser("perturbation", parents=[parent])
    pe.add_argument("--pairs", type=int, default=4)
    _spec_flags(pe)
    pe.set_defaults(func=cmd_perturbation)

    su = sub.add_parser("suite").add_subparsers(dest="sub", required=True, parser_class=_Parser)
    ac = su.add_parser("acceptance", parents=[parent])
    ac.add_argument("--only", type=int, nargs="+", default=None, help="criterion numbers")
    ac.set_defaults(func=cmd_acceptance)
    return ap


def _resolve(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "format", None):
        cfg.format = args.format
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "run_id", None):
        cfg.run_id = args.run_id
    if getattr(args, "tol", None) is not None:
        cfg.tolerances = {k: args.tol for k in cfg.tolerances}
    return cfg.validate()


def main(argv: Optional[List[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve(args)
        ok = args.func(args, cfg, Emitter(cfg, stdout))
    except (UsageError, DomainError) as exc:
        print(f"wplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WPLabError as exc:
        print(f"wplab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
