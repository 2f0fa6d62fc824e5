"""Batch front end: JSON scenarios in, JSON reports out, CSV sidecars for plots.

A scenario is a single JSON object::

    {
      "matrix": {"type": "companion_harper", "lambda": 0.5, "mu": 0.0},
      "task": "turning-points",
      "parameters": {"region": [-0.25, 0.75, -0.5, 0.5]},
      "tolerances": {}
    }

``wkbdiff run scenario.json --out dir/`` executes it and prints the
report to stdout; every task also has a flag shorthand
(``wkbdiff residue --at 0,0.209591 --sign +``) that builds the same
scenario.  Reports are canonicalized deterministically (sorted keys,
17-significant-digit floats, LF line endings); the ``timing_s`` field
is the only part that varies between identical runs.

Exit status: 0 when every check flag passes, 1 when a check fails,
2 on malformed input or a computation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import WkbError
from .geometry import VerticalCurve, canonicity_check, find_canonical_vertical_lines
from .matrices import matrix_from_json, matrix_to_json, validate_assumptions, FourierMatrix
from .momentum import MomentumBranch, default_branch, find_turning_points
from .oracle import propagate
from .phase import omega_infinity_report, phase_integral, residue_at
from .wkb import (
    WkbCandidate,
    default_h_grid,
    global_residual_profile,
    order_diagnostics,
    psi0_scaled,
    scaling_fit,
)

TASKS = (
    "validate", "turning-points", "momentum-trace", "phase-integral", "residue",
    "omega-limit", "canonical-check", "canonical-scan", "wkb-verify", "wkb-profile",
    "propagate",
)

_DEFAULT_TOLERANCES = {
    "quad_tol": 1e-10,
    "residue_tol": 1e-8,
    "match_tol": 1e-6,
}

_DEFAULT_MATRIX = {"type": "companion_harper", "lambda": 0.5, "mu": 0.0}


# -- canonical JSON -----------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return repr(int(x)) + ".0"
    return format(x, ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed float formatting, LF only."""
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return repr(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, complex):
        return canonical_json([obj.real, obj.imag])
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(json.dumps(str(k)) + ":" + canonical_json(v) for k, v in items) + "}"
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def _c2l(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _l2c(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def threads_cap() -> int:
    """Worker cap from WKBDIFF_THREADS (>= 1); informational for sweeps."""
    raw = os.environ.get("WKBDIFF_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, os.cpu_count() or 1)


# -- scenario normalization ---------------------------------------------------


def normalize_scenario(scenario: dict) -> dict:
    if not isinstance(scenario, dict):
        raise ValueError("scenario must be a JSON object")
    task = scenario.get("task")
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    matrix = scenario.get("matrix", _DEFAULT_MATRIX)
    matrix_from_json(matrix)  # reject malformed matrices before any computation
    tolerances = dict(_DEFAULT_TOLERANCES)
    tolerances.update(scenario.get("tolerances", {}))
    params = dict(scenario.get("parameters", {}))
    return {"matrix": matrix, "task": task, "parameters": params, "tolerances": tolerances}


def _branch_for(matrix, params, fallback_base: complex) -> MomentumBranch:
    base = _l2c(params["base"]) if "base" in params else complex(fallback_base)
    if "base_value" in params:
        return MomentumBranch(matrix, base, _l2c(params["base_value"]))
    return default_branch(matrix, base)


# -- task implementations -----------------------------------------------------


def _run_validate(matrix, params, tol):
    rep = validate_assumptions(matrix)
    results = {
        "k": rep.k, "l": rep.l,
        "index_table": {s: {k: (v if v is not None else "zero")
                            for k, v in rep.index_table[s].items()}
                        for s in ("u", "d")},
        "unimodular_defect": rep.unimodular_defect,
    }
    checks = {
        "k_positive": rep.k_positive,
        "l_positive": rep.l_positive,
        "extreme_traces_nonzero": rep.extreme_traces_nonzero,
        "offdiag_not_identically_zero": rep.offdiag_not_identically_zero,
        "bounded_ratio_at_infinity": rep.bounded_ratio_at_infinity,
        "chain_u": rep.chain_holds["u"],
        "chain_d": rep.chain_holds["d"],
        "unimodular": rep.unimodular,
    }
    return results, checks, None


def _run_turning_points(matrix, params, tol):
    region = tuple(float(v) for v in params["region"])
    pts = find_turning_points(matrix, region)
    results = [
        {"re": tp.location.real, "im": tp.location.imag,
         "trace_sign": tp.trace_sign, "simple": tp.simple,
         "p1": _c2l(tp.p1) if tp.p1 is not None else None}
        for tp in pts
    ]
    return {"count": len(pts), "points": results}, {"search_complete": True}, None


def _run_momentum_trace(matrix, params, tol):
    path = [_l2c(v) for v in params["path"]]
    branch = _branch_for(matrix, params, path[0])
    ps = branch.values_on(np.array(path, dtype=complex))
    defect = max(abs(2.0 * np.cos(p) - matrix.trace.eval(z)) for z, p in zip(path, ps))
    rows = [{"z": _c2l(z), "p": _c2l(p)} for z, p in zip(path, ps)]
    csv = ("momentum-trace", ["re_z", "im_z", "re_p", "im_p"],
           [[z.real, z.imag, p.real, p.imag] for z, p in zip(path, ps)])
    return ({"trace": rows, "max_defect": float(defect)},
            {"momentum_consistent": bool(defect < 1e-10)}, csv)


def _run_phase_integral(matrix, params, tol):
    path = [_l2c(v) for v in params["path"]]
    sign = 1 if params.get("sign", "+") in ("+", 1, "+1") else -1
    branch = _branch_for(matrix, params, path[0])
    res = phase_integral(branch, path, sign, tol["quad_tol"])
    return ({"value": _c2l(res.value), "error": res.error_estimate},
            {"error_within_tol": bool(res.error_estimate <= tol["quad_tol"])}, None)


def _run_residue(matrix, params, tol):
    at = _l2c(params["at"])
    sign = 1 if params.get("sign", "+") in ("+", 1, "+1") else -1
    radius = params.get("radius")
    turns = params.get("turns")
    fallback = at + max(0.3, 3.0 * (radius or 0.1))
    branch = _branch_for(matrix, params, fallback)
    res = residue_at(branch, at, sign,
                     radius=float(radius) if radius else None,
                     turns=int(turns) if turns else None,
                     tol=tol["residue_tol"])
    results = {"value": _c2l(res.value), "turns": res.turns,
               "radius": res.loop_radius, "closure_defect": res.closure_defect,
               "m12_zero_order": res.m12_zero_order, "experimental": res.experimental}
    return results, {"loop_closed": bool(res.closure_defect < 1e-6)}, None


def _run_omega_limit(matrix, params, tol):
    side = params.get("side", "u")
    sign = 1 if params.get("sign", "+") in ("+", 1, "+1") else -1
    ys = [float(v) for v in params.get("ys", (3.0, 4.0, 5.0))]
    branch = _branch_for(matrix, params, complex(0.25, 0.0))
    rep = omega_infinity_report(branch, side, sign, ys, match_tol=tol["match_tol"])
    decay_ok = (not math.isfinite(rep.decay_exponent)) or rep.decay_exponent >= 0.9 * 2 * math.pi
    results = {
        "value": _c2l(rep.value), "predicted": _c2l(rep.predicted),
        "decay_exponent": rep.decay_exponent, "branch_s": rep.branch_s,
        "samples": [{"y": y, "omega": _c2l(v)} for y, v in rep.samples],
    }
    checks = {
        "matches_prediction": bool(abs(rep.value - rep.predicted) < tol["match_tol"]),
        "decay_at_least_exponential": bool(decay_ok),
    }
    return results, checks, None


def _parse_line(params) -> tuple[float, float, float]:
    spec = params.get("line")
    if isinstance(spec, str) and spec.startswith("x="):
        x = float(spec[2:])
    else:
        x = float(spec)
    y0, y1 = (float(v) for v in params.get("y", (-5.0, 5.0)))
    return x, y0, y1


def _run_canonical_check(matrix, params, tol):
    if "curve" in params:
        curve = VerticalCurve([_l2c(v) for v in params["curve"]])
        x_anchor = curve.nodes[0].real
    else:
        x, y0, y1 = _parse_line(params)
        curve = VerticalCurve.vertical_line(x, y0, y1)
        x_anchor = x
    spu = int(params.get("samples_per_unit", 20))
    branch = _branch_for(matrix, params, complex(x_anchor, 0.0))
    rep = canonicity_check(branch, curve, spu)
    csv = ("canonical-check", ["y", "m1", "m2"], rep.samples.tolist())
    results = {"min_margin": rep.min_margin, "samples": len(rep.samples)}
    return results, {"canonical": bool(rep.canonical), "strictly": bool(rep.strictly)}, csv


def _run_canonical_scan(matrix, params, tol):
    x0, x1 = (float(v) for v in params["x"])
    y0, y1 = (float(v) for v in params["y"])
    nx = int(params.get("nx", 51))
    branch = _branch_for(matrix, params, complex(0.5 * (x0 + x1), 0.0))
    ivals = find_canonical_vertical_lines(branch, (x0, x1), (y0, y1), nx)
    results = {"intervals": [{"x_min": iv.x_min, "x_max": iv.x_max,
                              "min_margin": iv.min_margin} for iv in ivals]}
    return results, {"scan_completed": True}, None


_SLOPE_BANDS = {
    "t11_defect": (1.8, 2.2), "t22_defect": (1.8, 2.2),
    "w11_defect": (1.8, 2.2), "w22_defect": (1.8, 2.2),
    "t12_stripped": (0.8, 1.2), "t21_stripped": (0.8, 1.2),
    "residual_plus": (0.8, 1.2), "residual_minus": (0.8, 1.2),
}


def _run_wkb_verify(matrix, params, tol):
    at = _l2c(params["at"])
    z0 = _l2c(params["z0"]) if "z0" in params else at
    hg = params.get("h_grid", "auto")
    if hg == "auto" or hg is None:
        h_grid = default_h_grid()
    else:
        h_grid = np.asarray([float(v) for v in hg], dtype=float)
    branch = _branch_for(matrix, params, z0)
    results = {}
    checks = {}
    rows = []
    for name, band in _SLOPE_BANDS.items():
        fit = scaling_fit(lambda z, h, key=name: order_diagnostics(branch, z, h, z0)[key],
                          at, h_grid)
        results[name] = {"slope": fit.slope, "r_squared": fit.r_squared,
                         "intercept": fit.intercept}
        checks[f"{name}_slope_in_band"] = bool(band[0] <= fit.slope <= band[1])
        checks[f"{name}_fit_quality"] = bool(fit.r_squared > 0.99)
        for h, v in zip(fit.h_grid, fit.values):
            rows.append([name, h, v])
    csv = ("wkb-verify", ["measure", "h", "value"], rows)
    return results, checks, csv


def _run_wkb_profile(matrix, params, tol):
    x, y0, y1 = _parse_line(params)
    h = float(params.get("h", 0.01))
    sign = 1 if params.get("sign", "+") in ("+", 1, "+1") else -1
    spu = int(params.get("samples_per_unit", 10))
    branch = _branch_for(matrix, params, complex(x, 0.0))
    z0 = _l2c(params["z0"]) if "z0" in params else complex(x, 0.0)
    cand = WkbCandidate(sign, z0, branch)
    curve = VerticalCurve.vertical_line(x, y0, y1)
    prof = global_residual_profile(cand, curve, h, spu)
    mx = max(r for _, r in prof)
    csv = ("wkb-profile", ["y", "relative_residual"], [[y, r] for y, r in prof])
    results = {"h": h, "max_residual": mx, "samples": len(prof)}
    return results, {"finite": bool(all(math.isfinite(r) for _, r in prof))}, csv


def _run_propagate(matrix, params, tol):
    start = _l2c(params["from"])
    h = float(params["h"])
    steps = int(params["steps"])
    init = params.get("init", "wkb+")
    if init in ("wkb+", "wkb-"):
        sign = 1 if init == "wkb+" else -1
        branch = _branch_for(matrix, params, start)
        vec, _ = psi0_scaled(WkbCandidate(sign, start, branch), start, h)
    else:
        vals = [float(v) for v in init]
        vec = np.array([complex(vals[0], vals[1]), complex(vals[2], vals[3])])
    traj = propagate(matrix, start, vec, h, steps)
    rows = [[n, traj.directions[n][0].real, traj.directions[n][0].imag,
             traj.directions[n][1].real, traj.directions[n][1].imag, traj.logmags[n]]
            for n in range(abs(steps) + 1)]
    csv = ("propagate", ["n", "re_dir1", "im_dir1", "re_dir2", "im_dir2", "logmag"], rows)
    results = {
        "final_direction": [_c2l(traj.directions[-1][0]), _c2l(traj.directions[-1][1])],
        "final_logmag": float(traj.logmags[-1]),
    }
    finite = bool(np.all(np.isfinite(traj.logmags)))
    return results, {"finite": finite}, csv


_RUNNERS = {
    "validate": _run_validate,
    "turning-points": _run_turning_points,
    "momentum-trace": _run_momentum_trace,
    "phase-integral": _run_phase_integral,
    "residue": _run_residue,
    "omega-limit": _run_omega_limit,
    "canonical-check": _run_canonical_check,
    "canonical-scan": _run_canonical_scan,
    "wkb-verify": _run_wkb_verify,
    "wkb-profile": _run_wkb_profile,
    "propagate": _run_propagate,
}


def run(scenario: dict) -> dict:
    """Execute one scenario and return the report dictionary.

    Deterministic for a fixed scenario and tool version, except for the
    ``timing_s`` field.
    """
    norm = normalize_scenario(scenario)
    matrix = matrix_from_json(norm["matrix"])
    t0 = time.perf_counter()
    results, checks, csv = _RUNNERS[norm["task"]](matrix, norm["parameters"],
                                                  norm["tolerances"])
    report = {
        "tool": "wkbdiff",
        "version": __version__,
        "threads": threads_cap(),
        "scenario": norm,
        "results": results,
        "checks": checks,
        "pass": all(checks.values()),
        "timing_s": time.perf_counter() - t0,
    }
    report["_csv"] = csv  # stripped before printing
    return report


def _write_outputs(report: dict, out_dir: str | None) -> None:
    csv = report.pop("_csv", None)
    text = canonical_json(report)
    sys.stdout.write(text + "\n")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w", newline="\n") as fh:
            fh.write(text + "\n")
        if csv is not None:
            name, header, rows = csv
            with open(os.path.join(out_dir, f"{name}.csv"), "w", newline="\n") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(
                        format(v, ".17g") if isinstance(v, float) else str(v)
                        for v in row) + "\n")


# -- argument parsing ---------------------------------------------------------


def _matrix_arg(spec: str) -> dict:
    if spec.startswith("harper:"):
        lam, mu = (float(v) for v in spec[len("harper:"):].split(","))
        return {"type": "companion_harper", "lambda": lam, "mu": mu}
    if spec.strip().startswith("{"):
        return json.loads(spec)
    with open(spec) as fh:
        return json.load(fh)


def _pair(spec: str) -> list[float]:
    parts = spec.split(",")
    if len(parts) == 2:
        return [float(parts[0]), float(parts[1])]
    z = complex(spec)
    return [z.real, z.imag]


def _path_arg(spec: str) -> list[list[float]]:
    nodes = []
    for tok in spec.replace(";", ",").split(","):
        tok = tok.strip()
        if tok:
            z = complex(tok)
            nodes.append([z.real, z.imag])
    return nodes


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wkbdiff",
                                 description="complex WKB diagnostics for 2x2 difference equations")
    ap.add_argument("--version", action="version", version=f"wkbdiff {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute a JSON scenario file")
    runp.add_argument("scenario", help="path to the scenario JSON")
    runp.add_argument("--out", default=None, help="directory for report.json and CSV sidecars")

    def common(p):
        p.add_argument("--matrix", default=None,
                       help="harper:LAM,MU | inline JSON | path to a matrix JSON file")
        p.add_argument("--base", default=None, help="branch base point re,im")
        p.add_argument("--base-value", default=None, help="momentum value at the base point re,im")
        p.add_argument("--out", default=None)

    p = sub.add_parser("validate", help="check the standing assumptions")
    common(p)

    p = sub.add_parser("turning-points", help="locate turning points in a rectangle")
    common(p)
    p.add_argument("--region", required=True, help="x0,x1,y0,y1")

    p = sub.add_parser("momentum-trace", help="continue the momentum along a path")
    common(p)
    p.add_argument("--path", required=True, help="complex nodes, e.g. 0.25,0.25+1j")

    p = sub.add_parser("phase-integral", help="integral of the phase differential along a path")
    common(p)
    p.add_argument("--path", required=True)
    p.add_argument("--sign", default="+", choices=["+", "-"])
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("residue", help="loop integral of the phase differential")
    common(p)
    p.add_argument("--at", required=True, help="re,im")
    p.add_argument("--sign", default="+", choices=["+", "-"])
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--turns", type=int, default=None)

    p = sub.add_parser("omega-limit", help="limit of the phase density at Im z -> +-oo")
    common(p)
    p.add_argument("--side", default="u", choices=["u", "d"])
    p.add_argument("--sign", default="+", choices=["+", "-"])
    p.add_argument("--ys", default=None, help="sample heights, e.g. 3,4,5")

    p = sub.add_parser("canonical-check", help="verify canonicity of a vertical line")
    common(p)
    p.add_argument("--line", required=True, help="x=VALUE")
    p.add_argument("--y", required=True, help="y0,y1")
    p.add_argument("--samples-per-unit", type=int, default=20)

    p = sub.add_parser("canonical-scan", help="scan vertical lines for canonicity")
    common(p)
    p.add_argument("--x", required=True, help="x0,x1")
    p.add_argument("--y", required=True, help="y0,y1")
    p.add_argument("--nx", type=int, default=51)

    p = sub.add_parser("wkb-verify", help="order-certification slope fits at a point")
    common(p)
    p.add_argument("--at", required=True, help="re,im")
    p.add_argument("--z0", default=None, help="normalization point re,im")
    p.add_argument("--h-grid", default="auto", help="auto | comma-separated h values")

    p = sub.add_parser("wkb-profile", help="candidate residual along a vertical line")
    common(p)
    p.add_argument("--line", required=True, help="x=VALUE")
    p.add_argument("--y", default="-4,4", help="y0,y1")
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--sign", default="+", choices=["+", "-"])

    p = sub.add_parser("propagate", help="exact lattice propagation")
    common(p)
    p.add_argument("--from", dest="start", required=True, help="re,im")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--init", default="wkb+",
                   help="wkb+ | wkb- | re1,im1,re2,im2")
    return ap


def _scenario_from_args(args: argparse.Namespace) -> dict:
    params: dict = {}
    if getattr(args, "base", None):
        params["base"] = _pair(args.base)
    if getattr(args, "base_value", None):
        params["base_value"] = _pair(args.base_value)

    cmd = args.command
    if cmd == "turning-points":
        params["region"] = [float(v) for v in args.region.split(",")]
    elif cmd == "momentum-trace":
        params["path"] = _path_arg(args.path)
    elif cmd == "phase-integral":
        params["path"] = _path_arg(args.path)
        params["sign"] = args.sign
        if args.tol is not None:
            params["tol"] = args.tol
    elif cmd == "residue":
        params["at"] = _pair(args.at)
        params["sign"] = args.sign
        if args.radius is not None:
            params["radius"] = args.radius
        if args.turns is not None:
            params["turns"] = args.turns
    elif cmd == "omega-limit":
        params["side"] = args.side
        params["sign"] = args.sign
        if args.ys:
            params["ys"] = [float(v) for v in args.ys.split(",")]
    elif cmd == "canonical-check":
        params["line"] = args.line
        params["y"] = [float(v) for v in args.y.split(",")]
        params["samples_per_unit"] = args.samples_per_unit
    elif cmd == "canonical-scan":
        params["x"] = [float(v) for v in args.x.split(",")]
        params["y"] = [float(v) for v in args.y.split(",")]
        params["nx"] = args.nx
    elif cmd == "wkb-verify":
        params["at"] = _pair(args.at)
        if args.z0:
            params["z0"] = _pair(args.z0)
        params["h_grid"] = ("auto" if args.h_grid == "auto"
                            else [float(v) for v in args.h_grid.split(",")])
    elif cmd == "wkb-profile":
        params["line"] = args.line
        params["y"] = [float(v) for v in args.y.split(",")]
        params["h"] = args.h
        params["sign"] = args.sign
    elif cmd == "propagate":
        params["from"] = _pair(args.start)
        params["h"] = args.h
        params["steps"] = args.steps
        if args.init in ("wkb+", "wkb-"):
            params["init"] = args.init
        else:
            params["init"] = [float(v) for v in args.init.split(",")]
    matrix = _matrix_arg(args.matrix) if getattr(args, "matrix", None) else _DEFAULT_MATRIX
    return {"matrix": matrix, "task": cmd, "parameters": params}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            with open(args.scenario) as fh:
                try:
                    scenario = json.load(fh)
                except json.JSONDecodeError as exc:
                    print(f"error: {args.scenario}: line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}", file=sys.stderr)
                    return 2
        else:
            scenario = _scenario_from_args(args)
        report = run(scenario)
    except (WkbError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _write_outputs(report, getattr(args, "out", None))
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
