"""Command-line front end.

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
numerical failures (and unwritable outputs).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence


from . import linear_analysis as la
from .pmp import Weights
from .svg import emit_svg
from .trajectory_opt import (
    DecisionVector,
    EvaluationResult,
    FourierInput,
    OptimizeOptions,
    continuation,
    evaluate,
    optimize,
)
from .vehicle_model import ConfigError, equilibrium_for_speed, fuel_rate, load_params, steady_cost

log = logging.getLogger("pulseglide")

LOCUS_HEADER = ["R", "re1", "im1", "re2", "im2", "re3", "im3", "re4", "im4", "class"]
RCRIT_HEADER = ["v_mps", "r_crit", "omega_rad_s", "period_s"]
TRAJECTORY_HEADER = ["t_s", "x1_mps", "x2_N", "u_Nps", "power_W", "fuel_gps"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _num(v: float) -> str:
    return repr(float(v))


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def locus_csv(points) -> str:
    rows = []
    for pt in points:
        row = [_num(pt.r_value)]
        for e in pt.eigenvalues:
            row += [_num(e.real), _num(e.imag)]
        row.append(pt.mode.value)
        rows.append(row)
    return _csv_text(LOCUS_HEADER, rows)


def rcrit_csv(results) -> str:
    rows = [[_num(r.v), _num(r.r_crit), _num(r.omega_at_crit), _num(r.period_at_crit)] for r in results]
    return _csv_text(RCRIT_HEADER, rows)


def trajectory_csv(ev: EvaluationResult, b) -> str:
    t = ev.trajectory.t
    x1, x2 = ev.trajectory.rows[:, 0], ev.trajectory.rows[:, 1]
    P = x1 * x2
    fuel = fuel_rate(P, b)
    rows = (
        [_num(t[i]), _num(x1[i]), _num(x2[i]), _num(ev.u[i]), _num(P[i]), _num(fuel[i])]
        for i in range(len(t))
    )
    return _csv_text(TRAJECTORY_HEADER, rows)


def _trajectory_plot_data(ev: EvaluationResult) -> dict:
    return {
        "t": ev.trajectory.t,
        "x1": ev.trajectory.rows[:, 0],
        "x2": ev.trajectory.rows[:, 1],
        "u": ev.u,
    }


def _check_domain(ev: EvaluationResult) -> None:
    if ev.min_x1 <= 0:
        print(
            f"warning: speed dropped to {ev.min_x1:.4g} m/s; the vehicle model is only valid for x1 > 0",
            file=sys.stderr,
        )


# -- subcommands --------------------------------------------------------------


def cmd_equilibrium(args, p, b):
    eq = equilibrium_for_speed(args.speed, p, b)
    doc = eq.as_dict()
    doc["steady_cost"] = steady_cost(args.speed, None, p, b)
    _emit(_json_text(doc), args.out)


def cmd_locus(args, p, b):
    grid = la.log_grid(args.r_min, args.r_max, args.points)
    pts = la.root_locus(args.speed, grid, p, b)
    _emit(locus_csv(pts), args.out)
    if args.svg:
        emit_svg("locus", pts, args.svg, title=f"root locus, v = {args.speed:g} m/s")


def cmd_rcrit(args, p, b):
    if args.step <= 0 or args.v_max < args.v_min:
        raise UsageError("need step > 0 and v-max >= v-min")
    n = int(math.floor((args.v_max - args.v_min) / args.step + 1e-9)) + 1
    grid = [args.v_min + i * args.step for i in range(n)]
    results = la.rcrit_sweep(grid, p, b)
    _emit(rcrit_csv(results), args.out)
    if args.svg:
        emit_svg("rcrit", results, args.svg, title="critical jerk weight and PnG period")


def cmd_vcrit(args, p, b):
    v = la.find_v_crit(p, b, args.v_lo, args.v_hi, args.tol)
    _emit(_json_text(v), args.out)


def _result_doc(seq, w, args, p, b, j_ss):
    final = seq[-1]
    ev = final.eval
    return {
        "speed_mps": args.speed,
        "weights": {"c": w.c, "r": w.r},
        "steps": args.steps,
        "decision": final.decision.as_dict(),
        "cost": ev.cost_dict(),
        "steady_cost": j_ss,
        "residuals": {"r_x1": ev.r_x1, "r_x2": ev.r_x2, "min_x2": ev.min_x2},
        "convergence": {
            "converged": final.converged,
            "iterations": final.iterations,
            "stages": [
                {"penalty": s.penalty, "merit": s.merit, "nfev": s.nfev, "restarts": s.restarts}
                for s in final.penalty_history
            ],
        },
        "continuation": [
            {
                "harmonics": r.decision.input.harmonics,
                "J": r.j,
                "converged": r.converged,
                "omega": r.decision.input.omega,
                "min_x2": r.eval.min_x2,
                "r_x1": r.eval.r_x1,
                "r_x2": r.eval.r_x2,
            }
            for r in seq
        ],
    }


def cmd_optimize(args, p, b):
    if args.harmonics < 1:
        raise UsageError("--harmonics must be >= 1")
    eq = equilibrium_for_speed(args.speed, p, b)
    c = eq.weight_c if args.c is None else args.c
    w = Weights(c, args.r)
    j_ss = steady_cost(args.speed, c, p, b)
    x1_0 = 0.98 * args.speed if args.x1_0 is None else args.x1_0
    d0 = DecisionVector(x1_0, eq.force, FourierInput(args.omega0, [0.0], [args.b0]))
    opts = OptimizeOptions(steps=args.steps)
    seed = optimize(d0, w, p, b, opts)
    seq = [seed]
    if args.harmonics > 1:
        if not seed.converged:
            raise ArithmeticError("single-harmonic search did not converge; cannot continue")
        seq = continuation(seed, args.harmonics, w, p, b, opts)
    final = seq[-1]
    _check_domain(final.eval)
    _emit(_json_text(_result_doc(seq, w, args, p, b, j_ss)), args.json)
    if args.csv:
        Path(args.csv).write_text(trajectory_csv(final.eval, b))
    if args.svg:
        emit_svg("trajectory", _trajectory_plot_data(final.eval), args.svg,
                 title=f"K = {final.decision.input.harmonics}, J = {final.j:.5f}")
    if not final.converged:
        print("warning: optimizer did not meet the periodicity/force tolerances", file=sys.stderr)


def cmd_simulate(args, p, b):
    try:
        doc = json.loads(Path(args.input).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read input {args.input}: {exc}") from exc
    steps = args.steps
    if isinstance(doc, dict) and "decision" in doc:
        steps = steps or doc.get("steps")
        weights = doc.get("weights", {})
        doc = doc["decision"]
    else:
        weights = {}
    try:
        d = DecisionVector.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad decision document: {exc}") from exc
    w = Weights(float(weights.get("c", 0.0)), float(weights.get("r", 0.0)))
    ev = evaluate(d, w, p, b, steps or 4096)
    _check_domain(ev)
    _emit(trajectory_csv(ev, b), args.out)
    if args.svg:
        emit_svg("trajectory", _trajectory_plot_data(ev), args.svg)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON parameter document (vehicle, bsfc)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="pulseglide", description="Pulse-and-glide optimal-control analysis")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("equilibrium", parents=[common], help="steady cruise point and weight C")
    sp.add_argument("--speed", type=float, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_equilibrium)

    sp = sub.add_parser("locus", parents=[common], help="eigenvalues over a log grid of R")
    sp.add_argument("--speed", type=float, required=True)
    sp.add_argument("--r-min", type=float, default=1e-8)
    sp.add_argument("--r-max", type=float, default=1e2)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_locus)

    sp = sub.add_parser("rcrit", parents=[common], help="critical R and PnG period over speeds")
    sp.add_argument("--v-min", type=float, default=2.0)
    sp.add_argument("--v-max", type=float, default=32.0)
    sp.add_argument("--step", type=float, default=1.0)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_rcrit)

    sp = sub.add_parser("vcrit", parents=[common], help="speed above which PnG is never optimal")
    sp.add_argument("--v-lo", type=float, default=2.0)
    sp.add_argument("--v-hi", type=float, default=40.0)
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_vcrit)

    sp = sub.add_parser("optimize", parents=[common], help="direct periodic trajectory optimization")
    sp.add_argument("--speed", type=float, required=True)
    sp.add_argument("--r", type=float, required=True, help="jerk weight R")
    sp.add_argument("--c", type=float, help="override the speed weight C (default: equilibrium value)")
    sp.add_argument("--harmonics", type=int, default=1)
    sp.add_argument("--steps", type=int, default=4096)
    sp.add_argument("--x1-0", type=float, help="initial speed guess (default 0.98*speed)")
    sp.add_argument("--omega0", type=float, default=0.1, help="initial frequency guess [rad/s]")
    sp.add_argument("--b0", type=float, default=7.1, help="initial cosine coefficient [N/s]")
    sp.add_argument("--json", help="result JSON path (default stdout)")
    sp.add_argument("--csv", help="trajectory CSV path")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("simulate", parents=[common], help="simulate one period of a Fourier input")
    sp.add_argument("--input", required=True, help="decision JSON, or a result JSON from optimize")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        try:
            p, b = load_params(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        args.func(args, p, b)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, la.NotPnGCapable, la.BracketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
