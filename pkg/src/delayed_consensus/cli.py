"""Command-line entry point.

Exit codes: 0 success / converged / feasible, 1 not converged / diverged /
infeasible / I/O failure, 2 invalid input, 3 inconclusive LMI series.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .delays import delay_aggregates
from .dynamics import DynamicsError, simulate
from .graph import graph_stats
from .lmi import BracketError, InconclusiveError, LMIError, lmi_feasible, max_step_size
from .rendezvous import (ConsensusDivergence, ControllerGains, Pose, RendezvousError,
                         RendezvousScenario, run_rendezvous)
from .spectral import SpectralError, predict_nonuniform, rouche_bound, uniform_mode_stability

OK, FAIL, INVALID, INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _step_size(args, sc) -> float:
    c = args.c if args.c is not None else sc.c
    if c is None:
        raise UsageError("no step size: pass --c or set \"c\" in the scenario")
    if not c > 0:
        raise UsageError(f"step size must be positive, got {c}")
    return c


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, sc) -> int:
    c = _step_size(args, sc)
    traj, report = simulate(sc.initial_state(), sc.dm, c, max_steps=sc.max_steps, tol=sc.tol,
                            blowup=sc.blowup, stride=args.stride)
    out = _out(args)
    io.emit_trajectory_csv(traj, out / "trajectory.csv")
    io.emit_json(io.report_json(report), out / "report.json")
    if report.converged:
        when = f"step {report.convergence_step}"
        if sc.dt is not None:
            when += f" ({report.convergence_step * sc.dt:g} s)"
        print(f"c={c:g}: converged at {when}; consensus {np.array2string(report.consensus_vector, precision=6)}")
        return OK
    state = "diverged" if report.diverged else f"not converged after {report.steps_run} steps"
    print(f"c={c:g}: {state}")
    return FAIL


def cmd_predict(args, sc) -> int:
    c = _step_size(args, sc)
    W0 = sc.initial_state()
    pred = predict_nonuniform(sc.dm, c, W0)
    agg = delay_aggregates(sc.dm)
    io.emit_json({"c": c, "alpha": pred.alpha, "weights": pred.weights, "psi": agg.psi,
                  "total_edge_delay": agg.total_edge_delay}, _out(args) / "prediction.json")
    print(f"c={c:g}: predicted consensus {np.array2string(pred.alpha, precision=6)}")
    return OK


def cmd_bound(args, sc) -> int:
    g = sc.dm.graph
    d = args.d
    if d is None:
        delays = sc.dm.tau[g.adjacency == 1]
        if not np.all(delays == delays[0]):
            raise UsageError("delays are not uniform; pass --d")
        d = int(delays[0])
    rb = rouche_bound(g, d)
    st = graph_stats(g)
    payload = {"d": d, "bound": rb.value, "heuristic": rb.heuristic, "avg_degree": float(st.avg_degree),
               "max_degree": st.max_degree}
    code = OK
    if args.c is not None:
        report = uniform_mode_stability(g, d, args.c)
        payload["modes"] = report.to_json()
        code = OK if report.stable else FAIL
    io.emit_json(payload, _out(args) / "bound.json")
    tag = " (heuristic: graph not regular)" if rb.heuristic else ""
    msg = f"d={d}: step-size bound {rb.value:.6g}{tag}"
    if args.c is not None:
        msg += f"; c={args.c:g} {'stable' if code == OK else 'unstable'}"
    print(msg)
    return code


def cmd_lmi_check(args, sc) -> int:
    c = _step_size(args, sc)
    v = lmi_feasible(sc.dm, c, delta=args.delta, eps=args.eps)
    io.emit_json(v.to_json(c), _out(args) / "lmi.json")
    print(f"c={c:g}: {'feasible' if v.feasible else 'infeasible'} ({v.method})")
    return OK if v.feasible else FAIL


def cmd_lmi_search(args, sc) -> int:
    cert = max_step_size(sc.dm, args.lo, args.hi, args.tol, delta=args.delta, eps=args.eps)
    io.emit_json(cert.to_json(), _out(args) / "certificate.json")
    print(f"c_max = {cert.c_max:.6g} (bracket tol {args.tol:g}, {len(cert.probes)} probes)")
    return OK


def cmd_sweep(args, sc) -> int:
    cs = [float(s) for s in args.cs.split(",") if s.strip()] if args.cs else []
    spec = io.SweepSpec(cs=cs, scenario=sc, out_dir=_out(args))
    rows = io.sweep(spec)
    for r in rows:
        if r.report.converged:
            print(f"c={r.c:g}: step {r.report.convergence_step}, |alpha - predicted| = {r.error:.2e}")
        else:
            print(f"c={r.c:g}: {'diverged' if r.report.diverged else 'not converged'}")
    return OK if all(r.report.converged for r in rows) else FAIL


def _default_poses(n: int):
    if n == 4:
        corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    else:
        corners = [(math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n)) for i in range(n)]
    return tuple(Pose(x, y, 0.0) for x, y in corners)


def rendezvous_scenario(sc, c: float) -> RendezvousScenario:
    cfg = sc.rendezvous
    poses = tuple(Pose(*p) for p in cfg["poses"]) if "poses" in cfg else _default_poses(sc.dm.n)
    return RendezvousScenario(
        dm=sc.dm, c=c, poses=poses, gains=ControllerGains(**cfg.get("gains", {})),
        dt=float(cfg.get("dt", 0.02)), consensus_stride=int(cfg.get("consensus_stride", 1)),
        blowup=sc.blowup,
    )


def cmd_rendezvous(args, sc) -> int:
    c = _step_size(args, sc)
    try:
        scenario = rendezvous_scenario(sc, c)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad rendezvous settings: {exc}") from None
    duration = args.duration if args.duration is not None else float(sc.rendezvous.get("duration", 60.0))
    tol = args.capture_tol if args.capture_tol is not None else float(sc.rendezvous.get("capture_tol", 0.05))
    try:
        trace = run_rendezvous(scenario, duration, tol)
    except ConsensusDivergence as exc:
        print(f"c={c:g}: {exc}")
        return FAIL
    out = _out(args)
    io.emit_rendezvous_csv(trace, out / "rendezvous.csv")
    io.emit_json(trace.summary(), out / "rendezvous.json")
    worst = float(trace.terminal_errors.max())
    print(f"c={c:g}: {'rendezvous' if trace.success else 'missed'}; worst terminal error {worst:.3g} m")
    return OK if trace.success else FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="delayed-consensus", description="Delayed multi-agent consensus toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.set_defaults(func=fn)
        return sp

    sp = add("simulate", cmd_simulate, "run the delayed recursion")
    sp.add_argument("--c", type=float)
    sp.add_argument("--stride", type=int, default=1, help="snapshot every N steps")
    sp = add("predict", cmd_predict, "closed-form consensus value")
    sp.add_argument("--c", type=float)
    sp = add("bound", cmd_bound, "uniform-delay step-size bound and per-mode roots")
    sp.add_argument("--d", type=int)
    sp.add_argument("--c", type=float, help="also check the characteristic roots at this c")
    for name, fn in (("lmi-check", cmd_lmi_check), ("lmi-search", cmd_lmi_search)):
        sp = add(name, fn, "Lyapunov LMI feasibility" if name == "lmi-check" else "bisect for c_max")
        sp.add_argument("--delta", type=float, default=1e-6)
        sp.add_argument("--eps", type=float, default=1e-10)
        if name == "lmi-check":
            sp.add_argument("--c", type=float)
        else:
            sp.add_argument("--lo", type=float, default=0.01)
            sp.add_argument("--hi", type=float, default=1.0)
            sp.add_argument("--tol", type=float, default=5e-3)
    sp = add("sweep", cmd_sweep, "simulate a list of step sizes")
    sp.add_argument("--cs", default="0.05,0.15,0.25,0.35,0.45,0.55", help="comma-separated step sizes")
    sp = add("rendezvous", cmd_rendezvous, "unicycle robots tracking the consensus")
    sp.add_argument("--c", type=float)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--capture-tol", type=float)
    return p


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        sc = io.load_scenario(args.scenario)
        return args.func(args, sc)
    except (UsageError, io.ScenarioError, BracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return INCONCLUSIVE
    except (DynamicsError, SpectralError, LMIError, RendezvousError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return FAIL


def main() -> None:
    sys.exit(run_command())
