"""Scenario files, CSV/JSON writers, and step-size sweeps."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .delays import DelayError, DelayModel, delay_model
from .dynamics import ConvergenceReport, Trajectory, simulate
from .graph import GraphError, from_edges
from .spectral import predict_nonuniform


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioFile:
    dm: DelayModel
    c: Optional[float] = None
    W0: Optional[np.ndarray] = None
    max_steps: int = 100_000
    tol: float = 1e-4
    blowup: float = 10.0
    seed: int = 0
    dt: Optional[float] = None
    rendezvous: dict = field(default_factory=dict)
    source: str = "<scenario>"

    def initial_state(self) -> np.ndarray:
        return self.W0 if self.W0 is not None else random_row_stochastic(self.dm.n, self.seed)


@dataclass
class SweepSpec:
    cs: list
    scenario: ScenarioFile
    out_dir: Optional[Path] = None

    def __post_init__(self):
        if not self.cs:
            raise ScenarioError("sweep needs at least one step size")
        if any(c <= 0 for c in self.cs) or any(b <= a for a, b in zip(self.cs, self.cs[1:])):
            raise ScenarioError("sweep step sizes must be positive and strictly increasing")


def random_row_stochastic(n: int, seed: int) -> np.ndarray:
    R = np.random.default_rng(seed).random((n, n))
    return R / R.sum(axis=1, keepdims=True)


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return 1


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioFile:
    """Parse scenario JSON; every error message starts with ``source:line:``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None

    def fail(key, msg):
        raise ScenarioError(f"{source}:{_line_of(text, key)}: {msg}")

    if not isinstance(raw, dict):
        fail("", "top level must be an object")
    for key in ("graph", "tau"):
        if key not in raw:
            fail(key, f"missing required field '{key}'")
    gspec = raw["graph"]
    if not isinstance(gspec, dict) or "n" not in gspec or "edges" not in gspec:
        fail("graph", "graph must be {\"n\": int, \"edges\": [[i, j], ...]}")
    try:
        g = from_edges(gspec["n"], gspec["edges"])
    except (GraphError, TypeError, ValueError) as exc:
        fail("edges", f"bad graph: {exc}")
    try:
        dm = delay_model(g, np.array(raw["tau"]))
    except (DelayError, TypeError, ValueError) as exc:
        fail("tau", f"bad delay matrix: {exc}")

    sc = ScenarioFile(dm=dm, source=source)
    if raw.get("c") is not None:
        sc.c = _positive(raw["c"], "c", fail)
    if raw.get("W0") is not None:
        try:
            W0 = np.array(raw["W0"], dtype=float)
        except (TypeError, ValueError):
            fail("W0", "W0 must be a numeric matrix")
        if W0.shape != (g.n, g.n) or not np.all(np.isfinite(W0)):
            fail("W0", f"W0 must be a finite {g.n}x{g.n} matrix, got shape {W0.shape}")
        sc.W0 = W0
    if "max_steps" in raw:
        if not isinstance(raw["max_steps"], int) or raw["max_steps"] < 1:
            fail("max_steps", "max_steps must be a positive integer")
        sc.max_steps = raw["max_steps"]
    if "tol" in raw:
        sc.tol = _positive(raw["tol"], "tol", fail)
    if "blowup" in raw:
        sc.blowup = _positive(raw["blowup"], "blowup", fail)
        if sc.blowup <= 1:
            fail("blowup", "blowup must exceed 1")
    if "seed" in raw:
        if not isinstance(raw["seed"], int):
            fail("seed", "seed must be an integer")
        sc.seed = raw["seed"]
    if raw.get("dt") is not None:
        sc.dt = _positive(raw["dt"], "dt", fail)
    if "rendezvous" in raw:
        if not isinstance(raw["rendezvous"], dict):
            fail("rendezvous", "rendezvous must be an object")
        sc.rendezvous = raw["rendezvous"]
    return sc


def _positive(value, key, fail) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0 or not math.isfinite(value):
        fail(key, f"{key} must be a positive number, got {value!r}")
    return float(value)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}:0: cannot read scenario: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def fmt(x) -> str:
    """17 significant digits, '.' decimal point; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every real written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "null" if not math.isfinite(obj) else fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8", newline="\n")


def _write_rows(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) else v for v in row])


TRAJECTORY_HEADER = ["step", "agent", "component", "value"]
RENDEZVOUS_HEADER = ["t", "agent", "x", "y", "theta", "ref_x", "ref_y", "v", "omega"]


def trajectory_rows(traj: Trajectory):
    for k, W in traj.snapshots:
        for i in range(W.shape[0]):
            for j in range(W.shape[1]):
                yield (k, i + 1, j + 1, W[i, j])


def emit_trajectory_csv(traj: Trajectory, path) -> None:
    _write_rows(path, TRAJECTORY_HEADER, trajectory_rows(traj))


def emit_rendezvous_csv(trace, path) -> None:
    _write_rows(path, RENDEZVOUS_HEADER, trace.rows)


def report_json(report: ConvergenceReport) -> dict:
    return {
        "converged": report.converged,
        "convergence_step": report.convergence_step,
        "diverged": report.diverged,
        "consensus": None if report.consensus_vector is None else report.consensus_vector.tolist(),
        "spread_final": report.spread_final.tolist(),
    }


@dataclass
class SweepRow:
    c: float
    report: ConvergenceReport
    predicted: np.ndarray
    dt: Optional[float] = None

    @property
    def error(self) -> Optional[float]:
        if self.report.consensus_vector is None:
            return None
        return float(np.abs(self.report.consensus_vector - self.predicted).max())

    @property
    def convergence_time(self) -> Optional[float]:
        if self.dt is None or self.report.convergence_step is None:
            return None
        return self.report.convergence_step * self.dt


def sweep(spec: SweepSpec) -> list:
    """One simulation per step size, each paired with the closed-form consensus value."""
    sc = spec.scenario
    W0 = sc.initial_state()
    rows = []
    for c in spec.cs:
        traj, report = simulate(W0, sc.dm, c, max_steps=sc.max_steps, tol=sc.tol, blowup=sc.blowup)
        rows.append(SweepRow(c=c, report=report, predicted=predict_nonuniform(sc.dm, c, W0).alpha, dt=sc.dt))
        if spec.out_dir is not None:
            emit_trajectory_csv(traj, Path(spec.out_dir) / f"trajectory_c{c:g}.csv")
    if spec.out_dir is not None:
        emit_sweep(rows, spec.out_dir)
    return rows


def emit_sweep(rows: list, out_dir) -> None:
    out_dir = Path(out_dir)
    p = len(rows[0].predicted)
    header = (["c", "converged", "diverged", "convergence_step", "convergence_time"]
              + [f"alpha_{j}" for j in range(1, p + 1)]
              + [f"predicted_{j}" for j in range(1, p + 1)] + ["max_abs_error"])
    table = []
    for r in rows:
        alpha = r.report.consensus_vector
        table.append([r.c, str(r.report.converged).lower(), str(r.report.diverged).lower(),
                      "" if r.report.convergence_step is None else r.report.convergence_step,
                      "" if r.convergence_time is None else r.convergence_time]
                     + (["" for _ in range(p)] if alpha is None else list(alpha))
                     + list(r.predicted) + ["" if r.error is None else r.error])
    _write_rows(out_dir / "sweep.csv", header, table)
    emit_json([{"c": r.c, **report_json(r.report), "predicted": r.predicted.tolist(),
                "convergence_time": r.convergence_time, "max_abs_error": r.error} for r in rows],
              out_dir / "sweep.json")
