"""Unicycle robots tracking delayed-consensus reference points.

Consensus runs open loop on the initial (x, y) positions; each robot chases
its own row of the consensus state with a saturated-speed, PD-heading
controller and explicit Euler kinematics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .delays import DelayModel
from .dynamics import _Recursion, column_spread, init_history
from .spectral import predict_nonuniform


# closer than this the bearing to the reference is rounding noise
ON_TARGET = 1e-9


class RendezvousError(ValueError):
    pass


class ConsensusDivergence(RendezvousError):
    pass


def wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class ControllerGains:
    v_max: float = 0.3
    k_dist: float = 2.0
    kp: float = 2.0
    kd: float = 0.1

    def __post_init__(self):
        if min(self.v_max, self.k_dist, self.kp, self.kd) <= 0:
            raise RendezvousError("controller gains must be strictly positive")


@dataclass(frozen=True)
class RendezvousScenario:
    dm: DelayModel
    c: float
    poses: tuple
    gains: ControllerGains = ControllerGains()
    dt: float = 0.02
    consensus_stride: int = 1
    blowup: float = 10.0

    def __post_init__(self):
        if self.dt <= 0 or self.consensus_stride < 1:
            raise RendezvousError("need dt > 0 and consensus_stride >= 1")


@dataclass
class SwarmState:
    t: float
    step: int
    poses: list
    frames: list  # consensus history on the (x, y) columns, newest first
    prev_errors: list
    consensus_steps: int = 0


@dataclass
class RendezvousTrace:
    rows: list = field(default_factory=list)  # (t, agent, x, y, theta, ref_x, ref_y, v, omega)
    references: list = field(default_factory=list)  # reference matrix after each consensus update
    predicted: np.ndarray = None
    achieved: np.ndarray = None
    terminal_errors: np.ndarray = None
    final_spread: float = None
    success: bool = False

    def summary(self) -> dict:
        return {
            "predicted": self.predicted.tolist(),
            "achieved": self.achieved.tolist(),
            "terminal_error": self.terminal_errors.tolist(),
            "final_spread": self.final_spread,
            "success": self.success,
        }


def initial_positions(scenario: RendezvousScenario) -> np.ndarray:
    return np.array([[p.x, p.y] for p in scenario.poses], dtype=float)


def init_swarm(scenario: RendezvousScenario) -> SwarmState:
    n = scenario.dm.n
    if len(scenario.poses) != n:
        raise RendezvousError(f"scenario has {len(scenario.poses)} poses for {n} agents")
    h = init_history(initial_positions(scenario), scenario.dm)
    poses = list(scenario.poses)
    refs = h.current
    errors = [_heading_error(p, refs[i]) for i, p in enumerate(poses)]
    return SwarmState(t=0.0, step=0, poses=poses, frames=list(h.frames), prev_errors=errors)


def _heading_error(pose: Pose, ref) -> float:
    dx, dy = ref[0] - pose.x, ref[1] - pose.y
    if math.hypot(dx, dy) <= ON_TARGET:
        return 0.0
    return wrap_angle(math.atan2(dy, dx) - pose.theta)


def controller(pose: Pose, ref, gains: ControllerGains, prev_heading_error: float, dt: float):
    """Return (v, omega): v = v_max tanh(k_dist * dist), omega = PD on the heading error."""
    if dt <= 0:
        raise RendezvousError("dt must be positive")
    dist = math.hypot(ref[0] - pose.x, ref[1] - pose.y)
    v = gains.v_max * math.tanh(gains.k_dist * dist)
    e = _heading_error(pose, ref)
    # difference taken on the circle so the derivative does not spike at ±pi
    omega = gains.kp * e + gains.kd * wrap_angle(e - prev_heading_error) / dt
    return v, omega


def step_swarm(state: SwarmState, scenario: RendezvousScenario, rec: _Recursion = None,
               trace: RendezvousTrace = None) -> SwarmState:
    rec = rec or _Recursion(scenario.dm, scenario.c)
    frames = state.frames
    consensus_steps = state.consensus_steps
    if state.step % scenario.consensus_stride == 0:
        W = rec.next_frame(frames)
        if not np.all(np.isfinite(W)):
            raise ConsensusDivergence(f"consensus state non-finite at t={state.t:.3f}")
        frames = [W] + frames[:-1]
        consensus_steps += 1
        if trace is not None:
            trace.references.append(W)
    refs = frames[0]
    dt = scenario.dt
    poses, errors = [], []
    for i, p in enumerate(state.poses):
        v, omega = controller(p, refs[i], scenario.gains, state.prev_errors[i], dt)
        errors.append(_heading_error(p, refs[i]))
        q = Pose(p.x + v * math.cos(p.theta) * dt, p.y + v * math.sin(p.theta) * dt, p.theta + omega * dt)
        if not all(map(math.isfinite, (q.x, q.y, q.theta))):
            raise RendezvousError(f"agent {i + 1} pose became non-finite")
        poses.append(q)
        if trace is not None:
            trace.rows.append((state.t, i + 1, p.x, p.y, p.theta, refs[i][0], refs[i][1], v, omega))
    return SwarmState(t=(state.step + 1) * dt, step=state.step + 1, poses=poses, frames=frames,
                      prev_errors=errors, consensus_steps=consensus_steps)


def run_rendezvous(scenario: RendezvousScenario, duration: float, capture_tol: float = 0.05) -> RendezvousTrace:
    """Simulate for ``duration`` seconds; success iff every robot ends within
    ``capture_tol`` of the closed-form rendezvous point."""
    if duration <= 0:
        raise RendezvousError("duration must be positive")
    state = init_swarm(scenario)
    rec = _Recursion(scenario.dm, scenario.c)
    X0 = initial_positions(scenario)
    limit = scenario.blowup * max(column_spread(X0).max(), 1e-12)
    trace = RendezvousTrace()
    steps = int(round(duration / scenario.dt))
    for _ in range(steps):
        state = step_swarm(state, scenario, rec, trace)
        if column_spread(state.frames[0]).max() > limit:
            raise ConsensusDivergence(f"consensus references diverged at t={state.t:.3f} s")
    for i, p in enumerate(state.poses):
        trace.rows.append((state.t, i + 1, p.x, p.y, p.theta, state.frames[0][i][0], state.frames[0][i][1],
                           float("nan"), float("nan")))
    trace.predicted = predict_nonuniform(scenario.dm, scenario.c, X0).alpha
    final = np.array([[p.x, p.y] for p in state.poses])
    trace.achieved = final.mean(axis=0)
    trace.terminal_errors = np.hypot(*(final - trace.predicted).T)
    trace.final_spread = float(column_spread(state.frames[0]).max())
    trace.success = bool(np.all(trace.terminal_errors <= capture_tol))
    return trace
