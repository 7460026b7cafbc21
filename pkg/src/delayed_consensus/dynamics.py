"""Delayed consensus recursion W(k+1) = (I - cΔ)W(k) + c Σ_m H_m W(k-m).

The state is a ring of the current matrix plus its ``tau_max`` predecessors.
Before the first step every slot holds W(0), so a link with delay m reads
the initial condition until step m has passed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .delays import DelayModel


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateHistory:
    frames: tuple  # frames[m] = W(k - m), m = 0..tau_max
    k: int = 0

    @property
    def current(self) -> np.ndarray:
        return self.frames[0]

    def stacked_column(self, j: int) -> np.ndarray:
        """Column j of every frame, newest first (the augmented state z_j(k))."""
        return np.concatenate([F[:, j] for F in self.frames])


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)  # (step, W)
    spread_series: list = field(default_factory=list)  # one array per step, starting at k = 0

    def spreads(self) -> np.ndarray:
        return np.array(self.spread_series)


@dataclass
class ConvergenceReport:
    converged: bool
    convergence_step: Optional[int]
    final_W: np.ndarray
    consensus_vector: Optional[np.ndarray]
    diverged: bool
    steps_run: int
    non_finite: bool = False

    @property
    def spread_final(self) -> np.ndarray:
        return column_spread(self.final_W)


def column_spread(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    return W.max(axis=0) - W.min(axis=0)


def init_history(W0, dm: DelayModel) -> StateHistory:
    W = np.array(W0, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2 or W.shape[0] != dm.n:
        raise DynamicsError(f"initial state must have {dm.n} rows, got shape {np.shape(W0)}")
    if not np.all(np.isfinite(W)):
        raise DynamicsError("initial state has non-finite entries")
    W.setflags(write=False)
    return StateHistory(frames=(W,) * (dm.tau_max + 1), k=0)


class _Recursion:
    """Precomputed coefficient matrices for one (model, c) pair."""

    def __init__(self, dm: DelayModel, c: float):
        if c < 0:
            raise DynamicsError(f"step size must be nonnegative, got {c}")
        self.tau_max = dm.tau_max
        self.self_gain = np.eye(dm.n) - c * dm.graph.degree_matrix
        self.lagged = [(m, c * Hm) for m, Hm in dm.lags()]

    def next_frame(self, frames) -> np.ndarray:
        W = self.self_gain @ frames[0]
        for m, cH in self.lagged:
            W = W + cH @ frames[m]
        return W


def step(h: StateHistory, dm: DelayModel, c: float) -> StateHistory:
    if len(h.frames) != dm.tau_max + 1:
        raise DynamicsError(f"history depth {len(h.frames)} does not match tau_max + 1 = {dm.tau_max + 1}")
    W = _Recursion(dm, c).next_frame(h.frames)
    W.setflags(write=False)
    return StateHistory(frames=(W,) + h.frames[:-1], k=h.k + 1)


def simulate(
    W0,
    dm: DelayModel,
    c: float,
    max_steps: int = 100_000,
    tol: float = 1e-4,
    blowup: float = 10.0,
    stride: int = 1,
    settle_tol: float = 1e-12,
) -> tuple[Trajectory, ConvergenceReport]:
    """Iterate the recursion until consensus, divergence, or ``max_steps``.

    ``convergence_step`` is the first step k whose column spreads are all
    below ``tol`` and stay there for the following ``tau_max`` steps too.
    Once that is established the run keeps going until the spread falls under
    ``settle_tol`` so the reported consensus vector is accurate well beyond
    ``tol``. Divergence means some column spread exceeds ``blowup`` times the
    largest initial spread, or the state stops being finite.
    """
    if tol <= 0 or max_steps < 1 or blowup <= 1 or stride < 1:
        raise DynamicsError("need tol > 0, max_steps >= 1, blowup > 1, stride >= 1")
    h = init_history(W0, dm)
    rec = _Recursion(dm, c)
    window = dm.tau_max + 1
    frames = list(h.frames)

    traj = Trajectory()
    spread = column_spread(frames[0])
    traj.snapshots.append((0, frames[0]))
    traj.spread_series.append(spread)
    limit = blowup * spread.max()

    below_since = 0 if spread.max() < tol else None
    convergence_step = None
    diverged = non_finite = False
    k = 0
    if spread.max() == 0.0:
        convergence_step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while k < max_steps and not (convergence_step is not None and spread.max() <= settle_tol):
            W = rec.next_frame(frames)
            frames.insert(0, W)
            frames.pop()
            k += 1
            spread = column_spread(W)
            traj.spread_series.append(spread)
            if k % stride == 0:
                traj.snapshots.append((k, W))
            if not np.all(np.isfinite(W)):
                diverged = non_finite = True
                break
            if spread.max() > limit:
                diverged = True
                break
            if spread.max() < tol:
                if below_since is None:
                    below_since = k
                if convergence_step is None and k - below_since + 1 >= window:
                    convergence_step = below_since
            else:
                below_since = None
                convergence_step = None

    if traj.snapshots[-1][0] != k:
        traj.snapshots.append((k, frames[0]))
    converged = convergence_step is not None and not diverged
    final = frames[0]
    return traj, ConvergenceReport(
        converged=converged,
        convergence_step=convergence_step if converged else None,
        final_W=final,
        consensus_vector=final.mean(axis=0) if converged else None,
        diverged=diverged,
        steps_run=k,
        non_finite=non_finite,
    )
