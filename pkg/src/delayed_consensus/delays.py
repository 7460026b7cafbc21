"""Per-link integer communication delays attached to an undirected graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, from_edges


class DelayError(ValueError):
    """Raised when a delay matrix does not fit its graph."""


@dataclass(frozen=True, eq=False)
class DelayModel:
    graph: Graph
    tau: np.ndarray  # n x n, read-only int64

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def tau_max(self) -> int:
        return int(self.tau.max())

    def lags(self) -> list:
        """(m, H_m) for every lag m that actually carries an edge."""
        return [(m, lag_adjacency(self, m)) for m in range(1, self.tau_max + 1)
                if np.any(self.tau == m)]

    def to_json(self) -> dict:
        return {"graph": self.graph.to_json(), "tau": self.tau.tolist()}


@dataclass(frozen=True)
class DelayAggregates:
    psi: np.ndarray  # total incoming delay per agent
    total_edge_delay: int  # each undirected edge counted once


def delay_model(g: Graph, tau) -> DelayModel:
    """Validate ``tau`` against ``g``: symmetric, zero diagonal, >= 1 exactly on edges."""
    T = np.asarray(tau)
    if T.shape != (g.n, g.n):
        raise DelayError(f"tau must be {g.n}x{g.n}, got {T.shape}")
    if not np.all(np.isfinite(T)) or not np.all(T == np.round(T)):
        raise DelayError("delays must be integers")
    T = T.astype(np.int64)
    if not np.array_equal(T, T.T):
        i, j = np.argwhere(T != T.T)[0] + 1
        raise DelayError(f"asymmetric delays: tau[{i},{j}]={T[i-1, j-1]} but tau[{j},{i}]={T[j-1, i-1]}")
    if np.any(np.diag(T) != 0):
        i = int(np.flatnonzero(np.diag(T))[0]) + 1
        raise DelayError(f"self-delay tau[{i},{i}] must be 0")
    H = g.adjacency
    bad = np.argwhere((H == 1) & (T < 1))
    if len(bad):
        i, j = bad[0] + 1
        raise DelayError(f"edge ({i},{j}) needs a delay >= 1, got {T[i-1, j-1]}")
    bad = np.argwhere((H == 0) & (T != 0))
    if len(bad):
        i, j = bad[0] + 1
        raise DelayError(f"non-edge ({i},{j}) carries delay {T[i-1, j-1]}")
    if T.max() < 1:
        raise DelayError("graph has no edges")
    T.setflags(write=False)
    return DelayModel(g, T)


def lag_adjacency(dm: DelayModel, m: int) -> np.ndarray:
    """Adjacency restricted to the edges whose delay is exactly ``m``."""
    if not 1 <= m <= dm.tau_max:
        raise DelayError(f"lag {m} outside 1..{dm.tau_max}")
    return (dm.tau == m).astype(np.int64)


def delay_aggregates(dm: DelayModel) -> DelayAggregates:
    psi = dm.tau.sum(axis=1)
    total = int(np.triu(dm.tau).sum())
    return DelayAggregates(psi=psi, total_edge_delay=total)


def uniform(g: Graph, d: int) -> DelayModel:
    if d < 1:
        raise DelayError(f"uniform delay must be >= 1, got {d}")
    return delay_model(g, int(d) * g.adjacency)


FOUR_AGENT_TAU = np.array([
    [0, 7, 1, 5],
    [7, 0, 5, 5],
    [1, 5, 0, 6],
    [5, 5, 6, 0],
])


def four_agent_model() -> DelayModel:
    """K4 with heterogeneous delays 1..7; stable only for small step sizes."""
    g = from_edges(4, [(i, j) for i in range(1, 5) for j in range(i + 1, 5)])
    return delay_model(g, FOUR_AGENT_TAU)
