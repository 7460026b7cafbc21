"""Undirected graphs, their degree/Laplacian views, and a dense Jacobi eigensolver.

Agents are numbered 1..n at the API boundary and 0..n-1 internally.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graph input."""


class EigenError(ValueError):
    """Raised when the symmetric eigensolver rejects its input or fails to converge."""


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset  # of (i, j) with 1 <= i < j <= n

    @property
    def adjacency(self) -> np.ndarray:
        H = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            H[i - 1, j - 1] = 1
            H[j - 1, i - 1] = 1
        return H

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def degree_matrix(self) -> np.ndarray:
        return np.diag(self.degrees)

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    avg_degree: Fraction
    edge_count: int
    connected: bool
    regular_degree: Optional[int]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal
    sweeps: int


def from_edges(n: int, edges: Iterable) -> Graph:
    """Build a canonical graph from 1-based vertex pairs; duplicates collapse."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise GraphError(f"need at least 2 agents, got n={n!r}")
    canon = set()
    for pair in edges:
        i, j = (int(v) for v in pair)
        if i == j:
            raise GraphError(f"self-loop at vertex {i}")
        for v in (i, j):
            if not 1 <= v <= n:
                raise GraphError(f"vertex {v} out of range 1..{n}")
        canon.add((min(i, j), max(i, j)))
    return Graph(int(n), frozenset(canon))


def complete(n: int) -> Graph:
    return from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs n >= 3")
    return from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])


def path(n: int) -> Graph:
    return from_edges(n, [(i, i + 1) for i in range(1, n)])


def star(n: int) -> Graph:
    """Star with vertex 1 at the center."""
    return from_edges(n, [(1, j) for j in range(2, n + 1)])


def hypercube(dim: int) -> Graph:
    n = 2 ** dim
    edges = [(v + 1, (v ^ (1 << b)) + 1) for v in range(n) for b in range(dim) if v < v ^ (1 << b)]
    return from_edges(n, edges)


def is_connected(g: Graph) -> bool:
    H = g.adjacency
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(H[u]):
            if v not in seen:
                seen.add(int(v))
                queue.append(int(v))
    return len(seen) == g.n


def graph_stats(g: Graph) -> GraphStats:
    deg = g.degrees
    m = len(g.edges)
    regular = int(deg[0]) if np.all(deg == deg[0]) else None
    return GraphStats(
        max_degree=int(deg.max()),
        avg_degree=Fraction(2 * m, g.n),
        edge_count=m,
        connected=is_connected(g),
        regular_degree=regular,
    )


def laplacian(g: Graph) -> np.ndarray:
    """Integer Laplacian L = Δ - H, so L @ 1 is exactly zero."""
    return g.degree_matrix - g.adjacency


def symmetric_eigen(M, tol: float = 1e-12, max_sweeps: int = 100) -> SpectralDecomposition:
    """Cyclic Jacobi diagonalization of a dense symmetric matrix.

    Sweeps over all off-diagonal pairs, annihilating each with a plane
    rotation, until the off-diagonal Frobenius mass drops below
    ``tol * ||M||_F``. Eigenvalues come back ascending with matching
    eigenvector columns.
    """
    if tol <= 0:
        raise EigenError("tol must be positive")
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EigenError(f"expected a square matrix, got shape {A.shape}")
    norm = np.linalg.norm(A)
    if not np.isfinite(norm):
        raise EigenError("matrix has non-finite entries")
    if np.abs(A - A.T).max(initial=0.0) > tol * max(norm, 1.0):
        raise EigenError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    target = tol * norm

    def off_mass(X):
        return np.linalg.norm(X - np.diag(np.diag(X)))

    sweeps = 0
    while off_mass(A) > target:
        if sweeps >= max_sweeps:
            raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                # rotate rows then columns p, q
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = cs * rp - sn * rq
                A[q, :] = sn * rp + cs * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = cs * cp - sn * cq
                A[:, q] = sn * cp + cs * cq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = cs * vp - sn * vq
                V[:, q] = sn * vp + cs * vq

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(eigenvalues=w[order], eigenvectors=V[:, order], sweeps=sweeps)
