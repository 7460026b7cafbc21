"""Augmented delay system, its conserved quantity, closed-form consensus values,
and the per-mode characteristic-root stability check for uniform delays."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .delays import DelayModel, delay_aggregates, uniform
from .dynamics import StateHistory
from .graph import Graph, graph_stats, laplacian, symmetric_eigen

UNIT_ROOT_TOL = 1e-8
ROOT_RESIDUAL_TOL = 1e-10


class SpectralError(ValueError):
    pass


class RootFindingError(SpectralError):
    def __init__(self, message, roots=None, residuals=None):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    A: np.ndarray
    n: int
    tau_max: int
    c: float

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class LeftEigenvector:
    v: np.ndarray
    beta: float = 1.0


@dataclass(frozen=True, eq=False)
class ConsensusPrediction:
    alpha: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class RoucheBound:
    value: float
    heuristic: bool  # graph is not regular, so the per-mode reduction is approximate

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class ModeAnalysis:
    lambda_L: float
    delta: float
    coeffs: np.ndarray
    roots: np.ndarray

    @property
    def h(self) -> float:
        return self.delta - self.lambda_L

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.roots)


@dataclass(frozen=True, eq=False)
class ModeStabilityReport:
    c: float
    d: int
    regular: bool
    modes: tuple
    stable: bool
    unit_roots: int

    def to_json(self) -> dict:
        return {
            "c": self.c,
            "d": self.d,
            "regular": self.regular,
            "stable": self.stable,
            "unit_roots": self.unit_roots,
            "modes": [
                {
                    "lambda_L": float(m.lambda_L),
                    "delta_i": float(m.delta),
                    "roots": [{"re": float(r.real), "im": float(r.imag), "mag": float(abs(r))}
                              for r in m.roots],
                }
                for m in self.modes
            ],
        }


def augmented_matrix(dm: DelayModel, c: float) -> AugmentedSystem:
    """Companion-style transition matrix acting on [W(k); W(k-1); ...; W(k-tau_max)]."""
    if c <= 0:
        raise SpectralError(f"step size must be positive, got {c}")
    n, T = dm.n, dm.tau_max
    N = n * (T + 1)
    A = np.zeros((N, N))
    A[:n, :n] = np.eye(n) - c * dm.graph.degree_matrix
    for m, Hm in dm.lags():
        A[:n, m * n:(m + 1) * n] = c * Hm
    A[n:, :N - n] = np.eye(N - n)
    A.setflags(write=False)
    return AugmentedSystem(A=A, n=n, tau_max=T, c=float(c))


def left_eigenvector(dm: DelayModel, c: float) -> LeftEigenvector:
    """Row vector v with v A = v; block m >= 1 is c * 1^T (H_m + ... + H_tau_max)."""
    if c <= 0:
        raise SpectralError(f"step size must be positive, got {c}")
    n, T = dm.n, dm.tau_max
    # incoming edge count per agent with delay >= m, m = 1..T
    tail = [(dm.tau >= m).sum(axis=0) for m in range(1, T + 1)]
    v = np.concatenate([np.ones(n)] + [c * t for t in tail])
    A = augmented_matrix(dm, c).A
    err = np.abs(v @ A - v).max()
    if err > 1e-12 * max(1.0, np.abs(v).max()):
        raise SpectralError(f"left eigenvector check failed: |vA - v| = {err:.3e}")
    v.setflags(write=False)
    return LeftEigenvector(v=v)


def conserved_quantity(v: LeftEigenvector, h: StateHistory, j: int) -> float:
    z = h.stacked_column(j)
    if z.shape != v.v.shape:
        raise SpectralError(f"history of length {z.size} does not match eigenvector of length {v.v.size}")
    return float(v.v @ z)


def _weighted_prediction(psi, total, c, n, W0) -> ConsensusPrediction:
    weights = (1.0 + c * psi) / (n + 2.0 * c * total)
    W = np.asarray(W0, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != n:
        raise SpectralError(f"initial state must have {n} rows, got {W.shape[0]}")
    return ConsensusPrediction(alpha=weights @ W, weights=weights)


def predict_uniform(g: Graph, d: int, c: float, W0) -> ConsensusPrediction:
    """Consensus value for a uniform delay d: weights (1 + c d deg(i)) / (n + 2 c d |E|)."""
    if d < 1 or c <= 0:
        raise SpectralError("need d >= 1 and c > 0")
    psi = d * g.degrees
    return _weighted_prediction(psi, d * len(g.edges), c, g.n, W0)


def predict_nonuniform(dm: DelayModel, c: float, W0) -> ConsensusPrediction:
    """Consensus value for per-link delays: weights (1 + c psi(i)) / (n + 2 c sum_E tau)."""
    if c <= 0:
        raise SpectralError(f"step size must be positive, got {c}")
    agg = delay_aggregates(dm)
    return _weighted_prediction(agg.psi, agg.total_edge_delay, c, dm.n, W0)


def rouche_bound(g: Graph, d: int) -> RoucheBound:
    """min(1 / (d * avg_degree), 2 / max_degree); exact only for regular graphs."""
    if d < 1:
        raise SpectralError(f"delay must be >= 1, got {d}")
    st = graph_stats(g)
    bound = min(Fraction(1) / (d * st.avg_degree), Fraction(2, st.max_degree))
    return RoucheBound(value=float(bound), heuristic=st.regular_degree is None)


def mode_polynomial(delta_i: float, lambda_iL: float, c: float, d: int) -> np.ndarray:
    """Coefficients, highest power first, of x^(d+1) - (1 - c delta) x^d - c (delta - lambda_L)."""
    if d < 1:
        raise SpectralError(f"delay must be >= 1, got {d}")
    coeffs = np.zeros(d + 2)
    coeffs[0] = 1.0
    coeffs[1] = -(1.0 - c * delta_i)
    coeffs[-1] = -c * (delta_i - lambda_iL)
    return coeffs


def polynomial_roots(coeffs, max_iter: int = 500) -> np.ndarray:
    """All roots of a monic real polynomial by Durand-Kerner simultaneous iteration.

    Starts on a circle enclosing every root, rotated by an irrational angle
    so conjugate pairs are not seeded symmetrically.
    """
    a = np.asarray(coeffs, dtype=complex)
    deg = a.size - 1
    if deg < 1:
        raise SpectralError("polynomial degree must be >= 1")
    if a[0] != 1:
        raise SpectralError(f"polynomial must be monic, leading coefficient is {a[0]}")
    radius = max(1.0, 1.0 + np.abs(a[1:]).max())
    z = radius * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + (np.sqrt(2) - 1)))
    for _ in range(max_iter):
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        delta = np.polyval(a, z) / diff.prod(axis=1)
        z = z - delta
        if np.all(np.abs(delta) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))):
            break
    residuals = np.abs(np.polyval(a, z))
    if not np.all(residuals <= ROOT_RESIDUAL_TOL * (1.0 + np.abs(z)) ** deg):
        raise RootFindingError(f"Durand-Kerner did not converge in {max_iter} iterations",
                               roots=z, residuals=residuals)
    z = np.where(np.abs(z.imag) <= 1e-14 * (1.0 + np.abs(z)), z.real + 0j, z)
    order = np.lexsort((np.angle(z), -np.abs(z)))
    return z[order]


def uniform_mode_stability(g: Graph, d: int, c: float) -> ModeStabilityReport:
    """Per-Laplacian-mode characteristic roots for uniform delay d.

    Mode i uses delta_i = v_i^T Δ v_i. This decouples exactly on regular graphs
    and is the diagonal approximation otherwise (``regular`` flags which).
    Stable means the zero mode has exactly one root at 1 and every other root,
    in every mode, lies strictly inside the unit circle.
    """
    if c <= 0:
        raise SpectralError(f"step size must be positive, got {c}")
    st = graph_stats(g)
    if not st.connected:
        raise SpectralError("graph is disconnected")
    L = laplacian(g)
    eig = symmetric_eigen(L)
    Delta = g.degree_matrix
    modes = []
    for i in range(g.n):
        vi = eig.eigenvectors[:, i]
        lam = float(eig.eigenvalues[i])
        if i == 0:
            lam = 0.0  # connected: the zero eigenvalue is exact
        delta = float(vi @ Delta @ vi)
        coeffs = mode_polynomial(delta, lam, c, d)
        modes.append(ModeAnalysis(lambda_L=lam, delta=delta, coeffs=coeffs, roots=polynomial_roots(coeffs)))

    inside = 1.0 - UNIT_ROOT_TOL
    first = modes[0].roots
    at_one = np.abs(first - 1.0) <= UNIT_ROOT_TOL
    unit_roots = int(at_one.sum())
    stable = (
        unit_roots == 1
        and bool(np.all(np.abs(first[~at_one]) < inside))
        and all(np.all(m.magnitudes < inside) for m in modes[1:])
    )
    return ModeStabilityReport(c=float(c), d=int(d), regular=st.regular_degree is not None,
                               modes=tuple(modes), stable=stable, unit_roots=unit_roots)
