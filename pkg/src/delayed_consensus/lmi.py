"""Lyapunov certificates for the augmented delay system.

Consensus only requires contraction on the disagreement subspace {1}^⊥, so
every test here removes the all-ones direction first. Feasibility of the
strict Lyapunov LMI on the reduced matrix A_r is decided in two stages:

1. the fixed block-Laplacian candidate P (cheap, sufficient, often fails);
2. the Stein series sum_m (A_r^m)^T A_r^m, which converges iff rho(A_r) < 1,
   i.e. iff some P > 0 with A_r^T P A_r - P < 0 exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .delays import DelayModel
from .graph import Graph, laplacian, symmetric_eigen
from .spectral import AugmentedSystem, augmented_matrix


class LMIError(ValueError):
    pass


class InconclusiveError(LMIError):
    """The series neither converged nor blew past the growth cap."""


class BracketError(LMIError):
    pass


class MonotonicityError(LMIError):
    pass


@dataclass(frozen=True, eq=False)
class ConsensusProjector:
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class LyapunovCandidate:
    P: np.ndarray
    delta: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    method: str  # "candidate-P" or "series"
    witness: dict

    def to_json(self, c: float) -> dict:
        return {"c": c, "feasible": self.feasible, "method": self.method, "witness": self.witness}


@dataclass
class StepSizeCertificate:
    c_max: float
    tol: float
    probes: list = field(default_factory=list)  # (c, FeasibilityVerdict) in evaluation order
    brackets: list = field(default_factory=list)  # (lo, hi) after each halving

    def to_json(self) -> dict:
        return {
            "c_max": self.c_max,
            "tol": self.tol,
            "probes": [v.to_json(c) for c, v in self.probes],
        }


def consensus_projector(N: int) -> ConsensusProjector:
    if N < 2:
        raise LMIError(f"projector dimension must be >= 2, got {N}")
    return ConsensusProjector(Q=np.eye(N) - np.full((N, N), 1.0 / N))


def lyapunov_candidate(g: Graph, tau_max: int, delta: float) -> LyapunovCandidate:
    """Block-diagonal P with tau_max + 1 copies of L + delta I."""
    if delta <= 0:
        raise LMIError(f"delta must be positive for P to be positive definite, got {delta}")
    block = laplacian(g) + delta * np.eye(g.n)
    return LyapunovCandidate(P=np.kron(np.eye(tau_max + 1), block), delta=float(delta))


def lyapunov_difference(A: AugmentedSystem, P: LyapunovCandidate, Q: ConsensusProjector) -> np.ndarray:
    """M = A^T Q P Q A - Q P Q, symmetrized."""
    if not (A.A.shape == P.P.shape == Q.Q.shape):
        raise LMIError(f"shape mismatch: A {A.A.shape}, P {P.P.shape}, Q {Q.Q.shape}")
    QPQ = Q.Q @ P.P @ Q.Q
    M = A.A.T @ QPQ @ A.A - QPQ
    return 0.5 * (M + M.T)


def disagreement_basis(N: int) -> np.ndarray:
    """Orthonormal N x (N-1) basis of {1}^⊥ from the Householder reflector taking 1/sqrt(N) to -e_1."""
    if N < 2:
        raise LMIError(f"dimension must be >= 2, got {N}")
    u = np.full(N, 1.0 / np.sqrt(N))
    u[0] += 1.0
    R = np.eye(N) - 2.0 * np.outer(u, u) / (u @ u)
    return R[:, 1:]


def disagreement_reduction(A: AugmentedSystem) -> np.ndarray:
    """A_r = B^T A B; its spectrum is that of A with one eigenvalue 1 removed."""
    N = A.dim
    row_err = np.abs(A.A @ np.ones(N) - 1.0).max()
    if row_err > 1e-12 * max(1.0, np.abs(A.A).max()):
        raise LMIError(f"transition matrix rows do not sum to 1 (error {row_err:.3e})")
    B = disagreement_basis(N)
    return B.T @ A.A @ B


def _series_test(Ar: np.ndarray, eps: float, growth: float, max_doublings: int) -> FeasibilityVerdict:
    # S_k = sum_{m < 2^k} (Ar^m)^T Ar^m, built by squaring: S <- S + G^T S G, G <- G G.
    S = np.eye(Ar.shape[0])
    G = Ar.copy()
    for k in range(1, max_doublings + 1):
        inc = G.T @ S @ G
        S = S + inc
        terms = 2 ** k
        s_norm = np.linalg.norm(S)
        if not np.isfinite(s_norm) or s_norm > growth:
            return FeasibilityVerdict(False, "series", {
                "terms": terms, "norm": float(s_norm) if np.isfinite(s_norm) else None,
                "rho_estimate": _rho_estimate(G, terms // 2)})
        if np.linalg.norm(inc) <= eps * s_norm:
            return FeasibilityVerdict(True, "series", {
                "terms": terms, "norm": float(s_norm), "rho_estimate": _rho_estimate(G, terms // 2)})
        G = G @ G
    raise InconclusiveError(f"series undecided after {2 ** max_doublings} terms")


def _rho_estimate(G: np.ndarray, power: int) -> float:
    # Gelfand: ||A^p||^(1/p) -> rho(A)
    nrm = np.linalg.norm(G, 2) if np.all(np.isfinite(G)) else np.inf
    if nrm == 0.0:
        return 0.0
    if not np.isfinite(nrm):
        return float("inf")
    return float(np.exp(np.log(nrm) / power))


def lmi_feasible(
    dm: DelayModel,
    c: float,
    delta: float = 1e-6,
    eps: float = 1e-10,
    growth: float = 1e12,
    max_doublings: int = 60,
) -> FeasibilityVerdict:
    if c <= 0 or delta <= 0 or eps <= 0:
        raise LMIError("need c > 0, delta > 0, eps > 0")
    A = augmented_matrix(dm, c)
    N = A.dim
    P = lyapunov_candidate(dm.graph, dm.tau_max, delta)
    M = lyapunov_difference(A, P, consensus_projector(N))
    B = disagreement_basis(N)
    top = float(symmetric_eigen(B.T @ M @ B).eigenvalues[-1])
    if top < -eps * max(1.0, np.linalg.norm(M)):
        return FeasibilityVerdict(True, "candidate-P", {"max_eigenvalue": top})
    verdict = _series_test(disagreement_reduction(A), eps, growth, max_doublings)
    verdict.witness["candidate_max_eigenvalue"] = top
    return verdict


def max_step_size(
    dm: DelayModel,
    c_lo: float,
    c_hi: float,
    tol: float,
    **lmi_kwargs,
) -> StepSizeCertificate:
    """Bisect for the largest step size whose LMI is feasible.

    Needs a feasible ``c_lo`` and an infeasible ``c_hi``. After the search,
    three points between ``c_lo`` and the result are re-probed; any
    infeasible one means feasibility is not monotone in c and raises.
    """
    if tol <= 0 or not 0 < c_lo < c_hi:
        raise BracketError("need 0 < c_lo < c_hi and tol > 0")
    cert = StepSizeCertificate(c_max=c_lo, tol=tol)

    def probe(c):
        v = lmi_feasible(dm, c, **lmi_kwargs)
        cert.probes.append((c, v))
        return v.feasible

    if not probe(c_lo):
        raise BracketError(f"lower end c={c_lo} is not feasible")
    if probe(c_hi):
        raise BracketError(f"upper end c={c_hi} is feasible")
    lo, hi = c_lo, c_hi
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
        cert.brackets.append((lo, hi))
    cert.c_max = lo
    for frac in (0.25, 0.5, 0.75):
        c = c_lo + frac * (lo - c_lo)
        if c > c_lo and not probe(c):
            raise MonotonicityError(f"c={c} below certified c_max={lo} is infeasible")
    return cert
