"""Cyclic Jacobi eigensolver for small dense symmetric matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroSpectrum, NotSymmetric, TooLarge

MAX_DIM = 2048
SYMMETRY_TOL = 1e-9
ZERO_TOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    zero_tolerance: float = ZERO_TOL

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1]) if len(self.eigenvalues) else 0.0


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Chess-tournament schedule: n-1 rounds (n even) of disjoint index pairs."""
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        p = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        p = [(min(a, b), max(a, b)) for a, b in p if a < n and b < n]
        if p:
            arr = np.array(p)
            rounds.append((arr[:, 0], arr[:, 1]))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigenvalues(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of symmetric ``M`` by cyclic Jacobi rotations.

    Each round applies a set of disjoint rotations at once; a sweep covers
    every off-diagonal pair.  Stops once the off-diagonal Frobenius norm drops
    below ``tol * ‖M‖_F``.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    if n < 2:
        return np.diag(A).copy()
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n)
    target = tol * scale
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off < target:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 0.0
            if not np.any(active):
                continue
            app, aqq = A[p, p], A[q, q]
            with np.errstate(over="ignore", divide="ignore"):
                theta = (aqq - app) / (2.0 * np.where(active, apq, 1.0))
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- A R (columns), then Rᵀ A (rows)
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
    return np.sort(np.diag(A))


def eigenvalues_sym(M, zero_tolerance: float = ZERO_TOL) -> Spectrum:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"matrix of shape {M.shape} is not square")
    if M.shape[0] > MAX_DIM:
        raise TooLarge(f"dimension {M.shape[0]} exceeds {MAX_DIM}")
    if M.size and np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
        raise NotSymmetric(f"asymmetry {np.max(np.abs(M - M.T)):.3g} exceeds {SYMMETRY_TOL}")
    sym = 0.5 * (M + M.T)
    return Spectrum(jacobi_eigenvalues(sym), zero_tolerance)


def lambda_star(S: Spectrum) -> float:
    """Contraction factor max (1 - λ)² over eigenvalues above the zero tolerance."""
    lam = np.asarray(S.eigenvalues)
    nonzero = lam[lam > S.zero_tolerance]
    if not len(nonzero):
        raise AllZeroSpectrum("no eigenvalue above the zero tolerance")
    return float(np.max((1.0 - nonzero) ** 2))
