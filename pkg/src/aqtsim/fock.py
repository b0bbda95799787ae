"""Dense Fock-space oracle for single-mode Gaussian states.

Builds truncated density matrices as ``D(α) R(θ) S(r) ρ_th S(r)† R(θ)† D(α)†``
in an enlarged working space and evaluates the Uhlmann fidelity by
eigendecomposition. Only meant for certifying closed forms at small scale.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, TruncationError
from .gaussian import GaussianState

TAIL_TOL = 1e-8


def _annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def density_matrix(s: GaussianState, dim: int = 40, pad: int = 80) -> np.ndarray:
    """Truncated density matrix of a single-mode Gaussian state."""
    if s.n_modes != 1:
        raise DimensionError("density_matrix supports single-mode states only")
    work = dim + pad
    a = _annihilation(work)
    ad = a.conj().T
    nu = math.sqrt(max(np.linalg.det(s.cov), 1.0))
    w, U = np.linalg.eigh(s.cov / nu)
    r = 0.25 * math.log(w[1] / w[0])
    theta = math.atan2(U[1, 0], U[0, 0])  # direction of the squeezed quadrature
    nbar = (nu - 1) / 2
    k = np.arange(work)
    rho = np.diag(nbar**k / (nbar + 1) ** (k + 1)).astype(complex) if nbar > 0 else np.diag((k == 0).astype(complex))
    sq = expm(0.5 * r * (a @ a - ad @ ad))
    rot = np.diag(np.exp(1j * theta * k))
    alpha = complex(s.mean[0], s.mean[1]) / 2
    disp = expm(alpha * ad - alpha.conjugate() * a)
    G = disp @ rot @ sq
    rho = G @ rho @ G.conj().T
    rho = rho[:dim, :dim]
    tail = 1.0 - np.trace(rho).real
    if tail > TAIL_TOL:
        raise TruncationError(f"tail mass {tail:.2e} outside {dim} levels; try dim={2 * dim}")
    return (rho + rho.conj().T) / 2


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(rho)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def fock_overlap(s1: GaussianState, s2: GaussianState, dim: int = 40) -> float:
    """Uhlmann fidelity ``(Tr √(√ρ₁ ρ₂ √ρ₁))²`` from truncated density matrices."""
    r1 = density_matrix(s1, dim)
    r2 = density_matrix(s2, dim)
    root = _psd_sqrt(r1)
    w = np.linalg.eigvalsh(root @ r2 @ root)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum() ** 2)


def quadrature_moments(rho: np.ndarray):
    """Mean and covariance of ``(Q, P)`` for a truncated density matrix."""
    dim = rho.shape[0]
    a = _annihilation(dim)
    q = a + a.conj().T
    p = -1j * (a - a.conj().T)
    ops = [q, p]
    mean = np.array([np.trace(rho @ o).real for o in ops])
    cov = np.empty((2, 2))
    for i, A in enumerate(ops):
        for j, B in enumerate(ops):
            cov[i, j] = (0.5 * np.trace(rho @ (A @ B + B @ A))).real - mean[i] * mean[j]
    return mean, cov
