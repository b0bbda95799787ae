"""Gaussian states in mean/covariance form.

Quadratures are ``Q = a + a†`` and ``P = -i(a - a†)``, so the vacuum has unit
variance and a coherent state ``|α⟩`` has mean ``(2 Re α, 2 Im α)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NumericalError
from .symplectic import SymplecticMatrix, symplectic_form

PHYSICAL_TOL = 1e-9
SYMMETRY_TOL = 1e-12


def _omega(n_modes: int) -> np.ndarray:
    if n_modes == 0:
        return np.zeros((0, 0))
    return symplectic_form(n_modes)


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise DimensionError(f"mean of length {mean.size} and cov of shape {cov.shape} do not describe modes")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DomainError("state moments must be finite")
        if np.abs(cov - cov.T).max(initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(cov).max(initial=0.0)):
            raise DomainError("covariance matrix is not symmetric")
        cov = (cov + cov.T) / 2
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        """Check ``cov + iΩ ⪰ 0``."""
        if self.n_modes == 0:
            return True
        eig = np.linalg.eigvalsh(self.cov + 1j * _omega(self.n_modes))
        return bool(eig.min() >= -tol)

    def mode(self, k: int) -> "GaussianState":
        """Reduced state of mode ``k``."""
        idx = [k, self.n_modes + k]
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw phase-space points from the Wigner distribution, shape ``(size, 2N)``."""
        w, U = np.linalg.eigh(self.cov)
        L = U * np.sqrt(np.clip(w, 0.0, None))
        return self.mean + rng.standard_normal((size, self.mean.size)) @ L.T


@dataclass(frozen=True)
class AncillaSpec:
    """Squeezed ancilla: squeezing parameter ``xi`` applied to a thermal state ``n_z``."""

    xi: float
    n_z: float = 0.0

    def __post_init__(self):
        if self.xi < 0 or self.n_z < 0:
            raise DomainError(f"need xi >= 0 and n_z >= 0, got xi={self.xi}, n_z={self.n_z}")

    @property
    def nu(self) -> float:
        """Squeezed-quadrature variance ``e^{-2ξ}(2n_z + 1)``."""
        return math.exp(-2 * self.xi) * (2 * self.n_z + 1)

    @property
    def nu_anti(self) -> float:
        return math.exp(2 * self.xi) * (2 * self.n_z + 1)


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def coherent(alphas) -> GaussianState:
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    mean = np.concatenate([2 * alphas.real, 2 * alphas.imag])
    return GaussianState(mean, np.eye(mean.size))


def thermal(nbar) -> GaussianState:
    nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
    if np.any(nbar < 0):
        raise DomainError(f"thermal occupation must be >= 0, got {nbar}")
    var = np.concatenate([2 * nbar + 1, 2 * nbar + 1])
    return GaussianState(np.zeros(var.size), np.diag(var))


def rotation_2x2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def squeezed(spec: AncillaSpec, phase: float = 0.0) -> GaussianState:
    """Single-mode squeezed thermal state; ``cos θ Q + sin θ P`` has variance ``ν``."""
    R = rotation_2x2(phase)
    cov = R.T @ np.diag([spec.nu, spec.nu_anti]) @ R
    return GaussianState(np.zeros(2), cov)


def epr(xi: float) -> GaussianState:
    """Two-mode squeezed vacuum with squeezing parameter ``xi``."""
    if xi < 0:
        raise DomainError(f"squeezing parameter must be >= 0, got {xi}")
    c, s = math.cosh(2 * xi), math.sinh(2 * xi)
    cov = np.array([[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]])
    return GaussianState(np.zeros(4), cov)


_KINDS = {"vacuum": vacuum, "coherent": coherent, "squeezed": squeezed, "thermal": thermal, "epr": epr}


def make_state(kind: str, *args, **kwargs) -> GaussianState:
    """Dispatch to one of the named constructors (``vacuum``, ``coherent``, ...)."""
    try:
        ctor = _KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown state kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    return ctor(*args, **kwargs)


def tensor(*states: GaussianState) -> GaussianState:
    """Product state, modes concatenated in order."""
    qs = [s.mean[: s.n_modes] for s in states]
    ps = [s.mean[s.n_modes:] for s in states]
    N = sum(s.n_modes for s in states)
    cov = np.zeros((2 * N, 2 * N))
    off = 0
    for s in states:
        n = s.n_modes
        idx = list(range(off, off + n)) + list(range(N + off, N + off + n))
        cov[np.ix_(idx, idx)] = s.cov
        off += n
    return GaussianState(np.concatenate(qs + ps), cov)


def apply_symplectic(s: GaussianState, M) -> GaussianState:
    A = M.entries if isinstance(M, SymplecticMatrix) else np.asarray(M, dtype=float)
    if A.shape != s.cov.shape:
        raise DimensionError(f"cannot apply {A.shape} matrix to a {s.n_modes}-mode state")
    return GaussianState(A @ s.mean, A @ s.cov @ A.T)


def displace(s: GaussianState, d) -> GaussianState:
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape != s.mean.shape:
        raise DimensionError(f"displacement of length {d.size} for a {s.n_modes}-mode state")
    return GaussianState(s.mean + d, s.cov)


def condition_on_homodyne(s: GaussianState, quad_index: int, outcome: float, efficiency: float = 1.0):
    """Condition on a homodyne outcome of a single quadrature.

    The detector is modelled as a beam splitter of transmittance ``efficiency``
    mixing in vacuum before an ideal measurement, so the raw outcome is
    ``√η x + √(1-η) v``. The measured mode is removed from the returned state.

    Returns ``(state, (outcome_mean, outcome_var))`` where the pair describes
    the Gaussian distribution of the raw outcome.
    """
    N = s.n_modes
    if not 0 <= quad_index < 2 * N:
        raise DimensionError(f"quadrature index {quad_index} out of range for {N} modes")
    if not 0.0 < efficiency <= 1.0:
        raise DomainError(f"detector efficiency must lie in (0, 1], got {efficiency}")
    k = quad_index % N
    keep = [i for i in range(2 * N) if i % N != k]
    sqrt_eta = math.sqrt(efficiency)
    var_b = efficiency * s.cov[quad_index, quad_index] + (1.0 - efficiency)
    if not var_b > 0:
        raise NumericalError(f"outcome variance {var_b} is not positive")
    mean_b = sqrt_eta * s.mean[quad_index]
    cross = sqrt_eta * s.cov[keep, quad_index]
    gain = cross / var_b
    mean = s.mean[keep] + gain * (outcome - mean_b)
    cov = s.cov[np.ix_(keep, keep)] - np.outer(gain, cross)
    return GaussianState(mean, cov), (float(mean_b), float(var_b))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Williamson eigenvalues of ``cov``; works on stacks of shape ``(..., 2N, 2N)``.

    Uses the Hermitian matrix ``i √σ Ω √σ`` whose eigenvalues are ``±ν_k``.
    """
    cov = np.asarray(cov, dtype=float)
    N = cov.shape[-1] // 2
    w, U = np.linalg.eigh(cov)
    if np.any(w < -PHYSICAL_TOL):
        raise DomainError("covariance matrix is not positive semidefinite")
    root = (U * np.sqrt(np.clip(w, 0.0, None))[..., None, :]) @ np.swapaxes(U, -1, -2)
    K = 1j * root @ _omega(N) @ root
    ev = np.linalg.eigvalsh(K)
    return ev[..., N:]


def _g(x):
    x = np.asarray(x, dtype=float)
    out = (x + 1) * np.log2(x + 1)
    pos = x > 0
    out[pos] -= x[pos] * np.log2(x[pos])
    return out


def entropy_from_cov(cov) -> np.ndarray:
    """Von Neumann entropy in bits (vectorized over leading axes)."""
    nus = symplectic_eigenvalues(cov)
    # round-off in the eigenvalues grows with the covariance scale
    scale = np.maximum(1.0, np.abs(np.asarray(cov)).max(axis=(-2, -1)))[..., None]
    if np.any(nus < 1 - PHYSICAL_TOL * scale):
        raise DomainError(f"unphysical covariance: symplectic eigenvalue {nus.min():.6g} < 1")
    nus = np.maximum(nus, 1.0)
    return _g((nus - 1) / 2).sum(axis=-1)


def entropy(s: GaussianState) -> float:
    if s.n_modes == 0:
        return 0.0
    return float(entropy_from_cov(s.cov))


def fidelity_same_dim(s1: GaussianState, s2: GaussianState) -> float:
    """Uhlmann fidelity (squared-overlap convention) of two single-mode states."""
    if s1.n_modes != 1 or s2.n_modes != 1:
        raise DimensionError("fidelity_same_dim supports single-mode states only")
    for s in (s1, s2):
        if not s.is_physical():
            raise DomainError("fidelity requires physical states")
    tot = s1.cov + s2.cov
    Delta = np.linalg.det(tot)
    delta = max(np.linalg.det(s1.cov) - 1, 0.0) * max(np.linalg.det(s2.cov) - 1, 0.0)
    d = s1.mean - s2.mean
    pref = 2.0 / (math.sqrt(Delta + delta) - math.sqrt(delta))
    return float(min(1.0, pref * math.exp(-0.5 * d @ np.linalg.solve(tot, d))))
