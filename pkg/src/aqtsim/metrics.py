"""Figures of merit for single-mode Gaussian channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionError, DomainError
from .gaussian import entropy_from_cov
from .transducer import BeamSplitter, EffectiveChannel, TwoModeSqueezer, dqt_channel

FIDELITY_THRESHOLD = 0.5
DEFAULT_PRIOR_PHOTONS = 10.0
NBAR_GRID = np.logspace(-2, 4, 200)


def _single_mode(ch: EffectiveChannel):
    if ch.n_modes != 1:
        raise DimensionError(f"only single-mode channels are supported, got {ch.n_modes} modes")


def coherent_state_fidelity(ch: EffectiveChannel, alpha: complex) -> float:
    """Fidelity between ``|α⟩`` and its image under ``ch``."""
    _single_mode(ch)
    alpha = complex(alpha)
    d_in = np.array([2 * alpha.real, 2 * alpha.imag])
    sigma = np.eye(2) + ch.X @ ch.X.T + ch.V
    diff = (ch.X - np.eye(2)) @ d_in + ch.d
    return float(2.0 / math.sqrt(np.linalg.det(sigma)) * math.exp(-0.5 * diff @ np.linalg.solve(sigma, diff)))


def _prior_averaged_fidelity(ch: EffectiveChannel, prior_photons: float) -> float:
    # coherent amplitudes with E|α|² = λ give input means ~ N(0, 2λ I)
    sigma = np.eye(2) + ch.X @ ch.X.T + ch.V
    D = ch.X - np.eye(2)
    A = D.T @ np.linalg.solve(sigma, D)
    pref = 2.0 / math.sqrt(np.linalg.det(sigma))
    if np.any(ch.d):
        raise DomainError("prior-averaged fidelity assumes a channel without fixed displacement")
    return float(pref / math.sqrt(np.linalg.det(np.eye(2) + 2 * prior_photons * A)))


def _mean_independent(ch: EffectiveChannel) -> bool:
    return bool(np.abs(ch.X - np.eye(2)).max() < 1e-12 and not np.any(ch.d))


def average_coherent_fidelity(ch: EffectiveChannel, prior_photons: float = DEFAULT_PRIOR_PHOTONS, full: bool = False):
    """Average input-output fidelity over coherent states.

    For ``X = I`` the fidelity does not depend on the coherent amplitude and
    the uniform average is ``2 / √det(2I + V)``. Otherwise amplitudes are
    drawn from a Gaussian prior with ``prior_photons`` mean photons. With
    ``full=True`` returns ``(fidelity, mean_independent)``.
    """
    _single_mode(ch)
    if _mean_independent(ch):
        F = 2.0 / math.sqrt(np.linalg.det(2 * np.eye(2) + ch.V))
        indep = True
    else:
        F = _prior_averaged_fidelity(ch, prior_photons)
        indep = False
    return (F, indep) if full else F


def dqt_fidelity(c, prior_photons: float = DEFAULT_PRIOR_PHOTONS) -> float:
    """Prior-averaged coherent-state fidelity of direct transduction.

    The uniform (``λ → ∞``) limit is zero whenever the gain differs from one,
    so ``prior_photons`` must be finite.
    """
    if not 0 < prior_photons < math.inf:
        raise DomainError(f"prior photon number must be finite and positive, got {prior_photons}")
    ch = dqt_channel(c)
    _single_mode(ch)
    return _prior_averaged_fidelity(ch, prior_photons)


def _purification_cov(nbar):
    nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
    c = 2 * nbar + 1
    s = 2 * np.sqrt(nbar * (nbar + 1))
    cov = np.zeros(nbar.shape + (4, 4))
    # grouped ordering (Q_A, Q_R, P_A, P_R)
    cov[..., 0, 0] = cov[..., 1, 1] = cov[..., 2, 2] = cov[..., 3, 3] = c
    cov[..., 0, 1] = cov[..., 1, 0] = s
    cov[..., 2, 3] = cov[..., 3, 2] = -s
    return cov


def coherent_information_batch(ch: EffectiveChannel, nbar, input_squeeze=None) -> np.ndarray:
    """Coherent information (bits) for thermal inputs of every ``nbar``.

    The input is purified as a two-mode squeezed state; ``input_squeeze`` is
    an optional single-mode symplectic matrix applied to the input first.
    """
    _single_mode(ch)
    if not ch.is_completely_positive():
        raise DomainError("channel is not completely positive")
    nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
    if np.any(nbar < 0):
        raise DomainError("input photon number must be >= 0")
    joint = _purification_cov(nbar)
    A = ch.X if input_squeeze is None else ch.X @ np.asarray(input_squeeze, dtype=float)
    Y = np.eye(4)
    Y[np.ix_([0, 2], [0, 2])] = A
    noise = np.zeros((4, 4))
    noise[np.ix_([0, 2], [0, 2])] = ch.V
    joint = Y @ joint @ Y.T + noise
    out = joint[..., [0, 2], :][..., :, [0, 2]]
    return entropy_from_cov(out) - entropy_from_cov(joint)


def coherent_information(ch: EffectiveChannel, nbar: float, input_squeeze=None) -> float:
    return float(coherent_information_batch(ch, nbar, input_squeeze)[0])


def noise_matched_squeeze(ch: EffectiveChannel):
    """Input squeezing that makes the noise isotropic as seen from the input.

    Returns ``W^(1/2) / det(W)^(1/4)`` with ``W = X⁻¹ V X⁻ᵀ``, or ``None`` when
    ``X`` is singular or ``W`` is degenerate.
    """
    _single_mode(ch)
    if abs(np.linalg.det(ch.X)) < 1e-12:
        return None
    Xi = np.linalg.inv(ch.X)
    W = Xi @ ch.V @ Xi.T
    W = (W + W.T) / 2
    det = np.linalg.det(W)
    if not det > 1e-300:
        return None
    w, U = np.linalg.eigh(W)
    root = (U * np.sqrt(w)) @ U.T
    return root / det ** 0.25


@dataclass(frozen=True)
class CapacityEstimate:
    lower_bound: float
    argmax_input_photons: float
    grid_meta: dict = field(default_factory=dict)

    @property
    def divergent(self) -> bool:
        return bool(self.grid_meta.get("divergent", False))


def _is_noiseless(ch: EffectiveChannel) -> bool:
    om = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return bool(np.abs(ch.V).max() < 1e-12 and np.abs(ch.X @ om @ ch.X.T - om).max() < 1e-12)


def _best_over_grid(ch, grid, squeeze):
    values = coherent_information_batch(ch, grid, squeeze)
    i = int(np.argmax(values))
    best_n, best_v = float(grid[i]), float(values[i])
    if 0 < i < grid.size - 1:
        lo, hi = math.log(grid[i - 1]), math.log(grid[i + 1])
        res = minimize_scalar(lambda t: -coherent_information(ch, math.exp(t), squeeze),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        if -res.fun > best_v:
            best_n, best_v = math.exp(res.x), float(-res.fun)
    return best_v, best_n, i


def capacity_lower_bound(ch: EffectiveChannel, grid=NBAR_GRID) -> CapacityEstimate:
    """Maximize Gaussian-input coherent information over the input photon number.

    Two input families are searched: thermal states and thermal states
    squeezed to match the channel noise (see :func:`noise_matched_squeeze`).
    Each uses a log-spaced grid search followed by a bounded refinement
    around the best grid point. The result is clamped at zero.
    """
    grid = np.asarray(grid, dtype=float)
    candidates = [("thermal", None)]
    sq = noise_matched_squeeze(ch)
    if sq is not None:
        candidates.append(("noise-matched", sq))
    best = None
    for name, squeeze in candidates:
        v, n, i = _best_over_grid(ch, grid, squeeze)
        if best is None or v > best[0]:
            best = (v, n, i, name)
    best_v, best_n, i, family = best
    meta = {"n_min": float(grid[0]), "n_max": float(grid[-1]), "points": int(grid.size),
            "input": family, "divergent": _is_noiseless(ch),
            "at_upper_edge": i == grid.size - 1}
    if best_v <= 0:
        return CapacityEstimate(0.0, 0.0, meta)
    return CapacityEstimate(best_v, best_n, meta)


def capacity_threshold(c) -> float:
    """Largest ``μν`` for which minimal AQT keeps a positive capacity.

    ``4 / (9 (T + 1/T - 2))`` for beam-splitter coupling and
    ``4 / (9 (T' + 1/T' + 2))`` for two-mode-squeezer coupling.
    """
    if isinstance(c, BeamSplitter):
        T = c.T
        if not 0 < T < 1:
            raise DomainError(f"threshold needs 0 < T < 1, got {T}")
        return 4.0 / (9.0 * (T + 1.0 / T - 2.0))
    if isinstance(c, TwoModeSqueezer):
        T = c.Tp
        if not 0 < T < math.inf:
            raise DomainError(f"threshold needs T' > 0, got {T}")
        return 4.0 / (9.0 * (T + 1.0 / T + 2.0))
    raise DomainError("capacity threshold is defined only for minimal beam-splitter and two-mode-squeezer converters")
