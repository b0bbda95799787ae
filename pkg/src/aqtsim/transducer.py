"""Mode converters and the direct/adaptive transduction channels.

A converter resolves to a symplectic scattering matrix ``S`` on ``m + n``
modes together with a :class:`~aqtsim.symplectic.ModePartition`. The adaptive
protocol squeezes the ancillas, measures one quadrature of every idler and
displaces the outputs by ``F`` times the outcomes. Channels returned by
:func:`aqt_channel` are expressed after the unitary recovery, so their
deterministic part is the identity and all imperfections sit in ``V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConsistencyError, DimensionError, DomainError, ModelError, PlanningError
from .gaussian import AncillaSpec, GaussianState
from .symplectic import (
    ModePartition,
    SymplecticMatrix,
    beam_splitter,
    compose,
    embed,
    inverse,
    inverse_blocks,
    mode_permutation,
    partition_blocks,
    symplectic_form,
    symplectic_residual,
    two_mode_squeezer,
)

COND_LIMIT = 1e8
CP_TOL = 1e-9


def to_db(x):
    return 10.0 * np.log10(x)


def from_db(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


# -- converters ---------------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitter:
    """Passive converter with input-to-output transmittance ``T``."""

    T: float
    squeeze_phases: tuple = None
    measure_phases: tuple = None


@dataclass(frozen=True)
class TwoModeSqueezer:
    """Parametric converter with input-to-output transmittance ``Tp``.

    The output port carries the phase-conjugated signal, amplified with gain
    ``Tp`` (a two-mode squeezer of gain ``Tp + 1`` read out on the other mode).
    """

    Tp: float
    squeeze_phases: tuple = None
    measure_phases: tuple = None


@dataclass(frozen=True)
class PhysicalCavity:
    """Two coupled cavity modes, each coupled to one external port.

    Hamiltonian ``g (a1† a2 + h.c.) + gp (a1† a2† + h.c.)`` with external
    decay rates ``kappa1`` and ``kappa2`` (all in rad/s); ``detuning`` is the
    offset of the signal from the converter's centre frequency. Port 1 is the
    input/idler port and port 2 the output/ancilla port. The measured idler
    quadrature is chosen automatically unless ``measure_phases`` is given.
    """

    g: float
    gp: float
    kappa1: float
    kappa2: float
    detuning: float = 0.0
    squeeze_phases: tuple = None
    measure_phases: Union[tuple, str] = "auto"


@dataclass(frozen=True, eq=False)
class Custom:
    S: SymplecticMatrix
    partition: ModePartition


ConverterSpec = Union[BeamSplitter, TwoModeSqueezer, PhysicalCavity, Custom]


def cavity_scattering(g, gp, kappa1, kappa2, detuning=0.0) -> np.ndarray:
    """Input-output scattering of the two-mode cavity in grouped quadratures.

    Port order is the physical one (port 1, port 2) on both sides.
    """
    if kappa1 <= 0 or kappa2 <= 0:
        raise DomainError(f"external couplings must be positive, got {kappa1}, {kappa2}")
    # coupling matrix on (a1, a2, a1†, a2†)
    K = np.array([
        [0.0, g, 0.0, gp],
        [g, 0.0, gp, 0.0],
        [0.0, -gp, 0.0, -g],
        [-gp, 0.0, -g, 0.0],
    ])
    kap = np.array([kappa1, kappa2, kappa1, kappa2])
    drift = 1j * K + np.diag(kap / 2)
    if np.linalg.eigvals(drift).real.min() <= 0:
        raise ModelError("cavity is parametrically unstable (drift has non-decaying eigenvalues)")
    root = np.diag(np.sqrt(kap))
    Sd = np.eye(4) - root @ np.linalg.solve(-1j * detuning * np.eye(4) + drift, root)
    alpha, beta = Sd[:2, :2], Sd[:2, 2:]
    top = np.hstack([(alpha + beta).real, -(alpha - beta).imag])
    bottom = np.hstack([(alpha + beta).imag, (alpha - beta).real])
    return np.vstack([top, bottom])


def choose_measure_phases(S, partition: ModePartition, n_grid: int = 360, sweeps: int = 3) -> tuple:
    """Pick idler measurement phases maximizing the smallest singular value of ``S_{h,z'}``.

    A larger singular value means smaller feedforward gains. Phase 0 is kept
    for any idler where it is within 1% of the best choice.
    """
    phases = list(partition.measure_phases)
    grid = np.linspace(0.0, math.pi, n_grid, endpoint=False)

    def score(ph):
        blk = partition_blocks(S, partition.with_phases(measure_phases=ph))["h", "z'"]
        return np.linalg.svd(blk, compute_uv=False).min()

    for _ in range(sweeps):
        for k in range(partition.n):
            trial = []
            for phi in grid:
                ph = list(phases)
                ph[k] = phi
                trial.append(score(ph))
            trial = np.asarray(trial)
            best = int(np.argmax(trial))
            phases[k] = 0.0 if trial[0] >= 0.99 * trial[best] else float(grid[best])
    return tuple(phases)


def resolve_scattering(c: ConverterSpec):
    """Return ``(S, partition)`` for a converter description."""
    if isinstance(c, Custom):
        if c.S.n_modes != c.partition.n_modes:
            raise DimensionError(f"{c.S.n_modes}-mode matrix with a {c.partition.n_modes}-mode partition")
        return c.S, c.partition
    if isinstance(c, BeamSplitter):
        return beam_splitter(c.T), ModePartition(1, 1, c.squeeze_phases, c.measure_phases)
    if isinstance(c, TwoModeSqueezer):
        if not c.Tp >= 0 or not math.isfinite(c.Tp):
            raise DomainError(f"two-mode-squeezer transmittance must be >= 0, got {c.Tp}")
        S = compose(mode_permutation([1, 0]), two_mode_squeezer(c.Tp + 1.0))
        return S, ModePartition(1, 1, c.squeeze_phases, c.measure_phases)
    if isinstance(c, PhysicalCavity):
        raw = cavity_scattering(c.g, c.gp, c.kappa1, c.kappa2, c.detuning)
        # output 0 is port 2 (converted signal), output 1 is port 1 (idler)
        A = mode_permutation([1, 0]).entries @ raw
        res = symplectic_residual(A)
        if res > 1e-9:
            raise ModelError(f"cavity scattering matrix is not symplectic (defect {res:.3e})")
        S = SymplecticMatrix(A)
        p = ModePartition(1, 1, c.squeeze_phases, None)
        if isinstance(c.measure_phases, str):
            if c.measure_phases != "auto":
                raise DomainError(f"measure_phases must be angles or 'auto', got {c.measure_phases!r}")
            p = p.with_phases(measure_phases=choose_measure_phases(S, p))
        elif c.measure_phases is not None:
            p = p.with_phases(measure_phases=c.measure_phases)
        return S, p
    raise DomainError(f"unknown converter specification {c!r}")


def transmittance(S, p: ModePartition) -> float:
    """``|det M|^(1/m)`` of the input-to-output block (``T`` for the minimal converters)."""
    M = partition_blocks(S, p).signal_block()
    return float(abs(np.linalg.det(M)) ** (1.0 / p.m))


def teleportation_converter() -> Custom:
    """Continuous-variable teleportation written as an m=1, n=2 converter.

    Two ancillas (squeezed in Q and in P) form an EPR pair on a balanced beam
    splitter; the input is mixed with one half and both outputs are measured;
    the other half is the output mode.
    """
    N = 3
    epr_bs = embed(beam_splitter(0.5), [1, 2], N)
    bell_bs = embed(beam_splitter(0.5), [0, 1], N)
    S = compose(mode_permutation([2, 0, 1]), bell_bs, epr_bs)
    p = ModePartition(1, 2, (0.0, math.pi / 2), (0.0, math.pi / 2))
    return Custom(S, p)


# -- imperfections ------------------------------------------------------------


def _per_mode(value, n, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)) if np.ndim(value) == 0 else np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise DimensionError(f"{name} needs {n} values, got {arr.size}")
    return np.array(arr)


@dataclass(frozen=True)
class ImperfectionParams:
    """Finite squeezing and detector inefficiency.

    Each field is a scalar (shared by all ancillas/idlers) or a sequence with
    one entry per ancilla/idler. ``xi = inf`` and ``eta = 1`` give the ideal
    protocol.
    """

    xi: object = math.inf
    n_z: object = 0.0
    eta: object = 1.0

    def __post_init__(self):
        xi, nz, eta = (np.asarray(v, dtype=float) for v in (self.xi, self.n_z, self.eta))
        if np.any(xi < 0) or np.any(nz < 0):
            raise DomainError("squeezing parameter and thermal occupation must be >= 0")
        if np.any(eta <= 0) or np.any(eta > 1):
            raise DomainError(f"detector efficiency must lie in (0, 1], got {self.eta}")

    @classmethod
    def from_nu_mu(cls, nu, mu) -> "ImperfectionParams":
        """Build from linear ``ν`` and ``μ``; ``ν > 1`` is read as unsqueezed thermal noise."""
        nu = np.asarray(nu, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if np.any(nu < 0) or np.any(mu < 0):
            raise DomainError(f"nu and mu must be >= 0, got {nu}, {mu}")
        with np.errstate(divide="ignore"):
            xi = np.where(nu <= 1, -0.5 * np.log(np.minimum(nu, 1.0)), 0.0)
        n_z = np.where(nu <= 1, 0.0, (nu - 1) / 2)
        eta = 1.0 / (1.0 + mu)
        unpack = lambda a: float(a) if a.ndim == 0 else tuple(float(v) for v in a)
        return cls(unpack(xi), unpack(n_z), unpack(eta))

    @classmethod
    def from_db(cls, nu_db, mu_db) -> "ImperfectionParams":
        return cls.from_nu_mu(from_db(nu_db), from_db(mu_db))

    @classmethod
    def ideal(cls) -> "ImperfectionParams":
        return cls()

    def nu(self, n: int) -> np.ndarray:
        xi = _per_mode(self.xi, n, "xi")
        nz = _per_mode(self.n_z, n, "n_z")
        return np.exp(-2 * xi) * (2 * nz + 1)

    def nu_anti(self, n: int) -> np.ndarray:
        xi = _per_mode(self.xi, n, "xi")
        nz = _per_mode(self.n_z, n, "n_z")
        with np.errstate(over="ignore"):
            return np.exp(2 * xi) * (2 * nz + 1)

    def eta_vector(self, n: int) -> np.ndarray:
        return _per_mode(self.eta, n, "eta")

    def mu(self, n: int) -> np.ndarray:
        eta = self.eta_vector(n)
        return (1 - eta) / eta

    def ancilla(self, k: int, n: int) -> AncillaSpec:
        return AncillaSpec(float(_per_mode(self.xi, n, "xi")[k]), float(_per_mode(self.n_z, n, "n_z")[k]))


# -- adaptive protocol --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AQTPlan:
    """Feedforward plan: ``F`` maps raw homodyne outcomes to output displacements.

    ``F_star`` is the noise-cancelling gain for ideal detection; the planned
    gain is ``F = F_star · diag(η)^(-1/2)``.
    """

    partition: ModePartition
    F: np.ndarray
    F_star: np.ndarray
    eta: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.eta is None:
            object.__setattr__(self, "eta", np.ones(self.partition.n))
        if self.F.shape != (2 * self.partition.m, self.partition.n):
            raise DimensionError(f"F must have shape {(2 * self.partition.m, self.partition.n)}, got {self.F.shape}")
        if not np.all(np.isfinite(self.F)):
            raise DomainError("feedforward gains must be finite")

    @property
    def is_standard(self) -> bool:
        return bool(np.allclose(self.F, self.F_star / np.sqrt(self.eta), rtol=1e-12, atol=1e-14))

    def with_gain(self, F) -> "AQTPlan":
        """Same plan with a user-supplied feedforward matrix (extension hook)."""
        return AQTPlan(self.partition, np.asarray(F, dtype=float), self.F_star, self.eta)


def _checked_inverse(block: np.ndarray, name: str) -> np.ndarray:
    cond = np.linalg.cond(block)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise PlanningError(
            f"block {name} is singular or ill-conditioned (cond={cond:.3e}); "
            "choose different squeezed/measured quadratures"
        )
    return np.linalg.inv(block)


def plan_feedforward(S, p: ModePartition, eta=1.0) -> AQTPlan:
    blk = partition_blocks(S, p)
    inv_hz = _checked_inverse(blk["h", "z'"], "S_{h,z'}")
    F_star = -blk.rows(("b", "b'"), ("z'",)) @ inv_hz
    eta = _per_mode(eta, p.n, "eta")
    if np.any(eta <= 0) or np.any(eta > 1):
        raise DomainError(f"detector efficiency must lie in (0, 1], got {eta}")
    return AQTPlan(p, F_star / np.sqrt(eta), F_star, eta)


def effective_scattering(S, p: ModePartition, plan: AQTPlan = None) -> SymplecticMatrix:
    """Input-to-output map after ideal feedforward, ``A + F⋆ [S_ha, S_ha']``."""
    if plan is None:
        plan = plan_feedforward(S, p)
    blk = partition_blocks(S, p)
    St = blk.signal_block() + plan.F_star @ blk.rows(("h",), ("a", "a'"))
    res = symplectic_residual(St)
    if res > 1e-9:
        raise ConsistencyError(f"effective scattering matrix is not symplectic (residual {res:.3e})")
    return SymplecticMatrix(St, check=False)


def noise_covariance(S, p: ModePartition, plan: AQTPlan, imp: ImperfectionParams) -> np.ndarray:
    """Added-noise covariance in the recovered frame.

    ``V = B⋆ diag(ν) B⋆ᵀ + S̃⁻¹ F⋆ diag(μ) F⋆ᵀ S̃⁻ᵀ`` with
    ``B⋆ = [(S⁻¹)_{a,h'}; (S⁻¹)_{a',h'}] [(S⁻¹)_{z,h'}]⁻¹``.
    """
    inv = inverse_blocks(S, p)
    left = np.vstack([inv["a", "h'"], inv["a'", "h'"]])
    B = left @ _checked_inverse(inv["z", "h'"], "(S^-1)_{z,h'}")
    St_inv = inverse(effective_scattering(S, p, plan)).entries
    L = St_inv @ plan.F_star
    nu = imp.nu(p.n)
    mu = imp.mu(p.n)
    V = (B * nu) @ B.T + (L * mu) @ L.T
    return (V + V.T) / 2


def propagated_noise_covariance(S, p: ModePartition, plan: AQTPlan, imp: ImperfectionParams) -> np.ndarray:
    """Added noise by propagating every noise source through the protocol.

    Valid for any feedforward gain, including non-standard ``plan.F``.
    """
    blk = partition_blocks(S, p)
    eta = imp.eta_vector(p.n)
    F_eff = plan.F * np.sqrt(eta)
    C_z = blk.rows(("b", "b'"), ("z",))
    C_zp = blk.rows(("b", "b'"), ("z'",))
    G = C_z + F_eff @ blk["h", "z"]
    R = C_zp + F_eff @ blk["h", "z'"]
    N_vac = plan.F * np.sqrt(1 - eta)
    nu, nu_anti = imp.nu(p.n), imp.nu_anti(p.n)
    leak = np.abs(R).max(axis=0) > 1e-12
    anti = np.where(leak, nu_anti, 0.0)
    raw = (G * nu) @ G.T + (R * anti) @ R.T + N_vac @ N_vac.T
    St_inv = inverse(effective_scattering(S, p, plan)).entries
    V = St_inv @ raw @ St_inv.T
    return (V + V.T) / 2


# -- channels -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Gaussian channel ``mean -> X mean + d``, ``cov -> X cov Xᵀ + V``."""

    X: np.ndarray
    V: np.ndarray
    d: np.ndarray = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        V = np.array(self.V, dtype=float)
        d = np.zeros(X.shape[0]) if self.d is None else np.array(self.d, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] % 2 or V.shape != X.shape or d.shape != (X.shape[0],):
            raise DimensionError(f"inconsistent channel shapes X{X.shape}, V{V.shape}, d{d.shape}")
        V = (V + V.T) / 2
        for a in (X, V, d):
            a.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "d", d)

    @property
    def n_modes(self) -> int:
        return self.X.shape[0] // 2

    def cp_margin(self) -> float:
        """Smallest eigenvalue of ``V + iΩ - iXΩXᵀ`` (>= 0 for a valid channel)."""
        om = symplectic_form(self.n_modes)
        M = self.V + 1j * (om - self.X @ om @ self.X.T)
        return float(np.linalg.eigvalsh(M).min())

    def is_completely_positive(self, tol: float = CP_TOL) -> bool:
        return self.cp_margin() >= -tol

    def apply(self, state: GaussianState) -> GaussianState:
        if state.n_modes != self.n_modes:
            raise DimensionError(f"{self.n_modes}-mode channel applied to a {state.n_modes}-mode state")
        return GaussianState(self.X @ state.mean + self.d, self.X @ state.cov @ self.X.T + self.V)

    def is_identity(self, tol: float = 1e-9) -> bool:
        return bool(np.abs(self.X - np.eye(self.X.shape[0])).max() < tol and np.abs(self.V).max() < tol)


def dqt_channel(c: ConverterSpec) -> EffectiveChannel:
    """Direct transduction: vacuum ancillas, idlers discarded, no recovery."""
    S, p = resolve_scattering(c)
    A = np.asarray(S.entries)
    N, m = p.n_modes, p.m
    sig = list(range(m)) + [N + i for i in range(m)]
    anc = [i for i in range(2 * N) if i not in sig]
    X = A[np.ix_(sig, sig)]
    C = A[np.ix_(sig, anc)]
    return EffectiveChannel(X, C @ C.T)


def aqt_channel(c: ConverterSpec, imp: ImperfectionParams = None, plan: AQTPlan = None) -> EffectiveChannel:
    """Adaptive transduction followed by the recovery ``U_S̃⁻¹``.

    ``plan`` overrides the feedforward (e.g. via :meth:`AQTPlan.with_gain`);
    non-standard gains are evaluated by explicit noise propagation.
    """
    imp = ImperfectionParams.ideal() if imp is None else imp
    S, p = resolve_scattering(c)
    if plan is None:
        plan = plan_feedforward(S, p, imp.eta_vector(p.n))
    St = effective_scattering(S, p, plan)
    blk = partition_blocks(S, p)
    F_eff = plan.F * np.sqrt(imp.eta_vector(p.n))
    direct = blk.signal_block() + F_eff @ blk.rows(("h",), ("a", "a'"))
    X = inverse(St).entries @ direct
    if plan.is_standard and np.allclose(plan.eta, imp.eta_vector(p.n)):
        V = noise_covariance(S, p, plan, imp)
    else:
        V = propagated_noise_covariance(S, p, plan, imp)
    return EffectiveChannel(X, V)


def minimal_noise_closed_form(c, nu: float, mu: float) -> np.ndarray:
    """``(1 ∓ T) diag(ν/T, μ)`` for the minimal beam-splitter / two-mode-squeezer converters."""
    if isinstance(c, BeamSplitter):
        T, sign = c.T, -1.0
    elif isinstance(c, TwoModeSqueezer):
        T, sign = c.Tp, 1.0
    else:
        raise DomainError("closed form exists only for minimal beam-splitter and two-mode-squeezer converters")
    return (1 + sign * T) * np.diag([nu / T, mu])
