"""Monte-Carlo realization of the adaptive protocol, trajectory by trajectory.

Each trajectory samples the input and ancilla quadratures from their Wigner
distributions, scatters them through ``S``, records noisy homodyne outcomes
on the idlers, displaces the outputs by ``F`` times the outcomes and applies
the recovery ``S̃⁻¹``. Randomness comes from counter-based Philox streams
keyed by ``(seed, block index)``, and block statistics are merged in a fixed
pairwise order, so results do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .gaussian import GaussianState, apply_symplectic, squeezed, tensor, vacuum
from .symplectic import ModePartition, inverse, random_symplectic
from .transducer import (
    BeamSplitter,
    Custom,
    ImperfectionParams,
    TwoModeSqueezer,
    AQTPlan,
    aqt_channel,
    effective_scattering,
    plan_feedforward,
    resolve_scattering,
    teleportation_converter,
)

BLOCK_SIZE = 1 << 16
PROBE = 2.0


@dataclass(frozen=True, eq=False)
class TrajectoryConfig:
    converter: object
    imp: ImperfectionParams
    n_traj: int
    seed: int = 0
    input: GaussianState = None
    plan: AQTPlan = None
    workers: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if self.n_traj < 10:
            raise ConfigError(f"need at least 10 trajectories to estimate a covariance, got {self.n_traj}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1 or self.block_size < 1:
            raise ConfigError("workers and block_size must be positive")


@dataclass(frozen=True, eq=False)
class EmpiricalChannel:
    """Estimated channel ``X̂``, ``V̂`` with standard errors."""

    mean_map: np.ndarray
    mean_map_stderr: np.ndarray
    noise_cov: np.ndarray
    stderr: np.ndarray
    offset: np.ndarray
    outcome_cov: np.ndarray
    n_traj: int

    def z_scores(self, V) -> np.ndarray:
        return (self.noise_cov - np.asarray(V)) / self.stderr


@dataclass
class _Moments:
    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples: np.ndarray) -> "_Moments":
        mean = samples.mean(axis=0)
        c = samples - mean
        return cls(samples.shape[0], mean, c.T @ c)

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return _Moments(n, mean, m2)

    def cov(self) -> np.ndarray:
        return self.m2 / (self.n - 1)


def _pairwise(items):
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    left, right = _pairwise(items[:mid]), _pairwise(items[mid:])
    return tuple(a.merge(b) for a, b in zip(left, right))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, block]))


class _Protocol:
    """Precomputed matrices for one configuration."""

    def __init__(self, cfg: TrajectoryConfig):
        S, p = resolve_scattering(cfg.converter)
        self.S = np.asarray(S.entries)
        self.p = p
        m, n = p.m, p.n
        N = m + n
        self.m, self.n, self.N = m, n, N
        self.plan = cfg.plan if cfg.plan is not None else plan_feedforward(S, p, cfg.imp.eta_vector(n))
        self.F = self.plan.F
        self.rec = inverse(effective_scattering(S, p, self.plan)).entries
        self.eta = cfg.imp.eta_vector(n)
        self.sd_sq = np.sqrt(cfg.imp.nu(n))
        self.sd_anti = np.sqrt(cfg.imp.nu_anti(n))
        if not np.all(np.isfinite(self.sd_anti)):
            raise ConfigError("trajectory sampling needs finite squeezing (xi < inf)")
        self.sq_phase = np.asarray(p.squeeze_phases)
        self.meas_phase = np.asarray(p.measure_phases)
        self.input = cfg.input if cfg.input is not None else vacuum(m)
        if self.input.n_modes != m:
            raise DimensionError(f"input state has {self.input.n_modes} modes, converter expects {m}")
        self.sig = list(range(m)) + [N + i for i in range(m)]

    def assemble(self, x_in, anc_q, anc_p):
        m = self.m
        return np.hstack([x_in[:, :m], anc_q, x_in[:, m:], anc_p])

    def run(self, x):
        """Push grouped input points ``x`` (count x 2N) through the protocol."""
        N, m = self.N, self.m
        y = x @ self.S.T
        qh, ph = y[:, m:N], y[:, N + m:]
        ideal = -np.sin(self.meas_phase) * qh + np.cos(self.meas_phase) * ph
        return y[:, self.sig], ideal

    def block(self, seed: int, index: int, count: int):
        rng = block_rng(seed, index)
        x_in = self.input.sample(rng, count)
        g = rng.standard_normal((count, 2 * self.n))
        v = rng.standard_normal((count, self.n))
        qs, ps = g[:, : self.n] * self.sd_sq, g[:, self.n:] * self.sd_anti
        c, s = np.cos(self.sq_phase), np.sin(self.sq_phase)
        anc_q, anc_p = c * qs - s * ps, s * qs + c * ps
        outcome = None
        recs = []
        probes = [np.zeros(2 * self.m)]
        for k in range(2 * self.m):
            e = np.zeros(2 * self.m)
            e[k] = PROBE
            probes += [e, -e]
        for shift in probes:
            out, ideal = self.run(self.assemble(x_in + shift, anc_q, anc_p))
            r = np.sqrt(self.eta) * ideal + np.sqrt(1 - self.eta) * v
            if outcome is None:
                outcome = r
            recs.append((out + r @ self.F.T) @ self.rec.T)
        cols = [(recs[1 + 2 * k] - recs[2 + 2 * k]) / (2 * PROBE) for k in range(2 * self.m)]
        Xt = np.stack(cols, axis=-1)  # count x 2m x 2m, exact per trajectory up to round-off
        resid = recs[0] - np.einsum("tij,tj->ti", Xt, x_in)
        return (_Moments.of(resid), _Moments.of(Xt.reshape(count, -1)), _Moments.of(outcome))


def run_trajectories(cfg: TrajectoryConfig) -> EmpiricalChannel:
    proto = _Protocol(cfg)
    sizes = [cfg.block_size] * (cfg.n_traj // cfg.block_size)
    if cfg.n_traj % cfg.block_size:
        sizes.append(cfg.n_traj % cfg.block_size)
    tasks = list(enumerate(sizes))
    if cfg.workers == 1:
        parts = [proto.block(cfg.seed, i, c) for i, c in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda t: proto.block(cfg.seed, *t), tasks))
    resid, xmap, outc = _pairwise(parts)
    n = resid.n
    V = resid.cov()
    d = np.sqrt(np.diag(V))
    stderr = np.sqrt((np.outer(d, d) ** 2 + V ** 2) / (n - 1))
    dim = 2 * proto.m
    X = xmap.mean.reshape(dim, dim)
    X_se = np.sqrt(np.diag(xmap.cov()) / n).reshape(dim, dim)
    return EmpiricalChannel(X, X_se, V, stderr, resid.mean, outc.cov(), n)


def predicted_outcome_cov(converter, imp: ImperfectionParams, input_state: GaussianState = None) -> np.ndarray:
    """Covariance of the raw homodyne outcomes from Gaussian-state propagation."""
    S, p = resolve_scattering(converter)
    m, n, N = p.m, p.n, p.n_modes
    inp = input_state if input_state is not None else vacuum(m)
    ancillas = [squeezed(imp.ancilla(k, n), p.squeeze_phases[k]) for k in range(n)]
    state = apply_symplectic(tensor(inp, *ancillas), S)
    phi = np.asarray(p.measure_phases)
    L = np.zeros((n, 2 * N))
    L[np.arange(n), m + np.arange(n)] = -np.sin(phi)
    L[np.arange(n), N + m + np.arange(n)] = np.cos(phi)
    eta = imp.eta_vector(n)
    return np.sqrt(np.outer(eta, eta)) * (L @ state.cov @ L.T) + np.diag(1 - eta)


def sample_homodyne(state: GaussianState, quad_index: int, efficiency: float, n_samples: int, seed: int = 0) -> np.ndarray:
    """Raw outcomes of an efficiency-``η`` homodyne detector on one quadrature."""
    rng = block_rng(seed, 0)
    x = state.sample(rng, n_samples)[:, quad_index]
    return math.sqrt(efficiency) * x + math.sqrt(1 - efficiency) * rng.standard_normal(n_samples)


# -- verification scenarios -----------------------------------------------------


def scenario(name: str, xi: float = 1.0):
    """``(converter, imperfections)`` for a named verification scenario."""
    if name == "minimal-bs":
        return BeamSplitter(0.8), ImperfectionParams.from_nu_mu(0.1, 1.0)
    if name == "minimal-tms":
        return TwoModeSqueezer(10.0), ImperfectionParams.from_nu_mu(0.1, 0.1)
    if name == "teleport-n2":
        return teleportation_converter(), ImperfectionParams(xi=xi)
    raise ConfigError(f"unknown scenario {name!r}")


TRAJECTORY_SCENARIOS = ("minimal-bs", "minimal-tms", "teleport-n2")


def verify_trajectories(name: str, n_traj: int, seed: int, workers: int = 1, xi: float = 1.0) -> dict:
    converter, imp = scenario(name, xi)
    analytic = aqt_channel(converter, imp)
    emp = run_trajectories(TrajectoryConfig(converter, imp, n_traj, seed, workers=workers))
    z = emp.z_scores(analytic.V)
    worst = np.unravel_index(int(np.argmax(np.abs(z))), z.shape)
    return {"scenario": name, "analytic": analytic.V, "empirical": emp, "z": z, "worst": worst}


def random_converter(rng: np.random.Generator, max_m: int = 2, max_n: int = 3) -> Custom:
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    S = random_symplectic(m + n, rng)
    p = ModePartition(m, n, tuple(rng.uniform(0, 2 * np.pi, n)), tuple(rng.uniform(0, 2 * np.pi, n)))
    return Custom(S, p)


def verify_random_symplectic(draws: int, seed: int) -> dict:
    """Check that ``S̃`` is symplectic for ``draws`` random converters."""
    rng = block_rng(seed, 0)
    residuals = []
    for _ in range(draws):
        c = random_converter(rng)
        St = effective_scattering(c.S, c.partition)
        residuals.append(St.residual())
    return {"scenario": "random-symplectic", "residuals": np.asarray(residuals),
            "all_symplectic": bool(np.all(np.asarray(residuals) <= 1e-9))}
