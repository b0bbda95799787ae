"""Symplectic linear algebra on quadrature phase space.

All matrices use the grouped ordering ``(Q_0, ..., Q_{N-1}, P_0, ..., P_{N-1})``
with symplectic form ``[[0, I], [-I, 0]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, DomainError

GROUPED = "grouped"
SYMPLECTIC_TOL = 1e-9

ROW_LABELS = ("b", "b'", "h", "h'")
COL_LABELS = ("a", "a'", "z", "z'")


def symplectic_form(n_modes: int) -> np.ndarray:
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def _as_array(M) -> np.ndarray:
    if isinstance(M, SymplecticMatrix):
        return M.entries
    return np.asarray(M, dtype=float)


def symplectic_residual(M) -> float:
    """Frobenius norm of ``M Ω Mᵀ - Ω``."""
    A = _as_array(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] % 2:
        raise DimensionError(f"symplectic matrices have even dimension, got {A.shape[0]}")
    omega = symplectic_form(A.shape[0] // 2)
    return float(np.linalg.norm(A @ omega @ A.T - omega))


def is_symplectic(M, tol: float = SYMPLECTIC_TOL) -> bool:
    return symplectic_residual(M) <= tol


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    """Immutable ``2N x 2N`` real symplectic matrix in grouped ordering.

    Construction validates the symplectic condition unless ``check=False``.
    """

    entries: np.ndarray
    ordering: str = GROUPED
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2 or A.shape[0] == 0:
            raise DimensionError(f"expected a non-empty square even-dimensional matrix, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise DomainError("symplectic matrix entries must be finite")
        if self.ordering != GROUPED:
            raise DomainError(f"unsupported quadrature ordering {self.ordering!r}")
        if self.check:
            res = symplectic_residual(A)
            if res > SYMPLECTIC_TOL:
                raise DomainError(f"matrix is not symplectic (residual {res:.3e})")
        A.flags.writeable = False
        object.__setattr__(self, "entries", A)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, SymplecticMatrix):
            return compose(self, other)
        return self.entries @ other

    def inverse(self) -> "SymplecticMatrix":
        return inverse(self)

    def residual(self) -> float:
        return symplectic_residual(self.entries)


def compose(*mats: SymplecticMatrix) -> SymplecticMatrix:
    """Matrix product ``mats[0] @ mats[1] @ ...`` (rightmost acts first)."""
    if not mats:
        raise DimensionError("compose needs at least one matrix")
    out = _as_array(mats[0])
    for M in mats[1:]:
        B = _as_array(M)
        if B.shape != out.shape:
            raise DimensionError(f"cannot compose {out.shape} with {B.shape}")
        out = out @ B
    return SymplecticMatrix(out)


def inverse(A: SymplecticMatrix) -> SymplecticMatrix:
    """Exact symplectic inverse ``-Ω Aᵀ Ω``."""
    M = _as_array(A)
    omega = symplectic_form(M.shape[0] // 2)
    return SymplecticMatrix(-omega @ M.T @ omega, check=False)


def identity(n_modes: int) -> SymplecticMatrix:
    return SymplecticMatrix(np.eye(2 * n_modes), check=False)


def beam_splitter(T: float) -> SymplecticMatrix:
    """Two-mode beam splitter with power transmittance ``T``.

    Both the Q and the P block equal ``[[√T, √(1-T)], [-√(1-T), √T]]``, so mode 0
    is transmitted to mode 0 with amplitude ``√T``.
    """
    if not 0.0 <= T <= 1.0 or not math.isfinite(T):
        raise DomainError(f"beam splitter transmittance must lie in [0, 1], got {T}")
    t, r = math.sqrt(T), math.sqrt(1.0 - T)
    R = np.array([[t, r], [-r, t]])
    Z = np.zeros((2, 2))
    return SymplecticMatrix(np.block([[R, Z], [Z, R]]))


def two_mode_squeezer(gain: float) -> SymplecticMatrix:
    """Phase-preserving two-mode squeezer with intensity gain ``gain >= 1``."""
    if not gain >= 1.0 or not math.isfinite(gain):
        raise DomainError(f"two-mode squeezer gain must be >= 1, got {gain}")
    c, s = math.sqrt(gain), math.sqrt(gain - 1.0)
    Z = np.zeros((2, 2))
    Sq = np.array([[c, s], [s, c]])
    Sp = np.array([[c, -s], [-s, c]])
    return SymplecticMatrix(np.block([[Sq, Z], [Z, Sp]]))


def phase_rotation(phases) -> SymplecticMatrix:
    """Independent rotation of each mode's quadratures.

    Mode ``k`` maps to ``Q' = cos θ Q + sin θ P`` and ``P' = -sin θ Q + cos θ P``.
    """
    theta = np.atleast_1d(np.asarray(phases, dtype=float))
    c, s = np.cos(theta), np.sin(theta)
    M = np.block([[np.diag(c), np.diag(s)], [np.diag(-s), np.diag(c)]])
    return SymplecticMatrix(M, check=False)


def mode_permutation(order) -> SymplecticMatrix:
    """Relabel modes so that output mode ``i`` is input mode ``order[i]``."""
    order = list(order)
    N = len(order)
    if sorted(order) != list(range(N)):
        raise DomainError(f"{order} is not a permutation of range({N})")
    P = np.zeros((2 * N, 2 * N))
    for new, old in enumerate(order):
        P[new, old] = 1.0
        P[N + new, N + old] = 1.0
    return SymplecticMatrix(P, check=False)


def embed(M: SymplecticMatrix, modes, n_modes: int) -> SymplecticMatrix:
    """Act with the k-mode matrix ``M`` on ``modes`` of an ``n_modes`` system."""
    A = _as_array(M)
    k = A.shape[0] // 2
    modes = list(modes)
    if len(modes) != k or len(set(modes)) != k or max(modes) >= n_modes or min(modes) < 0:
        raise DimensionError(f"cannot embed a {k}-mode matrix on modes {modes} of {n_modes}")
    idx = modes + [n_modes + j for j in modes]
    out = np.eye(2 * n_modes)
    out[np.ix_(idx, idx)] = A
    return SymplecticMatrix(out, check=False)


def random_symplectic(n_modes: int, rng: np.random.Generator, max_cond: float = 1e6) -> SymplecticMatrix:
    """``expm(Ω H)`` with ``H`` symmetric, entries uniform in [-1, 1].

    The generator is rescaled so that ``cond(S) <= exp(2‖ΩH‖₂) <= max_cond``.
    """
    H = rng.uniform(-1.0, 1.0, size=(2 * n_modes, 2 * n_modes))
    H = (H + H.T) / 2
    G = symplectic_form(n_modes) @ H
    norm = np.linalg.norm(G, 2)
    limit = 0.5 * math.log(max_cond)
    if norm > limit:
        G *= limit / norm
    return SymplecticMatrix(expm(G))


@dataclass(frozen=True)
class ModePartition:
    """Split of ``m + n`` modes into signal and ancilla/idler roles.

    Modes ``0..m-1`` carry the signal (input ``a`` to output ``b``); modes
    ``m..m+n-1`` carry the ancillas ``z`` on the input side and the idlers
    ``h`` on the output side. After rotating ancilla ``k`` by
    ``squeeze_phases[k]`` its Q quadrature is the squeezed one (``z``) and P
    the anti-squeezed one (``z'``). After rotating idler ``k`` by
    ``measure_phases[k]`` its P quadrature is measured (``h``) and Q is
    discarded (``h'``). With all phases zero the ancillas are squeezed in Q
    and the idlers are measured in P.
    """

    m: int
    n: int
    squeeze_phases: tuple = None
    measure_phases: tuple = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DomainError(f"need m >= 1 and n >= 1, got m={self.m}, n={self.n}")
        for name in ("squeeze_phases", "measure_phases"):
            val = getattr(self, name)
            if val is None:
                val = (0.0,) * self.n
            val = tuple(float(v) % (2 * math.pi) for v in np.atleast_1d(val))
            if len(val) != self.n:
                raise DimensionError(f"{name} needs {self.n} angles, got {len(val)}")
            object.__setattr__(self, name, val)

    @property
    def n_modes(self) -> int:
        return self.m + self.n

    def with_phases(self, squeeze_phases=None, measure_phases=None) -> "ModePartition":
        return ModePartition(
            self.m,
            self.n,
            self.squeeze_phases if squeeze_phases is None else squeeze_phases,
            self.measure_phases if measure_phases is None else measure_phases,
        )

    def _index_maps(self):
        m, N = self.m, self.n_modes
        sig = list(range(m))
        anc = list(range(m, N))
        x_idx = sig + [N + i for i in sig] + anc + [N + i for i in anc]
        y_idx = sig + [N + i for i in sig] + [N + i for i in anc] + anc
        return x_idx, y_idx

    def input_rotation(self) -> SymplecticMatrix:
        return phase_rotation((0.0,) * self.m + self.squeeze_phases)

    def output_rotation(self) -> SymplecticMatrix:
        return phase_rotation((0.0,) * self.m + self.measure_phases)

    def sizes(self):
        return {"a": self.m, "a'": self.m, "z": self.n, "z'": self.n,
                "b": self.m, "b'": self.m, "h": self.n, "h'": self.n}

    def slices(self):
        """Offsets of each label inside the partition-basis vectors."""
        m, n = self.m, self.n
        spans = [slice(0, m), slice(m, 2 * m), slice(2 * m, 2 * m + n), slice(2 * m + n, 2 * m + 2 * n)]
        return dict(zip(COL_LABELS, spans)), dict(zip(ROW_LABELS, spans))


def _has_phases(p: ModePartition) -> bool:
    return any(p.squeeze_phases) or any(p.measure_phases)


def to_partition_basis(S, p: ModePartition) -> np.ndarray:
    """Express ``S`` as a map from ``(x_a, x_a', x_z, x_z')`` to ``(y_b, y_b', y_h, y_h')``."""
    A = _as_array(S)
    if A.shape != (2 * p.n_modes, 2 * p.n_modes):
        raise DimensionError(f"matrix of shape {A.shape} does not fit a partition with {p.n_modes} modes")
    if _has_phases(p):
        A = p.output_rotation().entries @ A @ p.input_rotation().entries.T
    x_idx, y_idx = p._index_maps()
    return A[np.ix_(y_idx, x_idx)]


def from_partition_basis(A_part: np.ndarray, p: ModePartition) -> np.ndarray:
    x_idx, y_idx = p._index_maps()
    A = np.empty_like(A_part)
    A[np.ix_(y_idx, x_idx)] = A_part
    if _has_phases(p):
        A = p.output_rotation().entries.T @ A @ p.input_rotation().entries
    return A


@dataclass(frozen=True, eq=False)
class BlockView:
    """The sixteen sub-blocks ``S_{r,c}`` of a scattering matrix.

    Rows ``r`` range over ``b, b', h, h'`` and columns ``c`` over
    ``a, a', z, z'``; index with ``view["b", "a"]``.
    """

    blocks: dict
    partition: ModePartition

    def __getitem__(self, key):
        return self.blocks[key]

    def reassemble(self) -> np.ndarray:
        """The full matrix in partition basis."""
        return np.block([[self.blocks[r, c] for c in COL_LABELS] for r in ROW_LABELS])

    def to_source(self) -> np.ndarray:
        """Undo the basis change and return the matrix in grouped ordering."""
        return from_partition_basis(self.reassemble(), self.partition)

    def signal_block(self) -> np.ndarray:
        """Input-to-output subblock ``[[S_ba, S_ba'], [S_b'a, S_b'a']]``."""
        return np.block([[self.blocks["b", "a"], self.blocks["b", "a'"]],
                         [self.blocks["b'", "a"], self.blocks["b'", "a'"]]])

    def rows(self, rows, cols) -> np.ndarray:
        """Stack the blocks for the given row and column labels."""
        return np.block([[self.blocks[r, c] for c in cols] for r in rows])


def partition_blocks(S, p: ModePartition) -> BlockView:
    A = to_partition_basis(S, p)
    col_sl, row_sl = p.slices()
    blocks = {(r, c): A[row_sl[r], col_sl[c]].copy() for r in ROW_LABELS for c in COL_LABELS}
    return BlockView(blocks, p)


def inverse_blocks(S, p: ModePartition) -> dict:
    """Blocks ``(S⁻¹)_{c,r}`` of the inverse, indexed by (input label, output label)."""
    inv = inverse(S if isinstance(S, SymplecticMatrix) else SymplecticMatrix(S, check=False))
    A = to_partition_basis(inv.entries.T, p).T  # rows: x labels, cols: y labels
    col_sl, row_sl = p.slices()
    return {(c, r): A[col_sl[c], row_sl[r]].copy() for c in COL_LABELS for r in ROW_LABELS}


def matching_defect(S, p: ModePartition) -> float:
    """Deviation of the input-to-output subblock from being symplectic.

    Zero exactly when the matching condition holds.
    """
    M = partition_blocks(S, p).signal_block()
    omega = symplectic_form(p.m)
    return float(np.linalg.norm(M @ omega @ M.T - omega))
