"""Gaussian phase-space simulation of direct and adaptive quantum transduction."""

__version__ = "0.1.0"

from .errors import (
    AQTError,
    ConfigError,
    ConsistencyError,
    DimensionError,
    DomainError,
    ModelError,
    NumericalError,
    PlanningError,
    TruncationError,
)
from .gaussian import (
    AncillaSpec,
    GaussianState,
    apply_symplectic,
    coherent,
    condition_on_homodyne,
    entropy,
    epr,
    fidelity_same_dim,
    make_state,
    squeezed,
    symplectic_eigenvalues,
    tensor,
    thermal,
    vacuum,
)
from .metrics import (
    CapacityEstimate,
    average_coherent_fidelity,
    capacity_lower_bound,
    capacity_threshold,
    coherent_information,
    coherent_state_fidelity,
    dqt_fidelity,
)
from .symplectic import (
    ModePartition,
    SymplecticMatrix,
    beam_splitter,
    compose,
    inverse,
    is_symplectic,
    matching_defect,
    partition_blocks,
    random_symplectic,
    two_mode_squeezer,
)
from .trajectory import EmpiricalChannel, TrajectoryConfig, run_trajectories
from .transducer import (
    AQTPlan,
    BeamSplitter,
    Custom,
    EffectiveChannel,
    ImperfectionParams,
    PhysicalCavity,
    TwoModeSqueezer,
    aqt_channel,
    dqt_channel,
    effective_scattering,
    noise_covariance,
    plan_feedforward,
    resolve_scattering,
)

__all__ = [
    "EmpiricalChannel",
    "TrajectoryConfig",
    "run_trajectories",
    "AQTError",
    "ConfigError",
    "ConsistencyError",
    "DimensionError",
    "DomainError",
    "ModelError",
    "NumericalError",
    "PlanningError",
    "TruncationError",
    "AncillaSpec",
    "GaussianState",
    "apply_symplectic",
    "coherent",
    "condition_on_homodyne",
    "entropy",
    "epr",
    "fidelity_same_dim",
    "make_state",
    "squeezed",
    "symplectic_eigenvalues",
    "tensor",
    "thermal",
    "vacuum",
    "CapacityEstimate",
    "average_coherent_fidelity",
    "capacity_lower_bound",
    "capacity_threshold",
    "coherent_information",
    "coherent_state_fidelity",
    "dqt_fidelity",
    "ModePartition",
    "SymplecticMatrix",
    "beam_splitter",
    "compose",
    "inverse",
    "is_symplectic",
    "matching_defect",
    "partition_blocks",
    "random_symplectic",
    "two_mode_squeezer",
    "AQTPlan",
    "BeamSplitter",
    "Custom",
    "EffectiveChannel",
    "ImperfectionParams",
    "PhysicalCavity",
    "TwoModeSqueezer",
    "aqt_channel",
    "dqt_channel",
    "effective_scattering",
    "noise_covariance",
    "plan_feedforward",
    "resolve_scattering",
]
