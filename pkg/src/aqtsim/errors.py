"""Exception hierarchy shared by the library and the CLI."""


class AQTError(Exception):
    """Base class for all errors raised by aqtsim."""


class DomainError(AQTError, ValueError):
    """A parameter lies outside its allowed range."""


class DimensionError(AQTError, ValueError):
    """Operands have incompatible shapes or mode counts."""


class PlanningError(AQTError):
    """The feedforward cannot be planned (singular or ill-conditioned block)."""


class ModelError(AQTError):
    """A physical converter model does not yield a valid symplectic matrix."""


class ConsistencyError(AQTError):
    """An internal invariant was violated (e.g. effective map not symplectic)."""


class NumericalError(AQTError):
    """A numerical step broke down (e.g. non-positive conditioning variance)."""


class TruncationError(AQTError):
    """Fock-space truncation left too much probability outside the cutoff."""


class ConfigError(AQTError, ValueError):
    """Invalid simulation or CLI configuration."""
