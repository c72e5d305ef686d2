"""Exception types shared across the package."""


class FwoptError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(FwoptError):
    """Operands have incompatible shapes or an operation got the wrong kind of operand."""


class InvalidNormError(FwoptError):
    """Requested norm does not apply to the given operand kind."""


class NumericalError(FwoptError):
    """A computation produced NaN/Inf or failed to converge."""


class FeasibilityError(FwoptError):
    """An iterate left the constraint set beyond tolerance."""


class DegenerateInputError(FwoptError):
    """Input (e.g. the zero matrix) has no well-defined result."""


class MappingDomainError(FwoptError):
    """Optimizer parameters fall outside the domain of an equivalence mapping."""


class ProvenanceError(FwoptError):
    """A sample handle was replayed against an oracle it did not come from."""


class ConfigError(FwoptError):
    """Experiment configuration is malformed or fails validation."""
