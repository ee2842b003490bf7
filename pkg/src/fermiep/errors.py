"""Exception types shared across the package."""


class FermiepError(Exception):
    """Base class for all package errors."""


class NoSolutionError(FermiepError):
    """No exceptional twist exists for the given mass parameter."""


class DimensionMismatchError(FermiepError):
    """Array argument has the wrong length or shape."""


class InvalidFillingError(FermiepError):
    """Particle number outside 0 < N <= 2L."""


class LabelingMismatchError(FermiepError):
    """Operation requires the other (momentum/real-space) mode labeling."""


class NotTranslationInvariantError(FermiepError):
    """Momentum sectors requested for a disordered model."""


class EigensolveFailureError(FermiepError):
    """Dense eigensolver backend did not converge."""


class AmbiguousClusteringError(FermiepError):
    """Eigenvalue cluster diameters too close to the cluster tolerance."""


class ParityMismatchError(FermiepError):
    """Effective-Hamiltonian kind incompatible with L or k+q parity."""


class DefectiveCoefficientError(FermiepError):
    """A square-root coefficient vanishes; generalized states are required."""


class DefectiveInputError(FermiepError):
    """Requested eigenstate is defective at these parameters."""


class StepTooCoarseError(FermiepError):
    """Continuation step violated the continuity bound."""


class DegenerateFormulaError(FermiepError):
    """Closed-form prediction is exactly degenerate (division by zero)."""


class ConfigError(FermiepError):
    """Invalid or inconsistent run configuration."""
