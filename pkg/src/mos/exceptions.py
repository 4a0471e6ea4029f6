"""Exception types shared across the package.

Each maps to one failure family; the CLI translates them to exit codes.
"""


class MosError(Exception):
    """Base class for all package errors."""


class DomainError(MosError):
    """Numeric input outside the mathematical domain of an operation."""


class ArgumentError(MosError):
    """Structurally invalid argument (bad shape, out-of-range count)."""


class EmbeddingLookupError(MosError):
    """Item id outside the embedding table."""


class RoutingError(MosError):
    """Router could not score an input (e.g. zero-norm projection)."""


class InitializationError(MosError):
    """Codebook initialization failed (degenerate sample)."""


class TrainingDiverged(MosError):
    """Non-finite loss or gradient encountered during training."""

    def __init__(self, batch_index: int, parameter: str):
        self.batch_index = batch_index
        self.parameter = parameter
        super().__init__(
            f"non-finite value in batch {batch_index} (first offender: {parameter})"
        )


class DataFormatError(MosError):
    """Malformed dataset file."""


class ConfigError(MosError):
    """Invalid or unknown run-configuration key/value."""


class CompatibilityError(MosError):
    """Checkpoint and dataset do not fit together (e.g. vocab mismatch)."""


class MetricUndefinedError(MosError):
    """Requested metric is undefined for the given inputs."""


class CheckpointError(MosError):
    """Corrupt or unreadable checkpoint container."""
