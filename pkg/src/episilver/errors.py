"""Exception taxonomy for the pipeline.

Three broad families map onto the CLI exit codes: configuration
problems (exit 2), data problems (exit 3), training problems (exit 4).
A failing stage tags the exception with its stage name so the CLI can
emit a machine-readable error record.
"""


class PipelineError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class ConfigError(PipelineError):
    exit_code = 2


class DataError(PipelineError):
    exit_code = 3


class TrainingError(PipelineError):
    exit_code = 4


class ParseError(DataError):
    """Malformed input line; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class SchemaError(DataError):
    """Structurally valid JSON that is missing required tweet fields."""


class PatternError(ConfigError):
    """A labeling rule whose regular expression does not compile."""


class InsufficientNegativesError(DataError):
    """Fewer qualifying non-epidemic documents than requested."""

    def __init__(self, needed: int, available: int):
        super().__init__(
            f"need {needed} non-epidemic documents, found {available} "
            f"(shortfall {needed - available})"
        )
        self.needed = needed
        self.available = available
        self.shortfall = needed - available


class BalanceError(DataError):
    """Negative count does not equal the sum of positive counts."""


class DuplicateTextError(DataError):
    """Two dataset examples share the same normalized text."""


class FitError(DataError):
    """Vectorizer fit found no usable tokens."""


class DegenerateLabelsError(TrainingError):
    """Fewer than two distinct classes in the training labels."""


class DivergenceError(TrainingError):
    """Optimizer produced a non-finite loss."""


class ShapeError(DataError):
    """Vector dimension does not match the model."""


class StratificationError(DataError):
    """A class has too few members to split."""


class InputError(DataError):
    """Invalid metric input: length mismatch, unknown label, bad format."""
