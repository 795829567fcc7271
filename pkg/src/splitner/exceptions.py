"""Custom exceptions for the splitner package."""


class SplitNerException(Exception):
    """Base exception for all splitner errors."""

    pass


class CorpusParseError(SplitNerException):
    """Raised when a CoNLL corpus cannot be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        """Initialize the error.

        Args:
            message: Description of the problem
            line_number: 1-based line number in the source text
        """
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TagSequenceError(SplitNerException):
    """Raised when a tag sequence or mention set violates the tagging scheme."""

    pass


class InvalidSpanError(SplitNerException):
    """Raised when a mention span lies outside its sentence."""

    pass


class VocabularyError(SplitNerException):
    """Raised when a vocabulary cannot be built, loaded or applied."""

    pass


class FeatureError(SplitNerException):
    """Raised when a feature extractor receives unusable input."""

    pass


class ShapeMismatchError(SplitNerException):
    """Raised when a layer receives inputs of incompatible shapes."""

    def __init__(self, operation: str, *shapes: tuple[int, ...]) -> None:
        """Initialize the error.

        Args:
            operation: Name of the layer or loss that rejected its inputs
            *shapes: The offending input shapes
        """
        rendered = ", ".join(str(tuple(shape)) for shape in shapes)
        super().__init__(f"{operation}: incompatible shapes {rendered}")
        self.operation = operation
        self.shapes = shapes


class LossError(SplitNerException):
    """Raised when a loss receives out-of-range targets or parameters."""

    pass


class TrainingDivergedError(SplitNerException):
    """Raised when a loss or gradient becomes NaN during training."""

    pass


class CheckpointError(SplitNerException):
    """Raised when a checkpoint is malformed or does not match a model."""

    pass


class ModelMismatchError(SplitNerException):
    """Raised when models combined in a pipeline disagree on vocab or types."""

    pass


class ConfigurationError(SplitNerException):
    """Raised when there is a configuration error."""

    pass


class SyntheticSpecError(SplitNerException):
    """Raised when a synthetic corpus type specification is invalid."""

    pass
