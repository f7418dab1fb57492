"""Exception types shared across the toolkit."""


class PpkitError(Exception):
    """Base class for all toolkit errors."""


class TaxonomyError(PpkitError):
    """Invalid taxonomy file or unknown concept id."""


class ExtractionError(PpkitError):
    """HTML pipeline precondition not met."""


class SchemaError(PpkitError):
    """Document violates the policy XML schema."""


class CorpusError(PpkitError):
    """Corpus directory or annotation problem."""


class FeatureError(PpkitError):
    """Feature resource missing or malformed."""


class TrainingError(PpkitError):
    """Training preconditions not met."""


class EvaluationError(PpkitError):
    """Prediction/gold mismatch or malformed report inputs."""
