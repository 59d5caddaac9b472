"""Exception hierarchy shared across the engine.

Split along the CLI's exit-code contract: ``ValidationError`` (and its
subclasses) cover bad user input and map to exit code 2, everything else
raised from inside a run maps to exit code 3.
"""


class LinkerError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(LinkerError):
    """Operands with incompatible shapes reached a dense-math primitive."""


class DomainError(LinkerError):
    """A mathematical precondition was violated (empty mask, zero vector, ...)."""


class ValidationError(LinkerError):
    """User-supplied input (config, boxes, ratings, CLI args) failed validation."""


class ManifestError(ValidationError):
    """Base class for dataset manifest/blob problems."""


class SchemaViolation(ManifestError):
    """Manifest JSON does not match the expected schema."""


class BlobOffsetError(ManifestError):
    """A tensor record points outside the feature blob."""


class FeatureDimMismatch(ManifestError):
    """A stored tensor disagrees with the manifest-level dimensions."""


class UnresolvedCandidate(ManifestError):
    """A candidate entity id has no entry in the knowledge base."""


class CheckpointError(LinkerError):
    """Checkpoint file is malformed, truncated, or incompatible."""


class TrainError(LinkerError):
    """Training aborted (non-finite loss or gradient)."""
