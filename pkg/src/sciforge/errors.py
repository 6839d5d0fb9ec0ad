"""Exception types shared across the pipeline.

Stage code distinguishes three broad families: schema/content problems in
data we produced or parsed (SchemaError and friends), provider/transport
problems that are subject to retry (TransportError, RateLimited), and
infrastructure faults that should abort a run (ShimMissing, ProtocolError,
ConfigError, DependencyError).
"""

from __future__ import annotations


class SciforgeError(Exception):
    """Base class for every error raised by this package."""


# --- manifest / record schema ---------------------------------------------

class SchemaError(SciforgeError):
    """A record or parsed object violates its invariants.

    ``field`` names the offending field so callers can report precisely.
    """

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"schema violation: {field}")


class ParseError(SciforgeError):
    """A manifest line (or model response) could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateIdError(SciforgeError):
    def __init__(self, record_id: str, line: int):
        self.record_id = record_id
        self.line = line
        super().__init__(f"duplicate id {record_id!r} at line {line}")


# --- prompt templates / model-output parsing -------------------------------

class TemplateError(SciforgeError):
    """A prompt template placeholder was left unfilled or is malformed."""


class NoJsonFound(SciforgeError):
    """No balanced JSON object could be located in a model response."""


class TaxonomyError(SciforgeError):
    """A (category, image type) pair is not part of the taxonomy."""


class RangeError(SciforgeError):
    """A rubric score lies outside its allowed value set."""


class ExtractionFailure(SciforgeError):
    """Plan/code extraction from a model response failed (retryable)."""


class EmptyQuizError(SciforgeError):
    """The quiz generator returned an empty quiz list."""


class UnknownTypeError(SciforgeError):
    """A problem id has no image-type entry during density selection."""


# --- providers --------------------------------------------------------------

class TransportError(SciforgeError):
    """A provider call failed; retried with backoff up to the budget."""


class RateLimited(TransportError):
    """Provider asked us to back off; retried after the advised delay."""

    def __init__(self, message: str = "rate limited", retry_after: float = 1.0):
        self.retry_after = retry_after
        super().__init__(message)


class ImageDecodeError(SciforgeError):
    """An input image is missing or does not decode as PNG."""


class DimMismatchError(SciforgeError):
    """An embedding provider returned a vector of unexpected length."""


# --- executor / shim --------------------------------------------------------

class ShimMissing(SciforgeError):
    """The render shim command could not be resolved."""


class ProtocolError(SciforgeError):
    """The shim's response violated the wire protocol."""


# --- metrics ----------------------------------------------------------------

class DimMismatch(SciforgeError):
    """Operands have incompatible shapes or embedding dimensions."""


class TooSmall(SciforgeError):
    """An image is smaller than the operation's minimum size."""


class NotPSD(SciforgeError):
    """A covariance matrix is not positive semi-definite within tolerance."""


class TooFewSamples(SciforgeError):
    """Not enough samples to fit covariance statistics."""


class EmptySetError(SciforgeError):
    """An aggregate was requested over an empty collection."""


class JoinError(SciforgeError):
    """A record could not be joined to required companion data."""

    def __init__(self, record_id: str, message: str | None = None):
        self.record_id = record_id
        super().__init__(message or f"no join entry for id {record_id!r}")


# --- pipeline orchestration --------------------------------------------------

class DependencyError(SciforgeError):
    """An upstream stage output required by this stage is missing."""


class ConfigError(SciforgeError):
    """The pipeline configuration is invalid or incomplete."""
