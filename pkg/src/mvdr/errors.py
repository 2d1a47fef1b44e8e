"""Exception types raised across the engine.

Everything derives from :class:`MvdrError` so callers (notably the CLI)
can distinguish engine/data failures from programming errors.
"""


class MvdrError(Exception):
    """Base class for all engine errors."""


# numeric primitives

class EmptyInput(MvdrError):
    """An operation that needs at least one value received none."""


class ShapeError(MvdrError):
    """Matrix/vector dimensions do not line up."""


class DegenerateVector(MvdrError):
    """A zero-norm vector where a direction is required."""


class NotADistribution(MvdrError):
    """Entries are negative or do not sum to 1."""


# container formats

class BadMagic(MvdrError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(MvdrError):
    """File carries a format version this reader does not know."""


class TruncatedFile(MvdrError):
    """File ended in the middle of a record."""


class InvariantViolation(MvdrError):
    """A record violates a structural invariant.

    Carries the offending document/query id and field name when known.
    """

    def __init__(self, message: str, doc_id: str | None = None, field: str | None = None):
        if doc_id is not None or field is not None:
            message = f"{message} (id={doc_id!r}, field={field!r})"
        super().__init__(message)
        self.doc_id = doc_id
        self.field = field


class ParseError(MvdrError):
    """A text input (qrels) could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


# importance

class MissingImportanceSource(MvdrError):
    """Document has neither precomputed importance nor head attention."""


class DegenerateAttention(MvdrError):
    """All-zero importance cannot be normalized into a distribution."""


# pruning / merging

class MissingGlobalEmbedding(MvdrError):
    """Method needs the global-token embedding and the record lacks it."""


class MissingGrid(MvdrError):
    """Method needs grid dimensions and the record lacks them."""


class BadFactor(MvdrError):
    """Merging factor is invalid for the chosen method."""


class UnsupportedMethod(MvdrError):
    """Unknown method tag in a config."""


# retrieval / evaluation

class EmptyDocument(MvdrError):
    """Scoring against a document with zero vectors."""


class EmptyCorpus(MvdrError):
    """Ranking over an empty corpus."""


class EmptyGrid(MvdrError):
    """Sweep invoked with no configurations."""
