"""Exception types shared across the package."""


class Music2ImageError(Exception):
    """Base class for every error this package raises on purpose."""


# --- corpus ingestion ---

class MalformedRow(Music2ImageError):
    """A CSV row with bad arity or a non-numeric field."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonMonotonicTime(Music2ImageError):
    """Frame timestamps within one track regressed or repeated."""

    def __init__(self, track_id: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"track {track_id!r}: time_ms not strictly increasing{where}")
        self.track_id = track_id
        self.line = line


class EmptyInput(Music2ImageError):
    pass


class DegenerateRange(Music2ImageError):
    pass


class SchemaViolation(Music2ImageError):
    def __init__(self, reason: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")
        self.line = line
        self.reason = reason


class DuplicateId(Music2ImageError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate id {record_id!r}")
        self.record_id = record_id


class DimensionMismatch(Music2ImageError):
    pass


class OutOfRange(Music2ImageError):
    pass


# --- regression head and statistics ---

class SingularSystem(Music2ImageError):
    pass


class ShapeMismatch(Music2ImageError):
    pass


class ConstantInput(Music2ImageError):
    pass


class LengthMismatch(Music2ImageError):
    pass


# --- metrics engine ---

class EmptyCorpus(Music2ImageError):
    pass


class EmptyUnion(Music2ImageError):
    pass


class ZeroVector(Music2ImageError):
    pass


# --- agent pipeline ---

class UnparseableOutput(Music2ImageError):
    pass


class InsufficientDiversity(Music2ImageError):
    pass


class ValidationUnrecoverable(Music2ImageError):
    pass


class UnknownAgent(Music2ImageError):
    pass


# --- backends ---

class BackendError(Music2ImageError):
    """Base for failures talking to an external model backend."""


class BackendUnavailable(BackendError):
    pass


class Timeout(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


class ContentRejected(BackendError):
    pass


class UnknownRole(BackendError):
    pass


# --- configuration / CLI ---

class ConfigError(Music2ImageError):
    pass
