"""Exception types shared across the engine."""


class UrbanSenseError(Exception):
    """Base class for all engine errors."""


class OutOfBoundsError(UrbanSenseError):
    """A point falls outside the bounding box it was indexed against."""


class UndefinedBearingError(UrbanSenseError):
    """Bearing requested between two identical points."""


class GazetteerFormatError(UrbanSenseError):
    """Malformed gazetteer input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvalidTemplateError(UrbanSenseError):
    """Incident template without a single literal token."""


class EventLogError(UrbanSenseError):
    """Malformed event log; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class MessageNotFoundError(UrbanSenseError):
    """Lookup of a message id that is not in the log."""


class InvalidCommunitySizeError(UrbanSenseError):
    """Community extraction asked for fewer than 2 members."""


class ScenarioError(UrbanSenseError):
    """Scenario spec is internally inconsistent (e.g. injection outside bbox)."""


class SinkError(UrbanSenseError):
    """A replay sink failed; carries the position of the failing message."""

    def __init__(self, message: str, position: int):
        super().__init__(f"sink failed at message {position}: {message}")
        self.position = position


class StoreCorruptError(UrbanSenseError):
    """Persistent snapshot failed validation; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset
