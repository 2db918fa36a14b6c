"""Exception hierarchy.

Every error raised on purpose by the package derives from ``HilbtrimError``,
which is itself a ``ValueError`` so callers that only care about bad input can
catch that.
"""


class HilbtrimError(ValueError):
    """Base class for all package errors."""


class InvalidGridError(HilbtrimError):
    pass


class DimensionError(HilbtrimError):
    pass


class InvalidSampleError(HilbtrimError):
    pass


class InvalidAlphaError(HilbtrimError):
    pass


class InvalidConfigError(HilbtrimError):
    pass


class DegenerateTrimError(HilbtrimError):
    """All trimming weights vanished, or a required subset is empty."""


class BreakdownHypothesisError(HilbtrimError):
    pass


class DatasetParseError(HilbtrimError):
    """Malformed dataset file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = str(path)
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class SimConfigError(HilbtrimError):
    """Malformed simulation config; ``field`` is the offending path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
