"""Exception types shared across the toolkit."""


class LintraError(Exception):
    """Base class for errors raised by this package."""


class DataMismatchError(LintraError):
    """Two datasets that must line up (shapes, ids) do not."""


class AlignmentError(LintraError):
    """The correspondence search degenerated and the map fit was aborted."""


class ModelFormatError(LintraError):
    """A model file is malformed, truncated, or fails validation."""
