"""Exception hierarchy shared by all urbantherm modules.

Errors that originate from bad data carry enough context (path, pixel
coordinates) to locate the offending input without re-running anything.
"""


class UrbanthermError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(UrbanthermError):
    """Invalid calibration constants, emissivity tables, or run configuration."""


class EmptyInputError(UrbanthermError):
    """An operation received no pixels, frames, or records to work on."""


class DimensionMismatchError(UrbanthermError):
    """Two rasters that must share a shape do not."""


class StateError(UrbanthermError):
    """Operation applied in the wrong order (e.g. double emissivity correction)."""


class RangeError(UrbanthermError):
    """A value maps outside its representable range.

    ``pixel`` is the first offending (y, x) coordinate when known.
    """

    def __init__(self, message, pixel=None):
        super().__init__(message)
        self.pixel = pixel


class FormatError(UrbanthermError):
    """A file on disk does not conform to its declared format."""

    def __init__(self, message, path=None, pixel=None):
        super().__init__(message)
        self.path = path
        self.pixel = pixel


class CatalogError(UrbanthermError):
    """The dataset catalog is inconsistent (e.g. duplicate view/timestamp)."""


class DegenerateResultError(UrbanthermError):
    """A metric has no defined value (no class present in either mask)."""
