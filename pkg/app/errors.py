import typing as _t


class InpaintError(Exception):
    """Base error for completion operations."""

    exit_code: int = 1


class ImageIOError(InpaintError):
    """Image or mask file could not be read or written."""

    exit_code = 2


class DimensionMismatchError(InpaintError):
    """Image and mask (or field and mask) sizes disagree."""

    exit_code = 3


class EmptyRegionError(InpaintError):
    """Nothing to fill, or nothing known to fill from."""

    exit_code = 4


class SourceExhaustedError(InpaintError):
    """No fully-known exemplar patch is left to copy from."""

    exit_code = 5


class PatchBoundsError(InpaintError):
    """Patch footprint leaves the image."""

    coordinate: _t.Tuple[int, int]

    def __init__(self, message: str, coordinate: _t.Tuple[int, int]):
        super().__init__(message)
        self.coordinate = coordinate


class HistogramMismatchError(InpaintError):
    """Histograms with different bin layouts were compared."""


class DegenerateGeometryError(InpaintError):
    """Coincident points or zero-length geometry."""


class ConfigError(InpaintError):
    """Tunable failed validation."""


def classify_exit_code(exc: BaseException) -> int:
    if isinstance(exc, InpaintError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return ImageIOError.exit_code
    return 1
