from app.imaging.histogram import ColorHistogram, histogram_of
from app.imaging.raster import (
    Patch,
    PatchSamples,
    RasterImage,
    RegionMask,
    extract_patch,
)
from app.imaging.rotation import rotate_resample

__all__ = [
    "ColorHistogram",
    "Patch",
    "PatchSamples",
    "RasterImage",
    "RegionMask",
    "extract_patch",
    "histogram_of",
    "rotate_resample",
]
