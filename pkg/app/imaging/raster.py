"""Raster, region mask and patch types shared by every stage"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from app.errors import DimensionMismatchError, ImageIOError, PatchBoundsError

logger = logging.getLogger(__name__)

_CROSS = ndimage.generate_binary_structure(2, 1)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class RasterImage:
    """H x W x 3 float image with samples in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64, copy=True)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"expected an H x W x 3 array, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("image must be at least 1 x 1")
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("samples must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(pixels))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def with_pixels(self, pixels: np.ndarray) -> "RasterImage":
        return RasterImage(pixels)

    @classmethod
    def load(cls, path: Path) -> "RasterImage":
        """Decode an 8-bit PNG, dropping alpha, mapped linearly to [0, 1]."""
        try:
            with Image.open(path) as handle:
                data = np.asarray(handle.convert("RGB"), dtype=np.float64) / 255.0
        except (OSError, ValueError) as exc:
            raise ImageIOError(f"cannot read image {path}: {exc}") from exc
        return cls(data)

    def save(self, path: Path) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            data = np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(data, mode="RGB").save(path, format="PNG")
        except OSError as exc:
            raise ImageIOError(f"cannot write image {path}: {exc}") from exc


@dataclass(frozen=True)
class RegionMask:
    """Per-pixel membership of the target region (True = unknown)."""

    inside: np.ndarray

    def __post_init__(self):
        inside = np.array(self.inside, dtype=bool, copy=True)
        if inside.ndim != 2 or inside.size == 0:
            raise ValueError(f"expected a non-empty H x W mask, got shape {inside.shape}")
        object.__setattr__(self, "inside", _frozen(inside))

    @property
    def width(self) -> int:
        return self.inside.shape[1]

    @property
    def height(self) -> int:
        return self.inside.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def known(self) -> np.ndarray:
        return ~self.inside

    @property
    def is_empty(self) -> bool:
        return not self.inside.any()

    @property
    def is_full(self) -> bool:
        return bool(self.inside.all())

    @property
    def unknown_count(self) -> int:
        return int(self.inside.sum())

    def boundary(self) -> np.ndarray:
        """Known pixels 4-adjacent to at least one unknown pixel."""
        grown = ndimage.binary_dilation(self.inside, structure=_CROSS)
        return grown & ~self.inside

    def boundary_pixels(self) -> List[Tuple[int, int]]:
        """Boundary as (x, y) pairs in row-major order."""
        ys, xs = np.nonzero(self.boundary())
        return list(zip(xs.tolist(), ys.tolist()))

    def check_matches(self, image: RasterImage, label: str = "mask") -> None:
        if self.shape != image.shape:
            raise DimensionMismatchError(
                f"{label} is {self.width}x{self.height} but image is {image.width}x{image.height}"
            )

    def with_filled(self, filled: np.ndarray) -> "RegionMask":
        """Copy of the mask with the given pixels marked known."""
        return RegionMask(self.inside & ~np.asarray(filled, dtype=bool))

    @classmethod
    def load(cls, path: Path) -> "RegionMask":
        """Any nonzero sample in any channel marks the pixel as unknown."""
        try:
            with Image.open(path) as handle:
                data = np.asarray(handle.convert("RGB"))
        except (OSError, ValueError) as exc:
            raise ImageIOError(f"cannot read mask {path}: {exc}") from exc
        return cls(data.any(axis=2))

    def save(self, path: Path) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(self.inside.astype(np.uint8) * 255, mode="L").save(path, format="PNG")
        except OSError as exc:
            raise ImageIOError(f"cannot write mask {path}: {exc}") from exc


@dataclass(frozen=True)
class Patch:
    """Square footprint of odd side 2 * half_extent + 1 centered at (x, y)."""

    center: Tuple[int, int]
    half_extent: int

    def __post_init__(self):
        if self.half_extent < 1:
            raise ValueError(f"patch side must be odd and >= 3, half extent {self.half_extent}")
        object.__setattr__(self, "center", (int(self.center[0]), int(self.center[1])))

    @classmethod
    def of_side(cls, center: Tuple[int, int], side: int) -> "Patch":
        if side < 3 or side % 2 == 0:
            raise ValueError(f"patch side must be odd and >= 3, got {side}")
        return cls(center, (side - 1) // 2)

    @property
    def side(self) -> int:
        return 2 * self.half_extent + 1

    @property
    def rows(self) -> slice:
        y = self.center[1]
        return slice(y - self.half_extent, y + self.half_extent + 1)

    @property
    def cols(self) -> slice:
        x = self.center[0]
        return slice(x - self.half_extent, x + self.half_extent + 1)

    def fits(self, width: int, height: int) -> bool:
        x, y = self.center
        h = self.half_extent
        return h <= x < width - h and h <= y < height - h

    def clamped(self, width: int, height: int) -> "Patch":
        """Shift the center inward so the footprint lies inside the image."""
        h = self.half_extent
        if width < self.side or height < self.side:
            raise PatchBoundsError(
                f"image {width}x{height} is smaller than a {self.side}px patch", self.center
            )
        x = min(max(self.center[0], h), width - 1 - h)
        y = min(max(self.center[1], h), height - 1 - h)
        return Patch((x, y), h)


@dataclass(frozen=True)
class PatchSamples:
    """Samples of one patch: values, known flags and footprint validity."""

    values: np.ndarray  # (l, l, 3)
    known: np.ndarray  # (l, l) bool
    valid: np.ndarray  # (l, l) bool; False where a resampled source fell outside the footprint

    @property
    def side(self) -> int:
        return self.values.shape[0]

    @property
    def usable(self) -> np.ndarray:
        return self.known & self.valid


def extract_patch(image: RasterImage, mask: RegionMask, patch: Patch) -> PatchSamples:
    """Read l*l samples; a sample is unknown iff its pixel lies in the target region."""
    mask.check_matches(image)
    if not patch.fits(image.width, image.height):
        x, y = patch.center
        h = patch.half_extent
        bad_x = x - h if x - h < 0 else x + h
        bad_y = y - h if y - h < 0 else y + h
        offending = (
            bad_x if not 0 <= bad_x < image.width else x,
            bad_y if not 0 <= bad_y < image.height else y,
        )
        raise PatchBoundsError(
            f"patch centered at ({x}, {y}) reaches pixel {offending} outside "
            f"{image.width}x{image.height}",
            offending,
        )
    values = image.pixels[patch.rows, patch.cols].copy()
    known = mask.known[patch.rows, patch.cols].copy()
    return PatchSamples(values=values, known=known, valid=np.ones_like(known))
