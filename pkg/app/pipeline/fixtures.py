"""Deterministic synthetic scenes with known ground truth"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np
from skimage import draw

from app.imaging.raster import RasterImage, RegionMask

FIXTURE_KINDS = ("kanizsa", "stripes", "two-region", "checkerboard", "circle-step")
MIN_SIZE = 64


@dataclass(frozen=True)
class FixtureScene:
    """Input image (target region painted over), mask and pristine ground truth."""

    kind: str
    image: RasterImage
    mask: RegionMask
    truth: RasterImage
    meta: Dict[str, object]

    def save(self, directory: Path, stem: str = None) -> Tuple[Path, Path, Path]:
        directory = Path(directory)
        stem = stem or self.kind
        paths = (
            directory / f"{stem}.png",
            directory / f"{stem}_mask.png",
            directory / f"{stem}_truth.png",
        )
        self.image.save(paths[0])
        self.mask.save(paths[1])
        self.truth.save(paths[2])
        return paths


def _gray(plane: np.ndarray) -> np.ndarray:
    return np.repeat(plane[..., None], 3, axis=2)


def _scene(kind: str, truth: np.ndarray, inside: np.ndarray, fill: float, meta) -> FixtureScene:
    shown = truth.copy()
    shown[inside] = fill
    return FixtureScene(
        kind=kind,
        image=RasterImage(shown),
        mask=RegionMask(inside),
        truth=RasterImage(truth),
        meta=meta,
    )


def kanizsa(size: int, rng: np.random.Generator) -> FixtureScene:
    """Three black discs on white; the triangle joining their centers is the target region."""
    side = 0.54 * size
    radius = int(round(0.14 * size))
    shift = rng.integers(-2, 3, size=2)
    cx = size / 2.0 + float(shift[0])
    cy = size / 2.0 + 0.06 * size + float(shift[1])
    circumradius = side / math.sqrt(3.0)
    vertices = [
        (cx + circumradius * math.cos(angle), cy + circumradius * math.sin(angle))
        for angle in (-math.pi / 2, math.pi / 6, 5 * math.pi / 6)
    ]
    plane = np.ones((size, size))
    for x, y in vertices:
        rr, cc = draw.disk((y, x), radius, shape=plane.shape)
        plane[rr, cc] = 0.0
    inside = np.zeros((size, size), dtype=bool)
    rr, cc = draw.polygon([v[1] for v in vertices], [v[0] for v in vertices], shape=plane.shape)
    inside[rr, cc] = True
    meta = {"discs": [(round(x, 3), round(y, 3)) for x, y in vertices], "radius": radius}
    return _scene("kanizsa", _gray(plane), inside, 1.0, meta)


def stripes(size: int, rng: np.random.Generator) -> FixtureScene:
    """Vertical stripes of period 16 with a 48 x 48 central target region."""
    phase = int(rng.integers(0, 16))
    xs = np.arange(size)
    row = np.where(((xs + phase) // 8) % 2 == 0, 0.85, 0.15)
    plane = np.tile(row, (size, 1))
    inside = np.zeros((size, size), dtype=bool)
    start = (size - 48) // 2
    inside[start:start + 48, start:start + 48] = True
    return _scene("stripes", _gray(plane), inside, 0.5, {"phase": phase, "period": 16})


def two_region(size: int, rng: np.random.Generator) -> FixtureScene:
    """Dark top half, bright bottom half, square target region straddling the boundary."""
    boundary = size // 2 + int(rng.integers(-4, 5))
    plane = np.full((size, size), 0.9)
    plane[:boundary, :] = 0.1
    inside = np.zeros((size, size), dtype=bool)
    half = size // 8
    center = size // 2
    inside[boundary - half:boundary + half, center - half:center + half] = True
    return _scene("two-region", _gray(plane), inside, 0.5, {"boundary_row": boundary})


def checkerboard(size: int, rng: np.random.Generator) -> FixtureScene:
    """Checkerboard of 4 px cells with a small central target region."""
    cell = 4
    dx, dy = (int(v) for v in rng.integers(0, 2 * cell, size=2))
    ys, xs = np.mgrid[0:size, 0:size]
    plane = np.where((((xs + dx) // cell) + ((ys + dy) // cell)) % 2 == 0, 0.2, 0.8)
    inside = np.zeros((size, size), dtype=bool)
    start = size // 2 - 4
    inside[start:start + 8, start:start + 8] = True
    return _scene("checkerboard", _gray(plane.astype(np.float64)), inside, 0.5, {"cell": cell})


def circle_step(size: int, rng: np.random.Generator) -> FixtureScene:
    """Vertical step edge crossed by a circular target region."""
    column = size // 2 + int(rng.integers(-3, 4))
    plane = np.full((size, size), 0.2)
    plane[:, column:] = 0.8
    inside = np.zeros((size, size), dtype=bool)
    rr, cc = draw.disk((size / 2.0, column - 0.5), size / 8.0, shape=plane.shape)
    inside[rr, cc] = True
    return _scene("circle-step", _gray(plane), inside, 0.5, {"step_column": column})


_BUILDERS: Dict[str, Callable[[int, np.random.Generator], FixtureScene]] = {
    "kanizsa": kanizsa,
    "stripes": stripes,
    "two-region": two_region,
    "checkerboard": checkerboard,
    "circle-step": circle_step,
}


def generate_fixture(kind: str, size: int = 256, seed: int = 0) -> FixtureScene:
    """Build one synthetic scene; the same (kind, size, seed) always gives the same pixels."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown fixture kind {kind!r}; choose from {', '.join(FIXTURE_KINDS)}")
    if size < MIN_SIZE:
        raise ValueError(f"fixture size must be >= {MIN_SIZE}, got {size}")
    return _BUILDERS[kind](size, np.random.default_rng(seed))
