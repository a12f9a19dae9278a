import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from app.config import PipelineConfig
from app.imaging.raster import RasterImage, RegionMask


def _gray(plane) -> RasterImage:
    """Grayscale plane replicated into an RGB image."""
    plane = np.asarray(plane, dtype=np.float64)
    return RasterImage(np.repeat(plane[..., None], 3, axis=2))


@pytest.fixture
def cfg() -> PipelineConfig:
    """Default tunables, independent of any .env file."""
    return PipelineConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def step_image() -> RasterImage:
    """Vertical black/white step between columns 15 and 16 on a 32 x 32 grid."""
    plane = np.zeros((32, 32))
    plane[:, 16:] = 1.0
    return _gray(plane)


@pytest.fixture
def empty_mask() -> RegionMask:
    return RegionMask(np.zeros((32, 32), dtype=bool))


@pytest.fixture
def gray():
    """Factory turning a 2-D plane into an RGB image."""
    return _gray
