"""Square-window sums over whole rasters"""
from __future__ import annotations

import numpy as np


def box_sum(values: np.ndarray, half: int) -> np.ndarray:
    """Sum of values over the (2h+1)^2 window around each pixel, clipped at the border."""
    height, width = values.shape
    table = np.zeros((height + 1, width + 1), dtype=np.float64)
    table[1:, 1:] = np.cumsum(np.cumsum(values.astype(np.float64), axis=0), axis=1)
    rows = np.arange(height)
    cols = np.arange(width)
    top = np.clip(rows - half, 0, height)[:, None]
    bottom = np.clip(rows + half + 1, 0, height)[:, None]
    left = np.clip(cols - half, 0, width)[None, :]
    right = np.clip(cols + half + 1, 0, width)[None, :]
    return table[bottom, right] - table[top, right] - table[bottom, left] + table[top, left]


def fully_known_centers(inside: np.ndarray, half: int) -> np.ndarray:
    """Centers whose whole patch lies in the image and holds no unknown pixel."""
    height, width = inside.shape
    unknown = box_sum(inside.astype(np.float64), half)
    centers = unknown < 0.5
    centers[:half, :] = False
    centers[height - half:, :] = False
    centers[:, :half] = False
    centers[:, width - half:] = False
    return centers
