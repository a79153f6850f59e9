"""Position-embedding adaptation for variable patch grids.

Patch (w, h) on a W_p x H_p grid maps to its cell centre in [-1, 1]; the
adapted embedding samples the original table there with bicubic (cubic
convolution) interpolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rlcs import kernels
from rlcs._pykernels import cubic_kernel


class CoordOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class PatchGrid:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("patch grid dimensions must be positive")


def as_table(values) -> np.ndarray:
    """Validate an (H, W, D) embedding table; (H, W) is promoted to D = 1."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"embedding table must be H x W x D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding table has non-finite values")
    return arr


def normalize_coords(grid: PatchGrid, w: int, h: int) -> tuple[float, float]:
    if not (0 <= w < grid.width and 0 <= h < grid.height):
        raise CoordOutOfRange(f"patch ({w}, {h}) outside {grid.width} x {grid.height} grid")
    return 2.0 * (w + 0.5) / grid.width - 1.0, 2.0 * (h + 0.5) / grid.height - 1.0


def _to_pixel(u: float, n: int) -> float:
    return (u + 1.0) * 0.5 * n - 0.5


def _axis_taps(x: float, n: int, a: float):
    x0 = math.floor(x)
    t = x - x0
    return [(min(max(x0 - 1 + k, 0), n - 1), cubic_kernel(t - (k - 1), a)) for k in range(4)]


def bicubic_sample(table, coord_norm: tuple[float, float], a: float = -0.5) -> np.ndarray:
    """Interpolate the table at a normalized (w, h) coordinate.

    Catmull-Rom weights (a = -0.5) over the 4 x 4 neighbourhood, indices
    clamped at the edges, each embedding dimension independently.
    """
    table = as_table(table)
    u, v = coord_norm
    if not (-1.0 <= u <= 1.0 and -1.0 <= v <= 1.0):
        raise CoordOutOfRange(f"normalized coordinate {coord_norm} outside [-1, 1]")
    h, w, _ = table.shape
    out = np.zeros(table.shape[2])
    for iy, wy in _axis_taps(_to_pixel(v, h), h, a):
        for ix, wx in _axis_taps(_to_pixel(u, w), w, a):
            out += wy * wx * table[iy, ix]
    return out


def adapt_table(table, target: PatchGrid, a: float = -0.5) -> np.ndarray:
    """Resample the whole table onto the target patch grid."""
    table = as_table(table)
    return kernels.cubic_resample(table, target.height, target.width, a)
