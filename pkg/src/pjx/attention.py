"""Normalized spatial attention maps.

An ``AttentionMap`` is an N x M grid of non-negative weights summing to 1.
Both attention heads, human-annotated ground truth and the pointing
baselines all live in this type; the metrics accept it directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .pgm import write_pgm
from .tensor import Tensor

SUM_TOL = 1e-6


@dataclass
class AttentionMap:
    values: np.ndarray
    # tape node holding the flattened weights, kept when produced by a model head
    tensor: Tensor | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractError(f"attention map must be 2-D, got shape {self.values.shape}")
        if np.any(self.values < 0):
            raise ContractError("attention map has negative entries")
        total = float(self.values.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ContractError(f"attention map mass is {total}, expected 1 +- {SUM_TOL}")

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def uniform(cls, n: int, m: int) -> "AttentionMap":
        return cls(np.full((n, m), 1.0 / (n * m)))

    @classmethod
    def one_hot(cls, n: int, m: int, row: int, col: int) -> "AttentionMap":
        grid = np.zeros((n, m))
        grid[row, col] = 1.0
        return cls(grid)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "AttentionMap":
        """Uniform mass over the truthy cells; an all-zero mask maps to uniform."""
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return cls.uniform(*mask.shape)
        grid = mask.astype(np.float64)
        return cls(grid / grid.sum())

    def hottest_cell(self) -> tuple[int, int]:
        """(row, col) of the maximal weight; ties break to the lowest flat index."""
        flat = int(np.argmax(self.values))
        return divmod(flat, self.values.shape[1])

    def to_pgm(self, path, upscale: int = 1):
        """Export as a graymap scaled so the hottest cell is exactly 255."""
        grid = self.values
        peak = grid.max()
        pixels = np.zeros_like(grid) if peak <= 0 else grid / peak * 255.0
        pixels = np.rint(pixels).astype(np.int64)
        pixels[self.hottest_cell()] = 255  # rounding must not lose the peak
        if upscale > 1:
            pixels = np.kron(pixels, np.ones((upscale, upscale), dtype=np.int64))
        write_pgm(path, pixels)
