"""Spatial feature grids and their on-disk format.

File layout (little-endian): magic b"PJXF", then C, N, M as u64, then
C*N*M float64 values in row-major (channel, row, col) order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError

MAGIC = b"PJXF"


@dataclass
class SpatialFeatures:
    """A channels x rows x cols feature grid plus where it came from."""

    grid: np.ndarray
    source: str = "synthetic"  # "file" | "synthetic"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 3:
            raise ContractError(f"features must be C x N x M, got shape {self.grid.shape}")
        if min(self.grid.shape) < 1:
            raise ContractError(f"feature dims must be >= 1, got {self.grid.shape}")
        if not np.isfinite(self.grid).all():
            raise ContractError("features contain non-finite values")

    @property
    def channels(self) -> int:
        return self.grid.shape[0]

    @property
    def rows(self) -> int:
        return self.grid.shape[1]

    @property
    def cols(self) -> int:
        return self.grid.shape[2]

    def as_rows(self) -> np.ndarray:
        """(N*M, C) view with location index l = row * cols + col."""
        c, n, m = self.grid.shape
        return self.grid.reshape(c, n * m).T.copy()


def save_features(path, feats: SpatialFeatures):
    c, n, m = feats.grid.shape
    payload = MAGIC + struct.pack("<3Q", c, n, m) + feats.grid.astype("<f8").tobytes()
    Path(path).write_bytes(payload)


def load_features(path) -> SpatialFeatures:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise OSError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    c, n, m = struct.unpack_from("<3Q", blob, 4)
    expected = 28 + 8 * c * n * m
    if len(blob) != expected:
        raise OSError(f"{path}: expected {expected} bytes, found {len(blob)}")
    grid = np.frombuffer(blob, dtype="<f8", offset=28).reshape(c, n, m)
    return SpatialFeatures(grid.astype(np.float64), source="file")
