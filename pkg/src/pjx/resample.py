"""Area-weighted grid resampling shared by mask ingestion and rank correlation."""

from __future__ import annotations

import numpy as np


def _overlap_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) matrix of interval-overlap lengths on a unit segment.

    Row d holds the length of overlap between destination cell d and each
    source cell; rows sum to 1/dst.
    """
    w = np.zeros((dst, src))
    for d in range(dst):
        lo, hi = d / dst, (d + 1) / dst
        for s in range(src):
            slo, shi = s / src, (s + 1) / src
            w[d, s] = max(0.0, min(hi, shi) - max(lo, slo))
    return w


def resample_area(grid: np.ndarray, out_rows: int, out_cols: int) -> np.ndarray:
    """Resample a 2-D grid by exact area averaging (up or down).

    Each output cell is the average of the input over the rectangle it
    covers when both grids are laid over the same unit square. Resampling
    to the same shape is the identity.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    rows, cols = grid.shape
    if (rows, cols) == (out_rows, out_cols):
        return grid.copy()
    wr = _overlap_weights(rows, out_rows)
    wc = _overlap_weights(cols, out_cols)
    # normalize so each output cell averages (not sums) its covered area
    out = wr @ grid @ wc.T
    return out * (out_rows * out_cols)
