"""Human attention ground truth from segmentation masks.

A mask graymap is area-averaged down (or up) to the model grid, thresholded
at half its maximum, and the mass is spread uniformly over the surviving
cells. An all-zero mask degenerates to the uniform map.
"""

from __future__ import annotations

from ..attention import AttentionMap
from ..pgm import read_pgm
from ..resample import resample_area


def attention_gt_from_grid(grid, n: int, m: int) -> AttentionMap:
    scaled = resample_area(grid, n, m)
    peak = scaled.max()
    if peak <= 0:
        return AttentionMap.uniform(n, m)
    return AttentionMap.from_mask(scaled >= 0.5 * peak)


def load_attention_gt(mask_path, n: int, m: int) -> AttentionMap:
    """Read a P2/P5 mask file and derive the N x M ground-truth distribution."""
    return attention_gt_from_grid(read_pgm(mask_path), n, m)
