"""Seeded region-grow segmentation fallback for box-only annotation streams.

Grows a 4-connected region from the box midpoint, admitting pixels whose
per-channel (Chebyshev) distance from the 3x3 seed-neighborhood mean stays
within a tolerance.  External masks, when present, always take precedence
over this fallback.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import BBox, Frame, Mask, box_center
from .errors import OutOfBounds


@dataclass(frozen=True)
class SegmenterConfig:
    color_tolerance: float = 40.0
    max_region_fraction: float = 1.5

    def __post_init__(self):
        if self.color_tolerance < 0:
            raise ValueError("color_tolerance must be >= 0")
        if not (0.0 < self.max_region_fraction <= 2.0):
            raise ValueError("max_region_fraction must lie in (0, 2]")


@dataclass(frozen=True)
class SegmentResult:
    mask: Mask
    degenerate: bool = False


def segment_box(frame: Frame, box: BBox, cfg: SegmenterConfig = None) -> SegmentResult:
    """Flood fill from the box midpoint, clipped to the box dilated by 10%."""
    cfg = cfg or SegmenterConfig()
    cx, cy = box_center(box)
    sx, sy = int(round(cx)), int(round(cy))
    if not (0 <= sx < frame.width and 0 <= sy < frame.height):
        raise OutOfBounds(f"seed ({sx}, {sy}) outside {frame.width}x{frame.height}")

    dx, dy = 0.1 * box.width, 0.1 * box.height
    x_lo = max(0, int(np.floor(box.x_min - dx)))
    y_lo = max(0, int(np.floor(box.y_min - dy)))
    x_hi = min(frame.width - 1, int(np.ceil(box.x_max + dx)))
    y_hi = min(frame.height - 1, int(np.ceil(box.y_max + dy)))

    pix = frame.pixels.astype(np.int16)
    seed_patch = pix[max(0, sy - 1):sy + 2, max(0, sx - 1):sx + 2]
    seed_mean = seed_patch.reshape(-1, 3).mean(axis=0)

    max_pixels = max(1, int(cfg.max_region_fraction * box.area))
    admitted = np.zeros((frame.height, frame.width), dtype=bool)

    def fits(x, y):
        return np.max(np.abs(pix[y, x] - seed_mean)) <= cfg.color_tolerance

    degenerate = not fits(sx, sy)
    admitted[sy, sx] = True
    if not degenerate:
        count = 1
        queue = deque([(sx, sy)])
        while queue and count < max_pixels:
            x, y = queue.popleft()
            for nx, ny in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)):
                if not (x_lo <= nx <= x_hi and y_lo <= ny <= y_hi):
                    continue
                if admitted[ny, nx] or not fits(nx, ny):
                    continue
                admitted[ny, nx] = True
                count += 1
                queue.append((nx, ny))
                if count >= max_pixels:
                    break

    return SegmentResult(mask=Mask.from_array(admitted), degenerate=degenerate)
