"""Jitter maps and backward-warp resampling.

A flow field is an ``(H, W, 2)`` float64 array.  Channel 0 is the roll
(cross-track) offset and displaces the sampled *row*; channel 1 is the pitch
(along-track) offset and displaces the sampled *column*.  Warping is backward:
``out[r, k] = image(r + flow[r, k, 0], k + flow[r, k, 1])``, so a degradation
uses ``+J`` and pre-correction uses ``-J``.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np

ROW, COL = 0, 1


class Boundary(str, Enum):
    """How samples that fall outside the source raster are treated."""

    ZERO_FILL = "zero_fill"
    CLAMP_EDGE = "clamp_edge"


def _as_image(image) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    return image


def _check_flow(flow, shape=None) -> np.ndarray:
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must have shape (H, W, 2), got {flow.shape}")
    if shape is not None and flow.shape[:2] != tuple(shape):
        raise ValueError(f"flow shape {flow.shape[:2]} does not match image shape {tuple(shape)}")
    if not np.all(np.isfinite(flow)):
        raise FloatingPointError("flow contains non-finite values")
    return flow


def build_jitter_map(roll, pitch, height: int) -> np.ndarray:
    """Duplicate two per-column curves down ``height`` rows and stack them."""
    roll = np.asarray(roll, dtype=np.float64)
    pitch = np.asarray(pitch, dtype=np.float64)
    if roll.ndim != 1 or roll.shape != pitch.shape:
        raise ValueError(f"roll and pitch curves must be 1-D with equal width, got {roll.shape} and {pitch.shape}")
    if int(height) != height or height < 1:
        raise ValueError(f"height must be a positive integer, got {height}")
    out = np.empty((int(height), roll.size, 2), dtype=np.float64)
    out[:, :, ROW] = roll
    out[:, :, COL] = pitch
    return out


def grid_sample(image, flow, boundary: Boundary | str = Boundary.ZERO_FILL) -> np.ndarray:
    """Bilinear backward warp of ``image`` by ``flow``.

    With ``zero_fill`` every neighbour outside the raster contributes 0; with
    ``clamp_edge`` the sample coordinates are clamped to the raster first.
    Floating inputs keep their dtype; anything else comes back as float64.
    """
    image = _as_image(image)
    H, W = image.shape
    flow = _check_flow(flow, (H, W))
    boundary = Boundary(boundary)
    src = image.astype(np.float64, copy=False)

    y = np.arange(H, dtype=np.float64)[:, None] + flow[:, :, ROW]
    x = np.arange(W, dtype=np.float64)[None, :] + flow[:, :, COL]
    if boundary is Boundary.CLAMP_EDGE:
        np.clip(y, 0, H - 1, out=y)
        np.clip(x, 0, W - 1, out=x)

    y0f = np.floor(y)
    x0f = np.floor(x)
    wy = y - y0f
    wx = x - x0f
    y0 = y0f.astype(np.intp)
    x0 = x0f.astype(np.intp)
    y1 = y0 + 1
    x1 = x0 + 1

    if boundary is Boundary.ZERO_FILL:
        vy0 = (y0 >= 0) & (y0 < H)
        vy1 = (y1 >= 0) & (y1 < H)
        vx0 = (x0 >= 0) & (x0 < W)
        vx1 = (x1 >= 0) & (x1 < W)
    np.clip(y0, 0, H - 1, out=y0)
    np.clip(y1, 0, H - 1, out=y1)
    np.clip(x0, 0, W - 1, out=x0)
    np.clip(x1, 0, W - 1, out=x1)

    flat = src.ravel()
    r0 = y0 * W
    r1 = y1 * W
    v00 = flat.take(r0 + x0)
    v01 = flat.take(r0 + x1)
    v10 = flat.take(r1 + x0)
    v11 = flat.take(r1 + x1)
    if boundary is Boundary.ZERO_FILL:
        v00 = np.where(vy0 & vx0, v00, 0.0)
        v01 = np.where(vy0 & vx1, v01, 0.0)
        v10 = np.where(vy1 & vx0, v10, 0.0)
        v11 = np.where(vy1 & vx1, v11, 0.0)

    out = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * ((1.0 - wx) * v10 + wx * v11)
    if np.issubdtype(image.dtype, np.floating):
        return out.astype(image.dtype, copy=False)
    return out


def deform_multi_subdivision(image, maps: Sequence, boundary: Boundary | str = Boundary.CLAMP_EDGE) -> np.ndarray:
    """Average of the warps of ``image`` by each subdivision map (motion blur)."""
    if len(maps) == 0:
        raise ValueError("need at least one jitter map")
    image = _as_image(image)
    acc = np.zeros(image.shape, dtype=np.float64)
    for jmap in maps:
        acc += grid_sample(image.astype(np.float64, copy=False), jmap, boundary)
    acc /= len(maps)
    if np.issubdtype(image.dtype, np.floating):
        return acc.astype(image.dtype, copy=False)
    return acc


def mean_map(maps: Sequence) -> np.ndarray:
    if len(maps) == 0:
        raise ValueError("need at least one jitter map")
    return np.mean(np.stack([_check_flow(m) for m in maps]), axis=0)


def flow_from_noisy_map(noisy_map) -> np.ndarray:
    """Optical flow approximated as the negated (noisy) jitter map."""
    return -_check_flow(noisy_map)


def precorrect(degraded, noisy_maps: Sequence, boundary: Boundary | str = Boundary.ZERO_FILL) -> np.ndarray:
    """Undo most of the jitter distortion with one warp by the negated mean map."""
    return grid_sample(degraded, flow_from_noisy_map(mean_map(noisy_maps)), boundary)


def flow_l1_distance(a, b) -> float:
    """Mean absolute difference over all ``2*H*W`` flow entries."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"flow shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def rows_identical(flow) -> bool:
    flow = np.asarray(flow)
    return bool(np.all(flow == flow[:1]))
