"""Procedural aerial-like test scenes for fixtures and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage


def textured_scene(height: int = 480, width: int = 640, seed: int = 0) -> np.ndarray:
    """Smooth terrain, rectangular blocks, straight roads and fine texture, in [0, 1]."""
    rng = np.random.default_rng(seed)
    terrain = ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma=12.0)
    terrain = (terrain - terrain.min()) / (np.ptp(terrain) + 1e-12)
    img = 0.25 + 0.4 * terrain
    for _ in range(rng.integers(20, 40)):
        h, w = rng.integers(8, 48, size=2)
        r, c = rng.integers(0, height - h), rng.integers(0, width - w)
        img[r:r + h, c:c + w] = rng.uniform(0.05, 0.95)
    for _ in range(rng.integers(2, 5)):
        if rng.random() < 0.5:
            r = rng.integers(0, height - 6)
            img[r:r + rng.integers(2, 6), :] = rng.uniform(0.6, 0.9)
        else:
            c = rng.integers(0, width - 6)
            img[:, c:c + rng.integers(2, 6)] = rng.uniform(0.6, 0.9)
    img += 0.04 * ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma=1.0)
    return np.clip(img, 0.0, 1.0)


def write_corpus(directory, count: int, height: int = 480, width: int = 640, seed: int = 0,
                 bit_depth: int = 8) -> list[Path]:
    """Write ``count`` scenes as grayscale PNGs named ``scene_000.png`` ..."""
    from .pipeline import write_png

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        p = directory / f"scene_{i:03d}.png"
        write_png(p, textured_scene(height, width, seed=seed * 1000 + i), bit_depth)
        paths.append(p)
    return paths
