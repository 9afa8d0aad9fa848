"""Radiometric sensor model: gamma transfer, Gaussian-Poisson noise, quantization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GammaConfig:
    gamma: float = 2.2

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class NoiseConfig:
    """Signal-dependent shot noise plus additive read noise.

    ``y = lambda_poisson * Poisson(x / lambda_poisson) + Normal(0, sigma_gauss**2)``;
    a zero parameter switches its term off.
    """

    sigma_gauss: float = 0.01
    lambda_poisson: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.sigma_gauss < 0 or self.lambda_poisson < 0:
            raise ValueError("noise parameters must be non-negative")


def _unit_range(image) -> np.ndarray:
    image = np.asarray(image)
    if not np.issubdtype(image.dtype, np.floating):
        image = image.astype(np.float64)
    if not np.all(np.isfinite(image)) or image.size and (image.min() < 0 or image.max() > 1):
        raise ValueError("pixel values must lie in [0, 1]")
    return image


def inverse_gamma(image, cfg: GammaConfig = GammaConfig()) -> np.ndarray:
    """Display values to linear energy: ``x ** gamma``."""
    image = _unit_range(image)
    return np.power(image.astype(np.float64), cfg.gamma).astype(image.dtype, copy=False)


def forward_gamma(image, cfg: GammaConfig = GammaConfig()) -> np.ndarray:
    """Linear energy back to display values: ``x ** (1 / gamma)``."""
    image = _unit_range(image)
    return np.power(image.astype(np.float64), 1.0 / cfg.gamma).astype(image.dtype, copy=False)


def noise_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (shot, read) generators keyed only by ``seed``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    shot, read = ss.spawn(2)
    return np.random.Generator(np.random.Philox(shot)), np.random.Generator(np.random.Philox(read))


def add_sensor_noise(image, cfg: NoiseConfig = NoiseConfig()) -> np.ndarray:
    """Gaussian-Poisson noise in the energy domain.  The result is not clamped."""
    image = np.asarray(image)
    dtype = image.dtype if np.issubdtype(image.dtype, np.floating) else np.float64
    x = image.astype(np.float64)
    if cfg.sigma_gauss == 0 and cfg.lambda_poisson == 0:
        return x.astype(dtype, copy=False)
    shot, read = noise_rngs(cfg.seed)
    if cfg.lambda_poisson > 0:
        lam = cfg.lambda_poisson
        x = lam * shot.poisson(np.maximum(x, 0.0) / lam)
    if cfg.sigma_gauss > 0:
        x = x + read.normal(0.0, cfg.sigma_gauss, size=x.shape)
    return x.astype(dtype, copy=False)


def quantization_levels(bit_depth: int) -> int:
    if bit_depth not in (8, 16):
        raise ValueError(f"unsupported bit depth {bit_depth}; use 8 or 16")
    return (1 << bit_depth) - 1


def to_integer(image, bit_depth: int = 16) -> np.ndarray:
    """Clamp to [0, 1] and round half away from zero onto the integer lattice."""
    levels = quantization_levels(bit_depth)
    v = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * levels
    return np.floor(v + 0.5).astype(np.uint8 if bit_depth == 8 else np.uint16)


def quantize(image, bit_depth: int = 16) -> np.ndarray:
    """Snap values to the ``bit_depth`` lattice, returned as float64 in [0, 1]."""
    return to_integer(image, bit_depth).astype(np.float64) / quantization_levels(bit_depth)
