"""Sinusoidal jitter curves for linear-array pushbroom imaging.

A jitter curve holds one pixel offset per image column.  Column ``k``
(1-based) is imaged at ``t = k * tau``; with finer-grained subdivision
sampling, subdivision ``m`` of ``M`` is imaged at ``t = k * tau + m * tau / M``.
Averaging the ``M`` subdivision curves gives the smoothed curve used both for
blur synthesis and for denoising measured curves.

All curve arithmetic is float64.  Curves are plain 1-D numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SinusoidComponent:
    """One jitter component, amplitude already converted to pixels."""

    amplitude_px: float
    frequency_hz: float
    phase_rad: float = 0.0

    def __post_init__(self):
        a, f, p = float(self.amplitude_px), float(self.frequency_hz), float(self.phase_rad)
        if not (math.isfinite(a) and math.isfinite(f) and math.isfinite(p)):
            raise ValueError("sinusoid parameters must be finite")
        if a < 0:
            raise ValueError(f"amplitude_px must be >= 0, got {a}")
        if f <= 0:
            raise ValueError(f"frequency_hz must be > 0, got {f}")
        p = math.fmod(p, TWO_PI)
        if p < 0:
            p += TWO_PI
        if p >= TWO_PI:  # fmod rounding on tiny negatives
            p = 0.0
        object.__setattr__(self, "amplitude_px", a)
        object.__setattr__(self, "frequency_hz", f)
        object.__setattr__(self, "phase_rad", p)

    def to_dict(self) -> dict:
        return {
            "amplitude_px": self.amplitude_px,
            "frequency_hz": self.frequency_hz,
            "phase_rad": self.phase_rad,
        }


@dataclass(frozen=True)
class SinusoidSet:
    """Ordered jitter components for one direction.  Empty means no jitter."""

    components: tuple[SinusoidComponent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_arrays(cls, amplitudes, frequencies, phases=None) -> "SinusoidSet":
        amplitudes = list(amplitudes)
        frequencies = list(frequencies)
        if len(amplitudes) != len(frequencies):
            raise ValueError("amplitude and frequency lists differ in length")
        if phases is None:
            phases = [0.0] * len(amplitudes)
        phases = list(phases)
        if len(phases) != len(amplitudes):
            raise ValueError("phase list length differs from amplitude list")
        return cls(tuple(SinusoidComponent(a, f, p) for a, f, p in zip(amplitudes, frequencies, phases)))

    @classmethod
    def from_dicts(cls, items: Iterable[dict]) -> "SinusoidSet":
        return cls(tuple(SinusoidComponent(**d) for d in items))

    def to_dicts(self) -> list[dict]:
        return [c.to_dict() for c in self.components]

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "SinusoidSet") -> "SinusoidSet":
        return SinusoidSet(self.components + other.components)

    @property
    def total_amplitude(self) -> float:
        return float(sum(c.amplitude_px for c in self.components))


@dataclass(frozen=True)
class CameraSpec:
    focal_length: float
    pixel_size: float
    line_interval_s: float = 3.54e-5
    subdivision_count: int = 6

    def __post_init__(self):
        if not (self.focal_length > 0 and self.pixel_size > 0):
            raise ValueError("focal_length and pixel_size must be positive")
        if not self.line_interval_s > 0:
            raise ValueError("line_interval_s must be positive")
        if int(self.subdivision_count) != self.subdivision_count or self.subdivision_count < 1:
            raise ValueError("subdivision_count must be a positive integer")


@dataclass(frozen=True)
class MeasurementErrorModel:
    """Bounded multiplicative gyroscope measurement error.

    Each noisy sample is ``ideal * (1 + u)`` with ``u ~ Uniform(-bound, bound)``
    drawn independently per column (and per subdivision).
    """

    relative_bound: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.relative_bound <= 1.0:
            raise ValueError(f"relative_bound must lie in [0, 1], got {self.relative_bound}")


def angle_amplitude_to_pixels(angle_amplitude: float, camera: CameraSpec) -> float:
    """Convert a small attitude angle (radians) to a pixel offset on the sensor."""
    if not math.isfinite(angle_amplitude):
        raise ValueError("angle amplitude must be finite")
    return angle_amplitude * camera.focal_length / camera.pixel_size


def _check_sampling(width: int, tau: float, M: int):
    if int(width) != width or width < 1:
        raise ValueError(f"width must be a positive integer, got {width}")
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau}")
    if int(M) != M or M < 1:
        raise ValueError(f"subdivision count must be a positive integer, got {M}")


def sample_ideal_curve(sinusoids: SinusoidSet, width: int, tau: float, m: int = 0, M: int = 1) -> np.ndarray:
    """Sample subdivision ``m`` of ``M`` of the jitter curve at columns ``1..width``."""
    _check_sampling(width, tau, M)
    if int(m) != m or not 0 <= m < M:
        raise ValueError(f"subdivision index must satisfy 0 <= m < M, got m={m}, M={M}")
    t = np.arange(1, width + 1, dtype=np.float64) * tau + (m / M) * tau
    curve = np.zeros(width, dtype=np.float64)
    for c in sinusoids:
        curve += c.amplitude_px * np.sin(TWO_PI * c.frequency_hz * t + c.phase_rad)
    return curve


def subdivision_curves(sinusoids: SinusoidSet, width: int, tau: float, M: int) -> np.ndarray:
    """All ``M`` subdivision curves stacked as an ``(M, width)`` array."""
    _check_sampling(width, tau, M)
    return np.stack([sample_ideal_curve(sinusoids, width, tau, m, M) for m in range(M)])


def cdsm_average(sinusoids: SinusoidSet, width: int, tau: float, M: int) -> np.ndarray:
    """Mean of the ``M`` subdivision curves.  ``M == 1`` is plain sampling."""
    if M == 1:
        return sample_ideal_curve(sinusoids, width, tau, 0, 1)
    return subdivision_curves(sinusoids, width, tau, M).mean(axis=0)


def _noise_rng(model: MeasurementErrorModel, stream: Sequence[int]) -> np.random.Generator:
    key = [int(model.seed) & 0xFFFFFFFFFFFFFFFF, *(int(s) for s in stream)]
    return np.random.default_rng(np.random.SeedSequence(key))


def add_measurement_error(curve, model: MeasurementErrorModel, stream: Sequence[int] = ()) -> np.ndarray:
    """Apply bounded relative error to a curve.

    ``stream`` selects an independent noise stream under the same seed, e.g.
    ``(direction, m)`` so that each subdivision gets fresh draws.
    """
    curve = np.asarray(curve, dtype=np.float64)
    if model.relative_bound == 0:
        return curve.copy()
    u = _noise_rng(model, stream).uniform(-model.relative_bound, model.relative_bound, size=curve.shape)
    return curve + curve * u


def noisy_subdivision_curves(sinusoids: SinusoidSet, model: MeasurementErrorModel, width: int, tau: float,
                             M: int, stream: Sequence[int] = ()) -> np.ndarray:
    ideal = subdivision_curves(sinusoids, width, tau, M)
    return noisy_from_subdivisions(ideal, model, stream)


def noisy_from_subdivisions(ideal_subdivisions, model: MeasurementErrorModel, stream: Sequence[int] = ()) -> np.ndarray:
    """Independent measurement error on each row of an ``(M, W)`` stack.

    Row ``m`` draws from stream ``(*stream, m)``.
    """
    ideal_subdivisions = np.asarray(ideal_subdivisions, dtype=np.float64)
    return np.stack([add_measurement_error(row, model, (*stream, m)) for m, row in enumerate(ideal_subdivisions)])


def cdsm_noisy_curve(sinusoids: SinusoidSet, model: MeasurementErrorModel, width: int, tau: float, M: int,
                     stream: Sequence[int] = ()) -> np.ndarray:
    """Average of ``M`` independently corrupted subdivision curves."""
    noisy = noisy_subdivision_curves(sinusoids, model, width, tau, M, stream)
    if M == 1:
        return noisy[0]
    return noisy.mean(axis=0)

