"""Degradation recipe and its YAML representation.

The config file mirrors :class:`DegradationConfig` field names exactly::

    roll_sinusoids:
      - {amplitude_px: 4.0, frequency_hz: 1000.0}
    tau_s: 3.54e-5
    M: 6
    noise: {sigma_gauss: 0.01, lambda_poisson: 1.0e-4}
    crop: {width: 640, height: 480}
    master_seed: 0

Omitted keys take their defaults.  Validation errors carry the line number
of the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .geometry import Boundary
from .jitter import MeasurementErrorModel, SinusoidComponent, SinusoidSet
from .sensor import GammaConfig, NoiseConfig

DEFAULT_FREQUENCIES_HZ = (1000.0, 2000.0, 3000.0, 4000.0)
DEFAULT_ROLL_AMPLITUDES_PX = (4.0, 1.5, 1.0, 0.5)
DEFAULT_PITCH_AMPLITUDES_PX = (1.0, 0.5, 0.3, 0.2)


def default_roll() -> SinusoidSet:
    return SinusoidSet.from_arrays(DEFAULT_ROLL_AMPLITUDES_PX, DEFAULT_FREQUENCIES_HZ)


def default_pitch() -> SinusoidSet:
    return SinusoidSet.from_arrays(DEFAULT_PITCH_AMPLITUDES_PX, DEFAULT_FREQUENCIES_HZ)


@dataclass(frozen=True)
class Vibration:
    """Gaussian multiplier applied per image to amplitudes or frequencies."""

    mean: float = 1.0
    std: float = 0.1

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("vibration std must be non-negative")


@dataclass(frozen=True)
class Crop:
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("crop size must be positive")


@dataclass(frozen=True)
class DegradationConfig:
    roll_sinusoids: SinusoidSet = field(default_factory=default_roll)
    pitch_sinusoids: SinusoidSet = field(default_factory=default_pitch)
    tau_s: float = 3.54e-5
    M: int = 6
    gamma: GammaConfig = GammaConfig()
    noise: NoiseConfig = NoiseConfig()
    measurement: MeasurementErrorModel = MeasurementErrorModel()
    amp_vibration: Vibration = Vibration(1.0, 0.1)
    freq_vibration: Vibration = Vibration(1.0, 0.01)
    crop: Crop = Crop()
    master_seed: int = 0
    degrade_boundary: Boundary = Boundary.CLAMP_EDGE
    precorrect_boundary: Boundary = Boundary.ZERO_FILL
    bit_depth: int = 16

    def __post_init__(self):
        if not self.tau_s > 0:
            raise ValueError("tau_s must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")
        object.__setattr__(self, "degrade_boundary", Boundary(self.degrade_boundary))
        object.__setattr__(self, "precorrect_boundary", Boundary(self.precorrect_boundary))

    def with_seed(self, seed: int) -> "DegradationConfig":
        return replace(self, master_seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "roll_sinusoids": self.roll_sinusoids.to_dicts(),
            "pitch_sinusoids": self.pitch_sinusoids.to_dicts(),
            "tau_s": self.tau_s,
            "M": self.M,
            "gamma": {"gamma": self.gamma.gamma},
            "noise": {"sigma_gauss": self.noise.sigma_gauss, "lambda_poisson": self.noise.lambda_poisson,
                      "seed": self.noise.seed},
            "measurement": {"relative_bound": self.measurement.relative_bound, "seed": self.measurement.seed},
            "amp_vibration": {"mean": self.amp_vibration.mean, "std": self.amp_vibration.std},
            "freq_vibration": {"mean": self.freq_vibration.mean, "std": self.freq_vibration.std},
            "crop": {"width": self.crop.width, "height": self.crop.height},
            "master_seed": self.master_seed,
            "degrade_boundary": self.degrade_boundary.value,
            "precorrect_boundary": self.precorrect_boundary.value,
            "bit_depth": self.bit_depth,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DegradationConfig":
        return _Parser(None).config(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def load_config(path) -> DegradationConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def parse_config(text: str) -> DegradationConfig:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"malformed config: {exc.problem}", line) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level", 1)
    return _Parser(root).config(data)


class _Parser:
    """Validates plain data against the config schema, tracking key paths."""

    def __init__(self, root):
        self.root = root

    def _line(self, path):
        node = self.root
        for key in path:
            if node is None:
                return None
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == str(key):
                        nxt = (k, v)
                        break
                if nxt is None:
                    return node.start_mark.line + 1
                if key == path[-1]:
                    return nxt[0].start_mark.line + 1
                node = nxt[1]
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                break
        return node.start_mark.line + 1 if node is not None else None

    def fail(self, msg, path):
        raise ConfigError(f"{'.'.join(map(str, path)) or '<root>'}: {msg}", self._line(path))

    def real(self, value, path, positive=False, nonneg=False):
        if isinstance(value, bool):
            self.fail("expected a number", path)
        try:
            v = float(value)
        except (TypeError, ValueError):
            self.fail(f"expected a number, got {value!r}", path)
        if not math.isfinite(v):
            self.fail("must be finite", path)
        if positive and v <= 0:
            self.fail("must be positive", path)
        if nonneg and v < 0:
            self.fail("must be non-negative", path)
        return v

    def integer(self, value, path, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(f"expected an integer, got {value!r}", path)
        if minimum is not None and value < minimum:
            self.fail(f"must be >= {minimum}", path)
        return value

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.fail("expected a mapping", path)
        for key in value:
            if key not in allowed:
                self.fail(f"unknown key {key!r} (allowed: {', '.join(allowed)})", path + [key])
        return value

    def sinusoids(self, value, path) -> SinusoidSet:
        if not isinstance(value, list):
            self.fail("expected a list of sinusoid components", path)
        comps = []
        for i, item in enumerate(value):
            p = path + [i]
            item = self.mapping(item, p, ("amplitude_px", "frequency_hz", "phase_rad"))
            for req in ("amplitude_px", "frequency_hz"):
                if req not in item:
                    self.fail(f"missing {req}", p)
            comps.append(SinusoidComponent(
                self.real(item["amplitude_px"], p + ["amplitude_px"], nonneg=True),
                self.real(item["frequency_hz"], p + ["frequency_hz"], positive=True),
                self.real(item.get("phase_rad", 0.0), p + ["phase_rad"]),
            ))
        return SinusoidSet(tuple(comps))

    def config(self, data: dict) -> DegradationConfig:
        names = [f.name for f in fields(DegradationConfig)]
        self.mapping(data, [], names)
        kw: dict[str, Any] = {}
        for key in ("roll_sinusoids", "pitch_sinusoids"):
            if key in data:
                kw[key] = self.sinusoids(data[key], [key])
        if "tau_s" in data:
            kw["tau_s"] = self.real(data["tau_s"], ["tau_s"], positive=True)
        if "M" in data:
            kw["M"] = self.integer(data["M"], ["M"], minimum=1)
        if "master_seed" in data:
            kw["master_seed"] = self.integer(data["master_seed"], ["master_seed"], minimum=0)
        if "bit_depth" in data:
            kw["bit_depth"] = self.integer(data["bit_depth"], ["bit_depth"])
            if kw["bit_depth"] not in (8, 16):
                self.fail("must be 8 or 16", ["bit_depth"])
        if "gamma" in data:
            g = self.mapping(data["gamma"], ["gamma"], ("gamma",))
            kw["gamma"] = GammaConfig(self.real(g.get("gamma", 2.2), ["gamma", "gamma"], positive=True))
        if "noise" in data:
            n = self.mapping(data["noise"], ["noise"], ("sigma_gauss", "lambda_poisson", "seed"))
            kw["noise"] = NoiseConfig(
                self.real(n.get("sigma_gauss", 0.01), ["noise", "sigma_gauss"], nonneg=True),
                self.real(n.get("lambda_poisson", 1e-4), ["noise", "lambda_poisson"], nonneg=True),
                self.integer(n.get("seed", 0), ["noise", "seed"], minimum=0),
            )
        if "measurement" in data:
            m = self.mapping(data["measurement"], ["measurement"], ("relative_bound", "seed"))
            bound = self.real(m.get("relative_bound", 0.2), ["measurement", "relative_bound"], nonneg=True)
            if bound > 1:
                self.fail("must lie in [0, 1]", ["measurement", "relative_bound"])
            kw["measurement"] = MeasurementErrorModel(bound, self.integer(m.get("seed", 0), ["measurement", "seed"], 0))
        for key, default in (("amp_vibration", Vibration(1.0, 0.1)), ("freq_vibration", Vibration(1.0, 0.01))):
            if key in data:
                v = self.mapping(data[key], [key], ("mean", "std"))
                kw[key] = Vibration(
                    self.real(v.get("mean", default.mean), [key, "mean"]),
                    self.real(v.get("std", default.std), [key, "std"], nonneg=True),
                )
        if "crop" in data:
            c = self.mapping(data["crop"], ["crop"], ("width", "height"))
            kw["crop"] = Crop(
                self.integer(c.get("width", 640), ["crop", "width"], minimum=1),
                self.integer(c.get("height", 480), ["crop", "height"], minimum=1),
            )
        for key in ("degrade_boundary", "precorrect_boundary"):
            if key in data:
                try:
                    kw[key] = Boundary(data[key])
                except ValueError:
                    self.fail(f"must be one of {[b.value for b in Boundary]}", [key])
        return DegradationConfig(**kw)
