"""Binary and CSV serialization of jitter curves.

Binary layout (all little-endian)::

    offset  type      field
    0       4 bytes   magic b"LAPJ"
    4       u32       version (1)
    8       u32       W, samples per curve
    12      u32       direction count D (1 = roll only, 2 = roll then pitch)
    16      u32       S, records per direction (subdivisions; 1 for a plain curve)
    20      u32       H, raster height for flow fields (0 if not applicable)
    24      f64[D,S,W] curve samples, direction-major then subdivision-major

A flow field built from curves has identical rows, so it is stored as its
first row plus ``H``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LAPJ"
VERSION = 1
_HEADER = struct.Struct("<4sIIIII")
DIRECTIONS = ("roll", "pitch")


class SidecarError(ValueError):
    """A sidecar file is truncated, malformed or inconsistent."""


@dataclass
class Sidecar:
    roll: np.ndarray  # (S, W)
    pitch: np.ndarray | None  # (S, W) or None for a single-direction file
    height: int = 0

    @property
    def width(self) -> int:
        return self.roll.shape[1]

    @property
    def subdivisions(self) -> int:
        return self.roll.shape[0]


def encode(roll, pitch=None, height: int = 0) -> bytes:
    roll = np.atleast_2d(np.asarray(roll, dtype=np.float64))
    blocks = [roll]
    if pitch is not None:
        pitch = np.atleast_2d(np.asarray(pitch, dtype=np.float64))
        if pitch.shape != roll.shape:
            raise ValueError(f"roll {roll.shape} and pitch {pitch.shape} records differ in shape")
        blocks.append(pitch)
    S, W = roll.shape
    header = _HEADER.pack(MAGIC, VERSION, W, len(blocks), S, int(height))
    body = np.concatenate(blocks).astype("<f8").tobytes()
    return header + body


def decode(data: bytes) -> Sidecar:
    if len(data) < _HEADER.size:
        raise SidecarError("sidecar shorter than its header")
    magic, version, W, D, S, H = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SidecarError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SidecarError(f"unsupported sidecar version {version}")
    if D not in (1, 2) or W < 1 or S < 1:
        raise SidecarError(f"invalid dimensions W={W} D={D} S={S}")
    expected = _HEADER.size + 8 * D * S * W
    if len(data) != expected:
        raise SidecarError(f"sidecar size {len(data)} != expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64).reshape(D, S, W)
    if not np.all(np.isfinite(values)):
        raise SidecarError("sidecar contains non-finite samples")
    return Sidecar(roll=values[0].copy(), pitch=values[1].copy() if D == 2 else None, height=H)


def write_sidecar(path, roll, pitch=None, height: int = 0) -> Path:
    path = Path(path)
    path.write_bytes(encode(roll, pitch, height))
    return path


def read_sidecar(path) -> Sidecar:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SidecarError(f"cannot read sidecar {path}: {exc}") from exc
    return decode(data)


def encode_flow(flow) -> bytes:
    """Store a row-constant ``(H, W, 2)`` field as one row of curves plus ``H``."""
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must have shape (H, W, 2), got {flow.shape}")
    if not np.all(flow == flow[:1]):
        raise ValueError("flow rows differ; only row-constant fields can be stored as curves")
    return encode(flow[0, :, 0], flow[0, :, 1], height=flow.shape[0])


def decode_flow(data: bytes) -> np.ndarray:
    from .geometry import build_jitter_map

    sc = decode(data)
    if sc.pitch is None or sc.subdivisions != 1 or sc.height < 1:
        raise SidecarError("sidecar does not hold a single flow field")
    return build_jitter_map(sc.roll[0], sc.pitch[0], sc.height)


def write_curves_csv(path, roll, pitch=None) -> Path:
    """CSV with header ``column,roll_px,pitch_px``; column index is 1-based."""
    roll = np.asarray(roll, dtype=np.float64)
    pitch = np.zeros_like(roll) if pitch is None else np.asarray(pitch, dtype=np.float64)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "roll_px", "pitch_px"])
        for k, (r, p) in enumerate(zip(roll.tolist(), pitch.tolist()), start=1):
            w.writerow([k, repr(r), repr(p)])
    return path


def read_curves_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    roll = np.array([float(r["roll_px"]) for r in rows])
    pitch = np.array([float(r["pitch_px"]) for r in rows])
    return roll, pitch
