"""Dataset synthesis, batch pre-correction and batch evaluation.

Output layout of :func:`synthesize_dataset`::

    out/
      manifest.json
      clean/000000_<stem>.png       16-bit grayscale crops
      degraded/000000_<stem>.png
      sidecars/000000_<stem>.lapj   ideal subdivision curves, both directions

All paths inside a manifest are POSIX paths relative to the manifest's
directory, so manifests are byte-identical wherever the corpus lives.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import sidecar as sc
from .config import DegradationConfig, Vibration
from .geometry import build_jitter_map, deform_multi_subdivision, precorrect
from .jitter import (MeasurementErrorModel, SinusoidComponent, SinusoidSet, noisy_from_subdivisions,
                     subdivision_curves)
from .metrics import MetricReport, evaluate
from .sensor import NoiseConfig, add_sensor_noise, forward_gamma, inverse_gamma, to_integer

log = logging.getLogger(__name__)

PIPELINE_VERSION = "1"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".gif", ".webp"}
LUMA_601 = (0.299, 0.587, 0.114)


class InputError(RuntimeError):
    """The input corpus is missing or yields no usable crops."""


class IntegrityError(RuntimeError):
    """A file referenced by a manifest is missing or fails its checksum."""


# ---------------------------------------------------------------- image I/O

def to_luma(rgb) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb[..., 0] * LUMA_601[0] + rgb[..., 1] * LUMA_601[1] + rgb[..., 2] * LUMA_601[2]


def _pixels(img: Image.Image) -> np.ndarray:
    mode = img.mode
    if mode.startswith("I;16"):
        return np.asarray(img, dtype=np.float64) / 65535.0
    if mode == "I":
        a = np.asarray(img, dtype=np.float64)
        return a / (65535.0 if a.max(initial=0) > 255 or img.format == "PNG" else 255.0)
    if mode == "F":
        return np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if mode in ("L", "LA"):
        return np.asarray(img.getchannel(0), dtype=np.float64) / 255.0
    if mode == "1":
        return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return to_luma(np.asarray(img.convert("RGB"))) / 255.0


def read_image(path) -> np.ndarray:
    """Load any Pillow-readable raster as a float64 single-channel image in [0, 1]."""
    with Image.open(path) as img:
        return _pixels(img)


def write_png(path, image, bit_depth: int = 16) -> Path:
    """Quantize and write a grayscale PNG (deterministic bytes)."""
    arr = to_integer(image, bit_depth)
    Image.fromarray(arr).save(path, format="PNG", optimize=False, compress_level=6)
    return Path(path)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ------------------------------------------------------- per-image parameters

def per_image_seed(master_seed: int, index: int) -> int:
    """64-bit seed for one crop, derived from the master seed and crop index."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def split_tag(master_seed: int, index: int) -> str:
    """Deterministic 8:1 train/test tag: test iff sha256("<seed>:<index>") % 9 == 0."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return "test" if int.from_bytes(digest[:8], "big") % 9 == 0 else "train"


@dataclass(frozen=True)
class ImageParams:
    roll: SinusoidSet
    pitch: SinusoidSet
    seed: int
    amp_factor: float
    freq_factor: float
    rejections: int


def _positive_draw(rng: np.random.Generator, vib: Vibration, strict: bool) -> tuple[float, int]:
    rejected = 0
    while True:
        v = float(rng.normal(vib.mean, vib.std)) if vib.std > 0 else float(vib.mean)
        if v > 0 or (v == 0 and not strict):
            return v, rejected
        if vib.std == 0:
            raise ValueError(f"vibration mean {vib.mean} gives an invalid factor")
        rejected += 1


def sample_per_image_params(cfg: DegradationConfig, image_index: int) -> ImageParams:
    """Vibrated amplitudes/frequencies and random phases for one crop.

    One amplitude factor and one frequency factor are drawn per image and
    applied to every component in both directions.  Negative draws are
    redrawn and counted.
    """
    seed = per_image_seed(cfg.master_seed, image_index)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    amp, rej_a = _positive_draw(rng, cfg.amp_vibration, strict=False)
    freq, rej_f = _positive_draw(rng, cfg.freq_vibration, strict=True)
    if rej_a or rej_f:
        log.info("image %d: %d vibration factor redraw(s)", image_index, rej_a + rej_f)

    def vibrate(base: SinusoidSet) -> SinusoidSet:
        phases = rng.uniform(0.0, 2.0 * math.pi, size=len(base))
        return SinusoidSet(tuple(
            SinusoidComponent(c.amplitude_px * amp, c.frequency_hz * freq, float(p))
            for c, p in zip(base, phases)
        ))

    roll = vibrate(cfg.roll_sinusoids)
    pitch = vibrate(cfg.pitch_sinusoids)
    return ImageParams(roll, pitch, seed, amp, freq, rej_a + rej_f)


# ---------------------------------------------------------------- degradation

def ideal_curves(roll: SinusoidSet, pitch: SinusoidSet, width: int, cfg: DegradationConfig):
    """``(M, W)`` subdivision curves for roll and pitch."""
    return (subdivision_curves(roll, width, cfg.tau_s, cfg.M),
            subdivision_curves(pitch, width, cfg.tau_s, cfg.M))


def degrade_one(clean, roll: SinusoidSet, pitch: SinusoidSet, cfg: DegradationConfig, noise_seed: int = 0):
    """Degrade one display-domain image.

    inverse gamma -> average of M subdivision warps -> Gaussian-Poisson noise
    -> clamp to [0, 1] -> forward gamma.  Returns the degraded image (float64,
    not yet quantized) and the M ideal jitter maps.
    """
    clean = np.asarray(clean, dtype=np.float64)
    H, W = clean.shape
    roll_sub, pitch_sub = ideal_curves(roll, pitch, W, cfg)
    maps = [build_jitter_map(roll_sub[m], pitch_sub[m], H) for m in range(cfg.M)]
    energy = inverse_gamma(clean, cfg.gamma)
    deformed = deform_multi_subdivision(energy, maps, cfg.degrade_boundary)
    noise = NoiseConfig(cfg.noise.sigma_gauss, cfg.noise.lambda_poisson, noise_seed)
    noisy = np.clip(add_sensor_noise(deformed, noise), 0.0, 1.0)
    return forward_gamma(noisy, cfg.gamma), maps


# ------------------------------------------------------------------ synthesis

@dataclass(frozen=True)
class _CropTask:
    index: int
    source: str  # absolute path
    source_rel: str
    row: int
    col: int


def crop_origins(height: int, width: int, crop_h: int, crop_w: int) -> list[tuple[int, int]]:
    """Non-overlapping raster-order crop origins; partial crops are dropped."""
    return [(r * crop_h, c * crop_w) for r in range(height // crop_h) for c in range(width // crop_w)]


def _list_sources(input_dir: Path) -> list[Path]:
    return sorted((p for p in input_dir.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
                  key=lambda p: p.relative_to(input_dir).as_posix())


def plan_crops(input_dir, cfg: DegradationConfig) -> list[_CropTask]:
    input_dir = Path(input_dir)
    tasks: list[_CropTask] = []
    index = 0
    for path in _list_sources(input_dir):
        try:
            with Image.open(path) as img:
                W, H = img.size
        except (OSError, UnidentifiedImageError) as exc:
            log.warning("skipping unreadable image %s: %s", path, exc)
            continue
        rel = path.relative_to(input_dir).as_posix()
        for r, c in crop_origins(H, W, cfg.crop.height, cfg.crop.width):
            tasks.append(_CropTask(index, str(path), rel, r, c))
            index += 1
    return tasks


def _stem(task: _CropTask) -> str:
    base = Path(task.source_rel).with_suffix("").as_posix().replace("/", "__")
    return f"{task.index:06d}_{base}_r{task.row}_c{task.col}"


def _process_source(args) -> list[dict]:
    tasks, output_dir, cfg = args
    output_dir = Path(output_dir)
    try:
        source = read_image(tasks[0].source)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        log.warning("skipping unreadable image %s: %s", tasks[0].source, exc)
        return []
    entries = []
    ch, cw = cfg.crop.height, cfg.crop.width
    for t in tasks:
        clean = source[t.row:t.row + ch, t.col:t.col + cw]
        params = sample_per_image_params(cfg, t.index)
        degraded, _ = degrade_one(clean, params.roll, params.pitch, cfg, noise_seed=params.seed)
        roll_sub, pitch_sub = ideal_curves(params.roll, params.pitch, cw, cfg)
        stem = _stem(t)
        clean_rel = f"clean/{stem}.png"
        deg_rel = f"degraded/{stem}.png"
        side_rel = f"sidecars/{stem}.lapj"
        write_png(output_dir / clean_rel, clean, cfg.bit_depth)
        write_png(output_dir / deg_rel, degraded, cfg.bit_depth)
        sc.write_sidecar(output_dir / side_rel, roll_sub, pitch_sub, height=ch)
        entries.append({
            "index": t.index,
            "source": t.source_rel,
            "crop": [t.row, t.col, ch, cw],
            "clean_path": clean_rel,
            "degraded_path": deg_rel,
            "sidecar_path": side_rel,
            "seed": params.seed,
            "split": split_tag(cfg.master_seed, t.index),
            "roll": params.roll.to_dicts(),
            "pitch": params.pitch.to_dicts(),
            "amp_factor": params.amp_factor,
            "freq_factor": params.freq_factor,
            "rejections": params.rejections,
            "checksums": {
                "clean": sha256_file(output_dir / clean_rel),
                "degraded": sha256_file(output_dir / deg_rel),
                "sidecar": sha256_file(output_dir / side_rel),
            },
        })
    return entries


def _group_by_source(tasks: Iterable[_CropTask]) -> list[list[_CropTask]]:
    groups: dict[str, list[_CropTask]] = {}
    for t in tasks:
        groups.setdefault(t.source, []).append(t)
    return list(groups.values())


def default_jobs() -> int:
    env = os.environ.get("LAPJITTER_JOBS")
    if env:
        return max(1, int(env))
    return 1


def _run(fn, work: list, jobs: int) -> list:
    if jobs <= 1 or len(work) <= 1:
        return [fn(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, work))


def dump_manifest(manifest: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"cannot read manifest {path}: {exc}") from exc


def synthesize_dataset(input_dir, output_dir, cfg: DegradationConfig = DegradationConfig(), jobs: int = 1) -> dict:
    """Crop, degrade and store every usable image under ``input_dir``.

    Returns the manifest, which is also written to ``output_dir/manifest.json``.
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise InputError(f"input directory {input_dir} does not exist")
    tasks = plan_crops(input_dir, cfg)
    if not tasks:
        raise InputError(f"no usable {cfg.crop.width}x{cfg.crop.height} crops under {input_dir}")
    output_dir = Path(output_dir)
    for sub in ("clean", "degraded", "sidecars"):
        (output_dir / sub).mkdir(parents=True, exist_ok=True)

    work = [(group, str(output_dir), cfg) for group in _group_by_source(tasks)]
    entries = [e for batch in _run(_process_source, work, jobs) for e in batch]
    if not entries:
        raise InputError(f"no readable images under {input_dir}")
    entries.sort(key=lambda e: e["index"])
    seeds = [e["seed"] for e in entries]
    if len(set(seeds)) != len(seeds):
        raise RuntimeError("per-image seed collision")
    manifest = {
        "pipeline_version": PIPELINE_VERSION,
        "config": cfg.to_dict(),
        "entries": entries,
    }
    dump_manifest(manifest, output_dir / "manifest.json")
    return manifest


def verify_entry(entry: dict, root: Path, keys=("clean", "degraded", "sidecar")) -> None:
    for key in keys:
        path = root / entry[f"{key}_path"]
        if not path.is_file():
            raise IntegrityError(f"missing {key} file {path}")
        expected = entry.get("checksums", {}).get(key)
        if expected is not None and sha256_file(path) != expected:
            raise IntegrityError(f"checksum mismatch for {path}")


def config_from_manifest(manifest: dict) -> DegradationConfig:
    return DegradationConfig.from_dict(manifest["config"])


# ------------------------------------------------------------- pre-correction

def noisy_maps_for_entry(roll_sub, pitch_sub, height: int, measurement: MeasurementErrorModel, index: int):
    """M noisy jitter maps; roll uses stream (index, 0, m), pitch (index, 1, m)."""
    roll_noisy = noisy_from_subdivisions(roll_sub, measurement, (index, 0))
    pitch_noisy = noisy_from_subdivisions(pitch_sub, measurement, (index, 1))
    return [build_jitter_map(r, p, height) for r, p in zip(roll_noisy, pitch_noisy)]


def _relpath(target: Path, start: Path) -> str:
    return Path(os.path.relpath(target.resolve(), start.resolve())).as_posix()


def _precorrect_entry(args) -> dict:
    entry, src_root, output_dir, cfg, measurement, margin = args
    src_root, output_dir = Path(src_root), Path(output_dir)
    out = dict(entry)
    out["clean_path"] = _relpath(src_root / entry["clean_path"], output_dir)
    out["degraded_path"] = _relpath(src_root / entry["degraded_path"], output_dir)
    out["sidecar_path"] = _relpath(src_root / entry["sidecar_path"], output_dir)
    try:
        verify_entry(entry, src_root)
        side = sc.read_sidecar(src_root / entry["sidecar_path"])
        roll = SinusoidSet.from_dicts(entry["roll"])
        pitch = SinusoidSet.from_dicts(entry["pitch"])
        roll_sub, pitch_sub = ideal_curves(roll, pitch, side.width, cfg)
        if side.pitch is None or not (np.array_equal(roll_sub, side.roll) and np.array_equal(pitch_sub, side.pitch)):
            raise IntegrityError(f"sidecar {entry['sidecar_path']} does not match manifest parameters")
        clean = read_image(src_root / entry["clean_path"])
        degraded = read_image(src_root / entry["degraded_path"])
        maps = noisy_maps_for_entry(roll_sub, pitch_sub, degraded.shape[0], measurement, entry["index"])
        warped = precorrect(degraded, maps, cfg.precorrect_boundary)
        name = Path(entry["degraded_path"]).name
        rel = f"precorrected/{name}"
        write_png(output_dir / rel, warped, cfg.bit_depth)
        out["precorrected_path"] = rel
        out["checksums"] = dict(entry["checksums"], precorrected=sha256_file(output_dir / rel))
        out["metrics"] = {
            "degraded": evaluate(clean, degraded, margin).to_dict(),
            "precorrected": evaluate(clean, read_image(output_dir / rel), margin).to_dict(),
        }
        out["error"] = None
    except (IntegrityError, sc.SidecarError, OSError, ValueError) as exc:
        log.error("entry %s: %s", entry.get("index"), exc)
        out["error"] = str(exc)
    return out


def precorrect_dataset(manifest_path, output_dir, measurement: MeasurementErrorModel | None = None,
                       margin: int = 16, jobs: int = 1) -> dict:
    """Pre-correct every pair with noisy jitter maps and score both versions.

    Entries that fail integrity checks carry an ``error`` string and are
    otherwise left alone.  Writes ``output_dir/manifest.json``.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    cfg = config_from_manifest(manifest)
    measurement = measurement if measurement is not None else cfg.measurement
    output_dir = Path(output_dir)
    (output_dir / "precorrected").mkdir(parents=True, exist_ok=True)
    src_root = manifest_path.parent
    work = [(e, str(src_root), str(output_dir), cfg, measurement, margin) for e in manifest["entries"]]
    entries = sorted(_run(_precorrect_entry, work, jobs), key=lambda e: e["index"])
    result = {
        "pipeline_version": PIPELINE_VERSION,
        "config": manifest["config"],
        "measurement": {"relative_bound": measurement.relative_bound, "seed": measurement.seed},
        "margin": margin,
        "entries": entries,
    }
    dump_manifest(result, output_dir / "manifest.json")
    return result


# ----------------------------------------------------------------- evaluation

VARIANTS = ("degraded", "precorrected")


def evaluate_manifest(manifest_path, variant: str = "degraded", margin: int = 0) -> tuple[list[dict], dict]:
    """Score every entry of a manifest against its clean crop.

    Returns per-pair rows (``error`` set on failure) and a summary with
    corpus means over the successful rows.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    rows = []
    for e in manifest["entries"]:
        row = {"index": e["index"], "clean_path": e["clean_path"], "test_path": e.get(f"{variant}_path"),
               "error": None, "report": None}
        try:
            if row["test_path"] is None:
                raise IntegrityError(f"entry has no {variant} image")
            keys = ("clean", variant)
            verify_entry(e, root, keys)
            report = evaluate(read_image(root / e["clean_path"]), read_image(root / row["test_path"]), margin)
            row["report"] = report
        except (IntegrityError, OSError, ValueError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    ok = [r["report"] for r in rows if r["report"] is not None]
    means = {}
    for name in ("psnr_db", "ssim", "gmsd", "spectral_l1"):
        vals = [getattr(rep, name) for rep in ok]
        means[name] = float(np.mean(vals)) if vals else math.nan
    summary = {
        "variant": variant,
        "margin": margin,
        "count": len(rows),
        "failed": sum(r["error"] is not None for r in rows),
        "means": means,
    }
    return rows, summary
