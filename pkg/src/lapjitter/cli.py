"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 input error,
4 data-integrity error.  Progress goes to stderr; results go to files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from . import sidecar as sc
from .config import ConfigError, DegradationConfig, load_config
from .geometry import build_jitter_map, flow_from_noisy_map, mean_map
from .jitter import MeasurementErrorModel, noisy_from_subdivisions
from .pipeline import InputError, IntegrityError
from .viz import curve_series, write_curve_plot, write_flow_png, write_series_csv

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_INTEGRITY = 0, 2, 3, 4

log = logging.getLogger("lapjitter")


def _load_cfg(args) -> DegradationConfig:
    cfg = load_config(args.config) if args.config else DegradationConfig()
    return cfg


def _measurement(args, fallback: MeasurementErrorModel) -> MeasurementErrorModel:
    model = load_config(args.config).measurement if args.config else fallback
    if args.seed is not None:
        model = replace(model, seed=args.seed)
    return model


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else pipeline.default_jobs()


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    manifest = pipeline.synthesize_dataset(args.input, args.output, cfg, jobs=_jobs(args))
    path = Path(args.output) / "manifest.json"
    print(f"{len(manifest['entries'])} pairs written; manifest {path}", file=sys.stderr)
    return EXIT_OK


def cmd_degrade_one(args) -> int:
    cfg = _load_cfg(args)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if not Path(args.input).is_file():
        raise InputError(f"input image {args.input} does not exist")
    clean = pipeline.read_image(args.input)
    params = pipeline.sample_per_image_params(cfg, args.index)
    degraded, _ = pipeline.degrade_one(clean, params.roll, params.pitch, cfg, noise_seed=params.seed)
    roll_sub, pitch_sub = pipeline.ideal_curves(params.roll, params.pitch, clean.shape[1], cfg)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_png(out / "degraded.png", degraded, cfg.bit_depth)
    sc.write_sidecar(out / "sidecar.lapj", roll_sub, pitch_sub, height=clean.shape[0])
    record = {
        "index": args.index,
        "seed": params.seed,
        "roll": params.roll.to_dicts(),
        "pitch": params.pitch.to_dicts(),
        "amp_factor": params.amp_factor,
        "freq_factor": params.freq_factor,
        "config": cfg.to_dict(),
    }
    (out / "params.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(f"degraded image written to {out / 'degraded.png'}", file=sys.stderr)
    return EXIT_OK


def cmd_precorrect(args) -> int:
    manifest_path = Path(args.input)
    if not manifest_path.is_file():
        raise InputError(f"manifest {manifest_path} does not exist")
    manifest = pipeline.load_manifest(manifest_path)
    fallback = pipeline.config_from_manifest(manifest).measurement
    measurement = _measurement(args, fallback)
    margin = args.margin if args.margin is not None else 16
    result = pipeline.precorrect_dataset(manifest_path, args.output, measurement, margin=margin, jobs=_jobs(args))
    failed = sum(e["error"] is not None for e in result["entries"])
    print(f"{len(result['entries']) - failed} pairs pre-corrected, {failed} failed; "
          f"manifest {Path(args.output) / 'manifest.json'}", file=sys.stderr)
    return EXIT_INTEGRITY if failed else EXIT_OK


def cmd_eval(args) -> int:
    manifest_path = Path(args.input)
    if not manifest_path.is_file():
        raise InputError(f"manifest {manifest_path} does not exist")
    margin = args.margin if args.margin is not None else 0
    rows, summary = pipeline.evaluate_manifest(manifest_path, args.variant, margin)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    with (out / f"metrics_{args.variant}.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "clean_path", "test_path", "psnr_db", "ssim", "gmsd", "spectral_l1", "region", "error"])
        for r in rows:
            rep = r["report"]
            metrics = rep.csv_row() if rep is not None else ["", "", "", "", ""]
            w.writerow([r["index"], r["clean_path"], r["test_path"] or "", *metrics, r["error"] or ""])
    means = {k: ("inf" if v == float("inf") else (None if v != v else v)) for k, v in summary["means"].items()}
    summary = dict(summary, means=means)
    (out / f"summary_{args.variant}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(means, sort_keys=True), file=sys.stderr)
    return EXIT_INTEGRITY if summary["failed"] else EXIT_OK


def _load_sidecar_input(args) -> sc.Sidecar:
    path = Path(args.input)
    if not path.is_file():
        raise InputError(f"input {path} does not exist")
    if path.suffix == ".json":
        manifest = pipeline.load_manifest(path)
        entries = [e for e in manifest["entries"] if e["index"] == args.index]
        if not entries:
            raise InputError(f"manifest has no entry with index {args.index}")
        return sc.read_sidecar(path.parent / entries[0]["sidecar_path"])
    return sc.read_sidecar(path)


def cmd_flow_viz(args) -> int:
    side = _load_sidecar_input(args)
    if side.pitch is None:
        raise sc.SidecarError("flow visualization needs roll and pitch curves")
    model = _measurement(args, MeasurementErrorModel())
    height = side.height or 480
    roll = side.roll
    pitch = side.pitch
    if model.relative_bound > 0:
        roll = noisy_from_subdivisions(roll, model, (0,))
        pitch = noisy_from_subdivisions(pitch, model, (1,))
    flow = flow_from_noisy_map(mean_map([build_jitter_map(r, p, height) for r, p in zip(roll, pitch)]))
    write_flow_png(args.output, flow)
    print(f"flow visualization written to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_curve_plot(args) -> int:
    side = _load_sidecar_input(args)
    model = _measurement(args, MeasurementErrorModel())
    series = curve_series(side, model)
    out = Path(args.output)
    stem = out.with_suffix("")
    write_series_csv(stem.with_suffix(".csv"), series)
    write_curve_plot(stem.with_suffix(".png"), series["roll"], title="roll jitter (px)")
    print(f"curves written to {stem.with_suffix('.csv')} and {stem.with_suffix('.png')}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lapjitter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=True):
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True)
        if config:
            p.add_argument("--config", help="YAML degradation config")
        if seed:
            p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("synth", help="synthesize a degraded dataset from a directory of clean images")
    common(p)
    p.add_argument("--jobs", type=int, help="worker processes (default: $LAPJITTER_JOBS or 1)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("degrade-one", help="degrade a single image")
    common(p)
    p.add_argument("--index", type=int, default=0, help="image index used for parameter sampling")
    p.set_defaults(func=cmd_degrade_one)

    p = sub.add_parser("precorrect", help="pre-correct a synthesized dataset with noisy jitter maps")
    common(p)
    p.add_argument("--margin", type=int, help="border excluded from metrics (default 16)")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_precorrect)

    p = sub.add_parser("eval", help="score a manifest's degraded or pre-corrected images")
    common(p, config=False, seed=False)
    p.add_argument("--variant", choices=pipeline.VARIANTS, default="degraded")
    p.add_argument("--margin", type=int, help="border excluded from metrics (default 0)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flow-viz", help="color-wheel PNG of the optical flow from a sidecar")
    common(p)
    p.add_argument("--index", type=int, default=0, help="entry index when --input is a manifest")
    p.set_defaults(func=cmd_flow_viz)

    p = sub.add_parser("curve-plot", help="CSV and PNG of ideal/averaged/noisy jitter curves")
    common(p)
    p.add_argument("--index", type=int, default=0, help="entry index when --input is a manifest")
    p.set_defaults(func=cmd_curve_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrityError, sc.SidecarError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
