"""Pre-correction efficacy on a synthetic corpus.

Synthesizes ``--count`` 640x480 pairs with the default degradation, pre-corrects
them with noise-free and noisy jitter maps and prints per-bound PSNR gains
(interior crop).  The acceptance suite freezes the numbers printed here.

    python3 scripts/precorrect_experiment.py --count 50 --seed 2024
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

import numpy as np

from lapjitter.config import DegradationConfig
from lapjitter.jitter import MeasurementErrorModel
from lapjitter.pipeline import precorrect_dataset, synthesize_dataset
from lapjitter.scenes import write_corpus


def gains(result):
    return np.array([e["metrics"]["precorrected"]["psnr_db"] - e["metrics"]["degraded"]["psnr_db"]
                     for e in result["entries"]])


def run(count, seed, bounds, margin, work):
    work = Path(work)
    write_corpus(work / "clean", count, seed=seed)
    t0 = time.perf_counter()
    synthesize_dataset(work / "clean", work / "synth", DegradationConfig(master_seed=seed))
    t_synth = time.perf_counter() - t0
    out = {"count": count, "seed": seed, "margin": margin, "synth_s": t_synth, "bounds": {}}
    for bound in bounds:
        t0 = time.perf_counter()
        result = precorrect_dataset(work / "synth" / "manifest.json", work / f"pc_{bound}",
                                    MeasurementErrorModel(bound, seed), margin=margin)
        g = gains(result)
        out["bounds"][str(bound)] = {
            "mean_gain_db": float(g.mean()),
            "min_gain_db": float(g.min()),
            "max_gain_db": float(g.max()),
            "improved_fraction": float(np.mean(g > 0)),
            "mean_degraded_db": float(np.mean([e["metrics"]["degraded"]["psnr_db"] for e in result["entries"]])),
            "seconds": time.perf_counter() - t0,
        }
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--margin", type=int, default=16)
    p.add_argument("--bounds", type=float, nargs="+", default=[0.0, 0.2])
    p.add_argument("--workdir", help="keep intermediate files here (default: a temporary directory)")
    args = p.parse_args()
    if args.workdir:
        res = run(args.count, args.seed, args.bounds, args.margin, args.workdir)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            res = run(args.count, args.seed, args.bounds, args.margin, tmp)
    print(json.dumps(res, indent=2))


if __name__ == "__main__":
    main()
