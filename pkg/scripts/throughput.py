"""Time dataset synthesis for N default-size pairs.

    python3 scripts/throughput.py --count 100 --jobs 1
"""

import argparse
import tempfile
import time
from pathlib import Path

from lapjitter.config import DegradationConfig
from lapjitter.pipeline import synthesize_dataset
from lapjitter.scenes import write_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        write_corpus(tmp / "clean", args.count, seed=args.seed)
        t0 = time.perf_counter()
        manifest = synthesize_dataset(tmp / "clean", tmp / "out", DegradationConfig(master_seed=args.seed),
                                      jobs=args.jobs)
        dt = time.perf_counter() - t0
    n = len(manifest["entries"])
    print(f"{n} pairs in {dt:.2f} s ({dt / n:.3f} s/pair, jobs={args.jobs})")


if __name__ == "__main__":
    main()
