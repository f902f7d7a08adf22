#!/usr/bin/env python3
"""Reconstruction-error table over sampling density and noise amplitude.

Sweeps point spacings {0.2, 0.1, 0.05} (K = 16, 34, 70) against noise
amplitudes {0, 0.005, 0.01} for one scenario and prints the relative
reconstruction errors as a 3x3 table.

    python scripts/noise_table.py --config configs/two_ellipses.ini \
        [--n 64] [--max-iterations 200] [--out-dir out/table]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from eitshape.config import load_config  # noqa: E402
from run_experiment import run  # noqa: E402

SPACINGS = (0.2, 0.1, 0.05)
DELTAS = (0.0, 0.005, 0.01)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out-dir", default="out/noise_table")
    parser.add_argument("--n", type=int, default=None, help="override the mesh resolution")
    parser.add_argument("--max-iterations", type=int, default=None)
    args = parser.parse_args()

    base = load_config(args.config)
    if args.n:
        base.n = args.n
        base.truth_n = 2 * args.n
    if args.max_iterations:
        base.max_iterations = args.max_iterations

    table = {}
    levels = {}
    for delta in DELTAS:
        for spacing in SPACINGS:
            config = load_config(args.config)
            config.n, config.truth_n = base.n, base.truth_n
            config.max_iterations = base.max_iterations
            config.spacing, config.delta = spacing, delta
            tag = f"spacing{spacing}_delta{delta}"
            result = run(config, Path(args.out_dir) / tag)
            table[(delta, spacing)] = result.final_error
            levels[(delta, spacing)] = None

    ks = {0.2: 16, 0.1: 34, 0.05: 70}
    print("\nrelative reconstruction error E")
    print(f"{'delta':>8} | " + " | ".join(f"K={ks[s]:>3}" for s in SPACINGS))
    for delta in DELTAS:
        row = " | ".join(f"{table[(delta, s)]:5.1%}" for s in SPACINGS)
        print(f"{delta:>8} | {row}")


if __name__ == "__main__":
    main()
