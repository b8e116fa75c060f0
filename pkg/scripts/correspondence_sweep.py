"""Worst ABL vs chain-weight deviation over random bundles, by dimension and slot count.

    python scripts/correspondence_sweep.py --trials 200 --dims 2 3 4 --slots 1 2 3 4
"""
import argparse

import numpy as np

from temphist import bundle
from temphist.scenarios import random_bundle_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--dims", nargs="+", type=int, default=[2, 3, 4])
    ap.add_argument("--slots", nargs="+", type=int, default=[1, 2, 3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'dim':>4} {'slots':>6} {'max deviation':>15}")
    for d in args.dims:
        for m in args.slots:
            worst = max(
                bundle.verify_weight_correspondence(*random_bundle_trial(rng, d, m)).max_deviation
                for _ in range(args.trials)
            )
            print(f"{d:4d} {m:6d} {worst:15.3e}")


if __name__ == "__main__":
    main()
