"""Run the settings optimizer over several seeds and budgets; write a CSV.

    python scripts/optimizer_sweep.py --functionals chsh lgi3 lgi4 --seeds 10 --out sweep.csv
"""
import argparse
import csv
import sys
import time

from temphist import bell


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--functionals", nargs="+", default=["chsh", "lgi3", "lgi4", "lgi5", "lgi6"])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--budgets", nargs="+", type=int, default=[1000, 3000])
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["functional", "budget", "seed", "best", "bound", "gap", "evaluations", "seconds"])
    for f in args.functionals:
        for budget in args.budgets:
            for seed in range(args.seeds):
                t = time.perf_counter()
                r = bell.optimize_settings(f, budget=budget, seed=seed)
                dt = time.perf_counter() - t
                w.writerow([f, budget, seed, f"{r.best_value:.12g}", f"{r.bound:.12g}",
                            f"{r.bound - r.best_value:.3e}", r.evaluations, f"{dt:.3f}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
