"""Print the headline temporal Bell/LGI numbers next to their closed forms.

    python scripts/reproduce_bounds.py [--nmax 8]
"""
import argparse
import math

from temphist import bell
from temphist.linalg import BlochDirection


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nmax", type=int, default=8)
    args = ap.parse_args()

    r2 = math.sqrt(2)
    print("CHSH (maximally mixed state)")
    for name, s, want in [("canonical", bell.CANONICAL_CHSH, 2 * r2),
                          ("printed", bell.PRINTED_CHSH, 1 + r2),
                          ("all-Z", bell.ALL_Z_CHSH, 2.0)]:
        v = bell.chsh_temporal(None, s).value
        print(f"  {name:10s} {v:.12f}  expected {want:.12f}")

    print("\nLGI K_n at equal angles pi/n")
    print(f"  {'n':>3} {'K_n':>14} {'n cos(pi/n)':>14} {'classical':>12}")
    for n in range(3, args.nmax + 1):
        k = bell.lgi_n(None, [BlochDirection.planar(j * math.pi / n) for j in range(n)]).value
        lo, hi = bell.classical_lgi_bounds(n)
        print(f"  {n:3d} {k:14.10f} {bell.luders_bound(n):14.10f} {f'[{lo}, {hi}]':>12}")

    print("\nMonogamy S_AB + S_BC")
    opt, z = bell.CANONICAL_CHSH, bell.ALL_Z_CHSH
    for label, a, b in [("optimal/optimal", opt, opt), ("all-Z/all-Z", z, z), ("optimal/all-Z", opt, z)]:
        print(f"  {label:16s} {bell.monogamy_sum(None, a, b):.12f}   (spatial ceiling 4)")

    print("\nChain sums")
    for n in range(2, 7):
        r = bell.chain_bound_sum(n, [opt])
        print(f"  n={n}  {r.value:.10f}  bound {r.bound:.10f}")


if __name__ == "__main__":
    main()
