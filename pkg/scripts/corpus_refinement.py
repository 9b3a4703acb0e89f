"""Empirical refined-projection and refined-Nash constants of the corpus at several resolutions."""

import argparse

from nashlab.corpus import dilated_bump_corpus, run_family
from nashlab.spectral import GridSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[128, 256, 512])
    args = ap.parse_args()

    table = {n: [run_family(f) for f in dilated_bump_corpus(GridSpec(n))] for n in args.n}
    names = [r.name for r in table[args.n[0]]]
    head = "".join(f"{'proj@' + str(n):>12}{'nash@' + str(n):>12}" for n in args.n)
    print(f"{'family':10s}{head}")
    for i, name in enumerate(names):
        cells = "".join(f"{table[n][i].projection_constant:12.5g}{table[n][i].nash_constant:12.5g}"
                        for n in args.n)
        print(f"{name:10s}{cells}")
    lo, hi = args.n[-2], args.n[-1]
    drift = max(abs(getattr(b, a) / getattr(c, a) - 1)
                for c, b in zip(table[lo], table[hi]) for a in ("projection_constant", "nash_constant"))
    print(f"max relative change {lo} -> {hi}: {drift:.2%}")


if __name__ == "__main__":
    main()
