"""Violation histograms of random 3x3 inequalities and of twisted Gisin M=3."""

import argparse
import json
from pathlib import Path

import numpy as np

from belltwist.optimize import violation_histogram


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--outdir", type=Path, default=Path("out/histograms"))
    args = p.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    hists = {mode: violation_histogram(mode, args.n, args.seed) for mode in ("random", "twisted")}
    edges = np.linspace(min(h.values.min() for h in hists.values()), max(h.values.max() for h in hists.values()), args.bins + 1)
    for mode, h in hists.items():
        (args.outdir / f"{mode}.csv").write_text(h.to_csv())
        counts, _ = np.histogram(h.values, edges)
        np.savetxt(args.outdir / f"{mode}_bins.csv", np.column_stack([edges[:-1], edges[1:], counts]), delimiter=",", fmt="%.10g")
        print(json.dumps(h.summary()))
    print("share above 1:", {m: float(np.mean(h.values > 1)) for m, h in hists.items()})


if __name__ == "__main__":
    main()
