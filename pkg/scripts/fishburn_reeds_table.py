"""Original and optimized violations of the Fishburn-Reeds family, plus Gisin M=6.

Budgets default to the ones used by the acceptance checks; raise them with
--samples / --starts / --directions to search harder.
"""

import argparse
import time
from dataclasses import replace

from belltwist.bounds import classical_bound, tsirelson_bound
from belltwist.catalog import fishburn_reeds_matrix, gisin_matrix
from belltwist.optimize import optimize_violation
from belltwist.repro import FR_TARGETS, SEARCH_CONFIGS


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--samples", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--directions", type=int)
    p.add_argument("--boundary-fraction", type=float)
    args = p.parse_args()

    overrides = {
        k: v
        for k, v in (
            ("global_samples", args.samples),
            ("local_starts", args.starts),
            ("random_directions", args.directions),
            ("boundary_fraction", args.boundary_fraction),
        )
        if v is not None
    }
    rows = [("gisin6", gisin_matrix(6), None)] + [(f"fr{d}", fishburn_reeds_matrix(d), FR_TARGETS[d]) for d in args.dims]
    print(f"{'name':8s} {'nu':>9s} {'seed':>4s} {'nu_opt':>9s} {'target':>7s} {'evals':>7s} {'secs':>6s}")
    for name, g, target in rows:
        nu = tsirelson_bound(g) / classical_bound(g).value
        for seed in args.seeds:
            cfg = replace(SEARCH_CONFIGS[name], seed=seed, **overrides)
            t = time.perf_counter()
            res = optimize_violation(g, cfg)
            secs = time.perf_counter() - t
            tgt = "" if target is None else f"{target:.3f}"
            print(f"{name:8s} {nu:9.6f} {seed:4d} {res.objective_value:9.6f} {tgt:>7s} {res.evaluations:7d} {secs:6.1f}")


if __name__ == "__main__":
    main()
