"""Qutrit-versus-qubit witness for D6_1: the known optimum and a fresh search."""

import argparse
import json

from belltwist.bounds import dimensional_bound, tsirelson_bound
from belltwist.catalog import d6_1_matrix, d6_1_optimized_matrix
from belltwist.optimize import SearchConfig, optimize_dimension_ratio


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dprime", type=int, default=3)
    p.add_argument("--restarts", type=int, default=200, help="see-saw restarts for the known optimum")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write the search result as JSON")
    args = p.parse_args()

    for name, g in (("d6", d6_1_matrix()), ("d6opt", d6_1_optimized_matrix())):
        T = tsirelson_bound(g)
        Td = dimensional_bound(g, args.dprime, restarts=args.restarts, seed=args.seed).value
        print(f"{name}: T = {T:.6f}, T_{args.dprime} >= {Td:.6f}, ratio <= {T / Td:.6f}")

    cfg = SearchConfig(global_samples=args.samples, local_starts=args.starts, seed=args.seed)
    res = optimize_dimension_ratio(d6_1_matrix(), args.dprime, cfg)
    print(f"search: T/T_{args.dprime} = {res.objective_value:.6f} (re-checked {res.verified_value:.6f}), {res.evaluations} evaluations")
    if args.output:
        with open(args.output, "w") as f:
            json.dump(res.to_dict(), f, indent=2)


if __name__ == "__main__":
    main()
