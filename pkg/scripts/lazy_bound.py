"""How far can the lazily penalised cost take an ideal minimiser?

For random 4-city instances, replace the variational search by exact
minimisation over the 24 permutation-matrix vertices (the cost is linear
in X, so a vertex always attains the minimum) and run the lazy loop. Also
reports how often the minimising vertex is a tour once every 2-subset is
active.
"""

import argparse

import numpy as np

from tspvqa.cost import CostConfig, DistanceMatrix, detect_violated_subsets, pad_problem, subset_mask, total_cost
from tspvqa.oracle import all_permutations, brute_force_tsp


def lazy_vertex_loop(padded, perms, add_all):
    cfg = CostConfig()
    for _ in range(16):
        best = min(perms, key=lambda p: (total_cost(padded, p.matrix, cfg), p.sigma))
        found = sorted(detect_violated_subsets(best, 4), key=lambda s: (len(s), sorted(s)))
        new = [m for m in map(subset_mask, found) if m not in cfg.active_subsets]
        if not new:
            return best
        cfg = cfg.with_subsets(new if add_all else new[:1])
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    perms = list(all_permutations(4))
    pairs = CostConfig(active_subsets=[m for m in range(1, 15) if bin(m).count("1") == 2])
    one = every = tour_at_pairs = 0
    for k in range(args.instances):
        d = rng.integers(1, 21, (4, 4)).astype(float)
        if k % 2 == 0:
            d = np.triu(d, 1)
            d = d + d.T
        padded = pad_problem(DistanceMatrix(d))
        opt = brute_force_tsp(d)[1]
        for add_all in (False, True):
            best = lazy_vertex_loop(padded, perms, add_all)
            hit = best.valid_tour and best.length(d) == opt
            if add_all:
                every += hit
            else:
                one += hit
        best = min(perms, key=lambda p: (total_cost(padded, p.matrix, pairs), p.sigma))
        tour_at_pairs += best.valid_tour
    n = args.instances
    print(f"optimal tour reached, one subset per round:      {one / n:.3f}")
    print(f"optimal tour reached, all violated sets per round: {every / n:.3f}")
    print(f"minimising vertex is a tour with all 2-subsets on: {tour_at_pairs / n:.3f}")


if __name__ == "__main__":
    main()
