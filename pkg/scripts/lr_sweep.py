"""Learning-rate sweep in exact mode: monotone descent and solver success."""

import argparse

import numpy as np

from tspvqa.cost import CostConfig, DistanceMatrix
from tspvqa.optimizer import OptimizerConfig, optimize
from tspvqa.oracle import brute_force_tsp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rates", type=float, nargs="+", default=[0.05, 0.01, 0.004, 0.002, 0.001])
    ap.add_argument("--instances", type=int, default=30)
    ap.add_argument("--starts", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    problems = []
    for k in range(args.instances):
        d = rng.integers(1, 21, (4, 4)).astype(float)
        if k % 2 == 0:
            d = np.triu(d, 1)
            d = d + d.T
        problems.append(d)
    print(f"{'lr':>7} {'monotone':>9} {'optimal':>8}")
    for lr in args.rates:
        monotone = optimal = 0
        for k, d in enumerate(problems):
            single = optimize(DistanceMatrix(d), OptimizerConfig(
                learning_rate=lr, n_starts=1, seed=k, cost=CostConfig(subtour_mode="off")))
            monotone += bool(np.all(np.diff([r.cost for r in single.records]) <= 1e-9))
            tr = optimize(DistanceMatrix(d), OptimizerConfig(learning_rate=lr, n_starts=args.starts, seed=k))
            optimal += tr.route.valid_tour and tr.route.length(d) == brute_force_tsp(d)[1]
        print(f"{lr:>7} {monotone:>5}/{len(problems)} {optimal:>4}/{len(problems)}")


if __name__ == "__main__":
    main()
