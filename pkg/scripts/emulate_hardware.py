"""Solve random 4-city instances through the emulated 16-projector protocol.

Writes one trace file per run (same format as the CLI) so convergence
panels can be plotted, and prints the final overlap with the optimal tour.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from tspvqa.cli import trace_records
from tspvqa.cost import DistanceMatrix
from tspvqa.optimizer import OptimizerConfig, optimize
from tspvqa.oracle import brute_force_tsp, matrix_to_route


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=3)
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--shots", type=int, default=2000)
    ap.add_argument("--lr", type=float, default=0.002)
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--instance-seed", type=int, default=20261018)
    ap.add_argument("--out", type=Path, default=None, help="directory for trace files")
    args = ap.parse_args()

    rng = np.random.default_rng(args.instance_seed)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    hits = 0
    total = 0
    for k in range(args.instances):
        d = rng.integers(1, 21, (4, 4)).astype(float)
        if k % 2 == 0:
            d = np.triu(d, 1)
            d = d + d.T
        best, opt = brute_force_tsp(d)
        print(f"instance {k}: optimum {matrix_to_route(best)} length {opt:g}")
        problem = DistanceMatrix(d)
        for seed in range(args.seeds):
            cfg = OptimizerConfig(learning_rate=args.lr, n_starts=args.starts, seed=seed,
                                  shots=args.shots, protocol="projectors")
            tr = optimize(problem, cfg)
            ok = tr.route.valid_tour and tr.route.length(d) == opt
            hits += ok and tr.overlap >= 0.85
            total += 1
            route = matrix_to_route(tr.route) if tr.route.valid_tour else "subtours"
            print(f"  seed {seed}: route {route} overlap {tr.overlap:.3f} "
                  f"iterations {len(tr.records) - 1} rounds {len(tr.active_history)}")
            if args.out:
                with open(args.out / f"inst{k}_seed{seed}.jsonl", "w") as fh:
                    for rec in trace_records(tr, problem, cfg):
                        fh.write(json.dumps(rec) + "\n")
    print(f"optimal with overlap >= 0.85: {hits}/{total}")


if __name__ == "__main__":
    main()
