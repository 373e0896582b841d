"""RMS error of the sampled correlation matrix against the exact one, per shot count."""

import argparse

import numpy as np

from tspvqa.measurement import correlation_exact, correlation_sampled
from tspvqa.state import build_trial_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000, 16000])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--states", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    states = [build_trial_state(4, rng.uniform(0, np.pi, 6)) for _ in range(args.states)]
    print(f"{'shots':>7} {'rms':>8} {'rms*sqrt(shots)':>16}")
    for shots in args.shots:
        errs = []
        for state in states:
            exact = correlation_exact(state).values
            for seed in range(args.seeds):
                x = correlation_sampled(state, shots, seed)[0].values
                errs.append(np.sqrt(np.mean((x - exact) ** 2)))
        rms = float(np.mean(errs))
        print(f"{shots:>7} {rms:>8.4f} {rms * np.sqrt(shots):>16.3f}")


if __name__ == "__main__":
    main()
