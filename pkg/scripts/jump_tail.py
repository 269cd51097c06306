"""Histogram of per-update jump counts against the Poisson-style tail bound.

Runs a long single chain and compares the empirical frequency of k or more
jumps in one worldline update with exp(-k), the guarantee used to size the
jump budget.
"""
import argparse
import math

import numpy as np

from wlpimc import beta_thresholds, flat_state, jump_budget, resample_worldline
from wlpimc.model import random_model
from wlpimc.rng import make_rng


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--updates", type=int, default=200_000)
    ap.add_argument("--beta-frac", type=float, default=1.0,
                    help="beta as a fraction of the simple threshold")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = make_rng(args.seed)
    model = random_model(args.n, args.degree, rng)
    beta = args.beta_frac * beta_thresholds(model).beta_simple
    budget = jump_budget(model, beta, 1e-6, args.updates)
    print(f"n={model.n} degree<={args.degree} beta={beta:.5g} "
          f"budget k={budget.max_jumps} rate bound={budget.rate_bound:.5g}")

    state = flat_state(beta, [1 if rng.random() < 0.5 else -1 for _ in range(model.n)])
    hist = np.zeros(budget.max_jumps + 1, dtype=np.int64)
    for _ in range(args.updates):
        j = rng.randrange(model.n)
        resample_worldline(state, j, model, budget, rng)
        hist[len(state.worldlines[j].jumps)] += 1

    print(f"{'k':>4} {'count':>10} {'P(J >= k)':>12} {'exp(-k)':>12}")
    for k in range(budget.max_jumps + 1):
        tail = float(hist[k:].sum()) / args.updates
        print(f"{k:>4} {hist[k]:>10} {tail:>12.3e} {math.exp(-k):>12.3e}")
        if tail == 0.0:
            break


if __name__ == "__main__":
    main()
