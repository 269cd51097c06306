"""Scan the replica discretization: partition and marginal error versus L.

Both errors should shrink like 1/L^2 whenever the diagonal and transverse
parts of the model fail to commute.
"""
import argparse

import numpy as np

from wlpimc import TimModel, replica_marginal, trotter_quantum_partition
from wlpimc.exact import exact_thermal


def build_model(n: int) -> TimModel:
    edges = [(i, i + 1, 0.5 * (-1) ** i) for i in range(n - 1)]
    b = [0.2 - 0.1 * i for i in range(n)]
    gamma = [0.8 + 0.05 * i for i in range(n)]
    return TimModel(n=n, edges=edges, b=b, gamma=gamma)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--beta", type=float, default=0.6)
    ap.add_argument("--lmax", type=int, default=128)
    args = ap.parse_args()

    model = build_model(args.n)
    th = exact_thermal(model, args.beta)
    print(f"n={args.n} beta={args.beta} exact Z={th.partition:.10g}")
    print(f"{'L':>5} {'Z_L':>16} {'rel err':>12} {'marginal TV':>12}")
    L = 4
    prev = None
    while L <= args.lmax:
        z = trotter_quantum_partition(model, args.beta, L, method="transfer")
        rel = abs(z / th.partition - 1.0)
        tv = 0.5 * float(np.abs(replica_marginal(model, args.beta, L) - th.measure).sum())
        note = "" if prev is None else f"  ratio {prev / rel:.2f}"
        print(f"{L:>5} {z:>16.10g} {rel:>12.3e} {tv:>12.3e}{note}")
        prev = rel
        L *= 2


if __name__ == "__main__":
    main()
