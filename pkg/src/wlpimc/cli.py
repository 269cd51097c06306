"""Command-line interface: thresholds, sampling, partition estimation, verification.

Exit codes: 0 success, 2 invalid input, 3 refusal because the temperature is
above the certified-mixing threshold, 4 jump-budget or retry failure (the run
is reported with a zero-valued, invalid-flagged result).
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import exact, trotter
from .chain import AboveThreshold, mixing_plan, sample_mu
from .estimators import estimate_partition
from .heatbath import transfer_matrix
from .model import (
    KELVIN_PER_GHZ,
    ModelError,
    TimModel,
    beta_thresholds,
    coupling_stats,
    cure_sign,
    ghz_to_kelvin,
    load_model,
)
from .rng import make_rng


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wlpimc",
        description="Continuous-time worldline Monte Carlo for transverse-field Ising models.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_model(sp):
        sp.add_argument("--model", required=True, help="path to a JSON model document")

    def add_temp(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--beta", type=float, help="inverse temperature, inverse energy units")
        g.add_argument("--temp-kelvin", type=float,
                       help="temperature in kelvin (model energies taken as GHz)")
        g.add_argument("--temp-ghz", type=float, help="temperature as a frequency in GHz")

    def add_run(sp):
        sp.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
        sp.add_argument("--workers", type=int, default=1, help="parallel chains (default 1)")
        sp.add_argument("--retry-cap", type=int, default=1_000_000,
                        help="subpath rejection attempts before failing")
        sp.add_argument("--fail-prob", type=float, default=1e-6,
                        help="jump-budget failure probability target")
        sp.add_argument("--out", help="output file (default stdout)")

    t = sub.add_parser("threshold", help="report fast-mixing temperature thresholds")
    add_model(t)
    t.add_argument("--ghz", action="store_true",
                   help="model energies are GHz; also print kelvin equivalents")
    t.add_argument("--out", help="output file (default stdout)")

    s = sub.add_parser("sample", help="draw measurement samples as CSV")
    add_model(s)
    add_temp(s)
    s.add_argument("--eps", type=float, default=0.01, help="target sampling accuracy in TV")
    s.add_argument("--samples", type=int, default=1000, help="number of samples")
    s.add_argument("--force-steps", type=int, metavar="N",
                   help="run N chain steps per sample regardless of the threshold (heuristic)")
    add_run(s)

    e = sub.add_parser("estimate-z", help="estimate the partition function")
    add_model(e)
    add_temp(e)
    e.add_argument("--rel-err", type=float, default=0.05,
                   help="target relative error at 95%% confidence")
    add_run(e)

    v = sub.add_parser("verify", help="run oracle cross-checks on a small model")
    add_model(v)
    add_temp(v, required=False)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--out", help="output file (default stdout)")
    return p


def _resolve_beta(args) -> float:
    if args.beta is not None:
        beta = args.beta
    elif args.temp_kelvin is not None:
        if args.temp_kelvin <= 0:
            raise ValueError(f"temperature must be positive, got {args.temp_kelvin} K")
        beta = KELVIN_PER_GHZ / args.temp_kelvin
    else:
        if args.temp_ghz <= 0:
            raise ValueError(f"temperature must be positive, got {args.temp_ghz} GHz")
        beta = 1.0 / args.temp_ghz
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return beta


def _load(args) -> TimModel:
    model = load_model(args.model)
    return cure_sign(model)


def _out_stream(path):
    return open(path, "w") if path else sys.stdout


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_threshold(args) -> int:
    model = _load(args)
    stats = coupling_stats(model)
    rep = beta_thresholds(model)
    out = _out_stream(args.out)
    try:
        print("# threshold report", file=out)
        print(f"model: {args.model}", file=out)
        print(f"n: {model.n}  edges: {len(model.edges)}  J: {_fmt(stats.max_coupling)}"
              f"  Delta: {stats.max_degree}  Gamma_max: {_fmt(stats.max_transverse)}", file=out)
        if rep.unbounded:
            print("thresholds: unbounded (no couplings); alpha = 1/n at every beta", file=out)
            return 0
        for name, b in (("simple", rep.beta_simple), ("log", rep.beta_log),
                        ("degree", rep.beta_degree)):
            line = f"beta_{name}: {_fmt(b)}"
            if args.ghz:
                t_ghz = 1.0 / b
                line += f"  temp_ghz: {_fmt(t_ghz)}  temp_kelvin: {_fmt(ghz_to_kelvin(t_ghz))}"
            print(line, file=out)
        return 0
    finally:
        if args.out:
            out.close()


def cmd_sample(args) -> int:
    model = _load(args)
    beta = _resolve_beta(args)
    if args.samples < 1:
        raise ValueError(f"--samples must be >= 1, got {args.samples}")
    try:
        samples, report = sample_mu(
            model, beta, args.eps, args.samples, args.seed,
            force_steps=args.force_steps, workers=args.workers,
            fail_prob=args.fail_prob, retry_cap=args.retry_cap,
        )
    except AboveThreshold as exc:
        print(f"error: {exc} (pass --force-steps to run anyway)", file=sys.stderr)
        return 3
    info = sys.stdout if args.out else sys.stderr
    print("# sample run", file=info)
    print(f"model: {args.model}  n: {model.n}", file=info)
    print(f"beta: {_fmt(beta)}  eps: {_fmt(args.eps)}  samples: {args.samples}"
          f"  seed: {args.seed}  workers: {args.workers}", file=info)
    if report.plan is not None:
        print(f"mode: certified  alpha: {_fmt(report.plan.alpha)}"
              f"  t_mix: {report.plan.t_mix}", file=info)
    else:
        print(f"mode: heuristic  forced_steps: {report.steps_per_sample}", file=info)
    print(f"budget_k: {report.budget.max_jumps}  rate_bound: {_fmt(report.budget.rate_bound)}"
          f"  fail_prob: {_fmt(report.budget.fail_prob)}  retry_cap: {report.budget.retry_cap}",
          file=info)
    print(f"collected: {report.samples}  total_updates: {report.total_updates}"
          f"  final_state_jumps: {report.total_jumps}  failures: {report.failures}", file=info)
    print(f"seconds: {report.seconds:.3f}  valid: {'true' if report.valid else 'false'}",
          file=info)
    if not report.valid:
        print(f"failure: {report.failure_reason}", file=info)
        print("output suppressed: terminate and output 0", file=info)
        return 4
    out = _out_stream(args.out)
    try:
        print(",".join(f"z{j}" for j in range(model.n)), file=out)
        for z in samples:
            print(",".join(str(s) for s in z), file=out)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_estimate_z(args) -> int:
    model = _load(args)
    beta = _resolve_beta(args)
    try:
        est = estimate_partition(
            model, beta, args.rel_err, args.seed, workers=args.workers,
            fail_prob=args.fail_prob, retry_cap=args.retry_cap,
        )
    except AboveThreshold as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = _out_stream(args.out)
    try:
        print("# partition estimate", file=out)
        print(f"model: {args.model}  n: {model.n}", file=out)
        print(f"beta: {_fmt(beta)}  rel_err_target: {_fmt(args.rel_err)}  seed: {args.seed}"
              f"  workers: {args.workers}", file=out)
        print(f"method: {est.method}", file=out)
        print(f"anchor_beta: {_fmt(est.anchor_beta)}  anchor_value: {_fmt(est.anchor_value)}"
              f"  anchor_rel_remainder: {_fmt(est.anchor_rel_remainder)}", file=out)
        for i, st in enumerate(est.stages):
            print(f"stage {i}: beta {_fmt(st.beta_lo)} -> {_fmt(st.beta_hi)}"
                  f"  ratio: {_fmt(st.ratio)}  stderr: {_fmt(st.stderr)}"
                  f"  samples: {st.samples}", file=out)
        print(f"estimate: {_fmt(est.value)}", file=out)
        if est.value > 0:
            print(f"log_estimate: {_fmt(est.log_value)}", file=out)
        print(f"rel_stderr: {_fmt(est.rel_stderr)}  rel_ci95: {_fmt(est.rel_ci95)}", file=out)
        print(f"valid: {'true' if est.valid else 'false'}", file=out)
        if not est.valid:
            print(f"failure: {est.failure_reason}", file=out)
            return 4
        return 0
    finally:
        if args.out:
            out.close()


def _verify_checks(model: TimModel, beta: float, seed: int):
    """Yield (name, status, detail) oracle checks sized to the model."""
    rng = make_rng(seed)
    n = model.n

    # conditional distributions must normalize exactly
    L = 6
    if L <= trotter.CONDITIONAL_LIMIT:
        spins = np.array([[1 if rng.random() < 0.5 else -1 for _ in range(n)]
                          for _ in range(L)], dtype=np.int8)
        config = trotter.DiscreteConfig(spins)
        worst = max(
            abs(float(trotter.exact_conditional(j, config, model, beta).sum()) - 1.0)
            for j in range(n)
        )
        yield ("conditional_normalization", "PASS" if worst < 1e-12 else "FAIL",
               f"max |sum - 1| = {worst:.3e} bound 1e-12")

    # full transition matrix fixes the discrete equilibrium distribution
    if n * 3 <= trotter.KERNEL_LIMIT:
        pi, P = trotter.heatbath_kernel(model, beta, 3)
        dev = float(np.max(np.abs(pi @ P - pi)))
        yield ("stationarity_certificate", "PASS" if dev < 1e-10 else "FAIL",
               f"L=3 max |pi P - pi| = {dev:.3e} bound 1e-10")
    else:
        yield ("stationarity_certificate", "SKIP", f"needs n <= {trotter.KERNEL_LIMIT // 3}")

    # exact conditionals of single-worldline perturbations obey the TV bound
    if n >= 2:
        holds = True
        worst_gap = -math.inf
        for _ in range(50):
            spins = np.array([[1 if rng.random() < 0.5 else -1 for _ in range(n)]
                              for _ in range(L)], dtype=np.int8)
            i = rng.randrange(n)
            j = (i + 1 + rng.randrange(n - 1)) % n
            other = spins.copy()
            k = rng.randrange(L)
            other[k, i] = -other[k, i]
            tv, bound, ok = trotter.conditional_tv(
                j, trotter.DiscreteConfig(spins), trotter.DiscreteConfig(other), model, beta
            )
            holds &= ok
            worst_gap = max(worst_gap, tv - bound)
        yield ("tv_bound_sweep", "PASS" if holds else "FAIL",
               f"50 perturbations, max tv - bound = {worst_gap:.3e}")

    # closed-form propagator trace against the two-level partition function
    worst = 0.0
    for bj, gj in zip(model.b, model.gamma):
        omega = math.hypot(bj, gj)
        tr = float(np.trace(transfer_matrix(bj, gj, beta).matrix))
        worst = max(worst, abs(tr - 2.0 * math.cosh(beta * omega)))
    yield ("transfer_trace", "PASS" if worst < 1e-9 else "FAIL",
           f"max |tr A - 2cosh(beta omega)| = {worst:.3e}")

    if n <= trotter.TRANSFER_LIMIT and n <= exact.EXACT_LIMIT:
        th = exact.exact_thermal(model, beta)
        # single-replica marginals approach the measurement distribution
        tvs = [0.5 * float(np.abs(trotter.replica_marginal(model, beta, L2) - th.measure).sum())
               for L2 in (8, 16, 32)]
        ok = tvs[0] > tvs[1] > tvs[2] or tvs[2] < 1e-12
        yield ("marginal_convergence", "PASS" if ok else "FAIL",
               "TV at L=8,16,32: " + ", ".join(f"{t:.3e}" for t in tvs))
        # discrete partition sums approach the exact value
        errs = [abs(trotter.trotter_quantum_partition(model, beta, L2, method="transfer")
                    / th.partition - 1.0) for L2 in (8, 16, 32)]
        ok = errs[0] > errs[1] > errs[2] or errs[2] < 1e-12
        yield ("partition_convergence", "PASS" if ok else "FAIL",
               "rel err at L=8,16,32: " + ", ".join(f"{e:.3e}" for e in errs))
    else:
        yield ("marginal_convergence", "SKIP", f"needs n <= {trotter.TRANSFER_LIMIT}")
        yield ("partition_convergence", "SKIP", f"needs n <= {trotter.TRANSFER_LIMIT}")


def cmd_verify(args) -> int:
    model = _load(args)
    beta = _resolve_beta(args) if (
        args.beta is not None or args.temp_kelvin is not None or args.temp_ghz is not None
    ) else 0.5
    out = _out_stream(args.out)
    failed = False
    try:
        print("# oracle verification", file=out)
        print(f"model: {args.model}  n: {model.n}  beta: {_fmt(beta)}  seed: {args.seed}",
              file=out)
        for name, status, detail in _verify_checks(model, beta, args.seed):
            print(f"{name}: {status}  {detail}", file=out)
            failed |= status == "FAIL"
        return 1 if failed else 0
    finally:
        if args.out:
            out.close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "threshold": cmd_threshold,
        "sample": cmd_sample,
        "estimate-z": cmd_estimate_z,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
