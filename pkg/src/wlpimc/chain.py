"""Markov-chain driver: worldline selection, mixing schedules, sample collection.

A step picks a worldline uniformly at random and redraws it with the exact
heat-bath update.  When the contraction rate alpha(beta) is positive the
chain provably reaches total variation eps of the target after
ceil(log(n/eps)/alpha) steps from any start, so each sample runs a fresh
chain for exactly that many steps and reads the time-0 slice.  Chains are
independent and can run across a worker pool; results are keyed by sample
index, making the output independent of scheduling order.
"""
from __future__ import annotations

import math
import multiprocessing
import time
from dataclasses import dataclass

from .heatbath import (
    JumpBudget,
    JumpBudgetExceeded,
    RetryLimitExceeded,
    jump_budget,
    resample_worldline,
)
from .model import TimModel, contraction_rate
from .rng import make_rng, spawn_seeds
from .worldline import PimcState, flat_state, read_timeslice


class AboveThreshold(RuntimeError):
    """No positive contraction rate at the requested temperature."""


@dataclass(frozen=True)
class MixingPlan:
    """Certified step count to reach total variation eps from any start."""

    alpha: float
    eps: float
    t_mix: int
    diam: int  # worldline-count metric diameter, equals n


def mixing_plan(model: TimModel, beta: float, eps: float) -> MixingPlan:
    """t_mix = ceil(log(n/eps)/alpha); raises AboveThreshold when alpha <= 0."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0,1), got {eps}")
    if beta < 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    alpha = contraction_rate(model, beta)
    if alpha <= 0.0:
        raise AboveThreshold(
            f"contraction rate {alpha:.6g} <= 0 at beta={beta:.6g}; "
            "lower beta or force an explicit step count"
        )
    t_mix = math.ceil(math.log(model.n / eps) / alpha)
    return MixingPlan(alpha, eps, t_mix, model.n)


def step(state: PimcState, model: TimModel, budget: JumpBudget, rng) -> PimcState:
    """One chain step: uniform worldline choice followed by its heat-bath redraw."""
    return resample_worldline(state, rng.randrange(model.n), model, budget, rng)


@dataclass
class RunReport:
    """Bookkeeping for a sampling run; any failure invalidates the output."""

    samples: int = 0
    total_updates: int = 0
    total_jumps: int = 0  # jumps present in the final states
    failures: int = 0
    seconds: float = 0.0
    steps_per_sample: int = 0
    budget: JumpBudget | None = None
    plan: MixingPlan | None = None
    failure_reason: str | None = None

    @property
    def valid(self) -> bool:
        return self.failures == 0

    @property
    def seconds_per_update(self) -> float:
        return self.seconds / self.total_updates if self.total_updates else 0.0


def _run_chain(model: TimModel, beta: float, steps: int, budget: JumpBudget,
               seed: int, keep_state: bool):
    """One fresh-start chain; returns (payload, final jump count, error)."""
    rng = make_rng(seed)
    n = model.n
    spins = [1 if rng.random() < 0.5 else -1 for _ in range(n)]
    st = flat_state(beta, spins)
    resample = resample_worldline
    randrange = rng.randrange
    try:
        for _ in range(steps):
            resample(st, randrange(n), model, budget, rng)
    except (JumpBudgetExceeded, RetryLimitExceeded) as exc:
        return None, 0, f"{type(exc).__name__}: {exc}"
    payload = st if keep_state else read_timeslice(st, 0.0)
    return payload, st.total_jumps(), None


_WORKER_CTX: tuple | None = None


def _init_worker(model, beta, steps, budget, keep_state) -> None:
    global _WORKER_CTX
    _WORKER_CTX = (model, beta, steps, budget, keep_state)


def _run_chain_worker(args):
    idx, seed = args
    model, beta, steps, budget, keep_state = _WORKER_CTX
    return idx, _run_chain(model, beta, steps, budget, seed, keep_state)


def _collect(model: TimModel, beta: float, steps: int, budget: JumpBudget,
             seeds: list[int], workers: int, keep_state: bool):
    """Run one chain per seed; abort on the first budget failure."""
    results: list = [None] * len(seeds)
    report = RunReport(steps_per_sample=steps, budget=budget)
    t0 = time.perf_counter()
    if workers <= 1:
        for idx, seed in enumerate(seeds):
            payload, jumps, err = _run_chain(model, beta, steps, budget, seed, keep_state)
            if err is not None:
                report.failures += 1
                report.failure_reason = err
                break
            results[idx] = payload
            report.samples += 1
            report.total_updates += steps
            report.total_jumps += jumps
    else:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, len(seeds) // (workers * 8))
        with ctx.Pool(workers, initializer=_init_worker,
                      initargs=(model, beta, steps, budget, keep_state)) as pool:
            for idx, (payload, jumps, err) in pool.imap_unordered(
                _run_chain_worker, list(enumerate(seeds)), chunksize=chunk
            ):
                if err is not None:
                    report.failures += 1
                    report.failure_reason = err
                    pool.terminate()
                    break
                results[idx] = payload
                report.samples += 1
                report.total_updates += steps
                report.total_jumps += jumps
    report.seconds = time.perf_counter() - t0
    if report.failures:
        results = [r for r in results if r is not None]
    return results, report


def _resolve_steps(model: TimModel, beta: float, eps: float, force_steps):
    if force_steps is not None:
        steps = int(force_steps)
        if steps < 0:
            raise ValueError(f"step count must be nonnegative, got {steps}")
        return steps, None  # heuristic mode, no mixing certificate
    plan = mixing_plan(model, beta, eps)
    return plan.t_mix, plan


def sample_mu(model: TimModel, beta: float, eps: float, num_samples: int, seed: int,
              budget: JumpBudget | None = None, force_steps=None, workers: int = 1,
              fail_prob: float = 1e-6, retry_cap: int = 1_000_000):
    """Approximate measurement samples: list of +-1 tuples plus a RunReport.

    Each sample is an independent fresh-start chain run for the certified
    step count (or ``force_steps``), read out at imaginary time 0.  On any
    budget failure the run aborts and the report is marked invalid.
    """
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    steps, plan = _resolve_steps(model, beta, eps, force_steps)
    if budget is None:
        budget = jump_budget(model, beta, fail_prob, max(1, steps * num_samples), retry_cap)
    seeds = spawn_seeds(seed, num_samples)
    samples, report = _collect(model, beta, steps, budget, seeds, workers, keep_state=False)
    report.plan = plan
    return samples, report


def sample_states(model: TimModel, beta: float, eps: float, num_samples: int, seed: int,
                  budget: JumpBudget | None = None, force_steps=None, workers: int = 1,
                  fail_prob: float = 1e-6, retry_cap: int = 1_000_000):
    """Like sample_mu but returns the full continuous-time states."""
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    steps, plan = _resolve_steps(model, beta, eps, force_steps)
    if budget is None:
        budget = jump_budget(model, beta, fail_prob, max(1, steps * num_samples), retry_cap)
    seeds = spawn_seeds(seed, num_samples)
    states, report = _collect(model, beta, steps, budget, seeds, workers, keep_state=True)
    report.plan = plan
    return states, report


def sample_mu_thinned(model: TimModel, beta: float, eps: float, num_samples: int,
                      seed: int, thin: int | None = None,
                      budget: JumpBudget | None = None,
                      fail_prob: float = 1e-6, retry_cap: int = 1_000_000):
    """Heuristic sampler: one long chain, thinned readout after one burn-in.

    Cheaper than fresh starts but samples are correlated; nothing here is
    covered by the mixing certificate beyond the burn-in.  Prefer sample_mu
    for anything quantitative.
    """
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    plan = mixing_plan(model, beta, eps)
    if thin is None:
        thin = model.n
    total = plan.t_mix + thin * num_samples
    if budget is None:
        budget = jump_budget(model, beta, fail_prob, total, retry_cap)
    rng = make_rng(seed)
    spins = [1 if rng.random() < 0.5 else -1 for _ in range(model.n)]
    st = flat_state(beta, spins)
    report = RunReport(steps_per_sample=thin, budget=budget, plan=plan)
    samples: list[tuple[int, ...]] = []
    t0 = time.perf_counter()
    try:
        for _ in range(plan.t_mix):
            step(st, model, budget, rng)
        report.total_updates += plan.t_mix
        for _ in range(num_samples):
            for _ in range(thin):
                step(st, model, budget, rng)
            report.total_updates += thin
            samples.append(read_timeslice(st, 0.0))
            report.samples += 1
    except (JumpBudgetExceeded, RetryLimitExceeded) as exc:
        report.failures += 1
        report.failure_reason = f"{type(exc).__name__}: {exc}"
    report.total_jumps = st.total_jumps()
    report.seconds = time.perf_counter() - t0
    return samples, report
