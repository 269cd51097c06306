"""Sample-average observables and an annealed partition-function estimator.

The partition function is estimated as a telescoping product

    Z(beta) = Z(beta_0) * prod_i Z(beta_{i+1}) / Z(beta_i)

over a geometric temperature schedule.  The anchor Z(beta_0) comes from a
second-order trace expansion with a certified remainder (beta_0 is chosen
small enough that the remainder is negligible).  Each ratio is the mean of a
reweighting factor computable exactly from a continuous-time state: under
the time rescaling t -> (beta'/beta) t, a path with m jumps and integrated
diagonal energy I changes measure by (beta'/beta)^m * exp(-(beta'/beta - 1) I),
whose equilibrium average at beta is exactly Z(beta')/Z(beta).

Models with all transverse fields zero skip the machinery entirely: the
partition function is a finite sum computed by enumeration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import sample_states
from .exact import classical_partition
from .model import TimModel, coupling_stats
from .rng import spawn_seeds
from .worldline import PimcState, diagonal_energy_integral


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    count: int


def diagonal_observable(samples, f) -> Estimate:
    """Mean and standard error of f(z) over measurement samples."""
    if len(samples) == 0:
        raise ValueError("no samples")
    vals = np.array([f(z) for z in samples], dtype=np.float64)
    n = vals.size
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(vals.mean()), stderr, n)


@dataclass(frozen=True)
class RatioWeight:
    """Reweighting factor carrying a state from beta_src to beta_dst."""

    beta_src: float
    beta_dst: float
    jumps: int
    energy_integral: float

    @property
    def value(self) -> float:
        r = self.beta_dst / self.beta_src
        return r**self.jumps * math.exp(-(r - 1.0) * self.energy_integral)


def ratio_weight(state: PimcState, model: TimModel, beta_dst: float) -> RatioWeight:
    """Weight of rescaling a path at state.beta onto inverse temperature beta_dst.

    E[value] over equilibrium states at state.beta equals
    Z(beta_dst)/Z(state.beta); the identity is exact in continuous time.
    """
    if state.beta <= 0.0 or beta_dst <= 0.0:
        raise ValueError("both inverse temperatures must be positive")
    return RatioWeight(
        state.beta, beta_dst, state.total_jumps(), diagonal_energy_integral(state, model)
    )


@dataclass(frozen=True)
class StageEstimate:
    beta_lo: float
    beta_hi: float
    ratio: float
    stderr: float
    samples: int


@dataclass
class PartitionEstimate:
    """Final estimate with its error budget and the schedule actually used."""

    value: float
    rel_stderr: float
    rel_ci95: float  # 1.96 * rel_stderr plus the anchor remainder bound
    anchor_beta: float
    anchor_value: float
    anchor_rel_remainder: float
    method: str  # "annealed" | "classical" | "anchor"
    valid: bool
    stages: list[StageEstimate] = field(default_factory=list)
    failure_reason: str | None = None

    @property
    def log_value(self) -> float:
        return math.log(self.value) if self.value > 0 else -math.inf


def _one_norm(model: TimModel) -> float:
    """Triangle-inequality bound on the Hamiltonian's operator norm."""
    return (
        sum(abs(a) for _, _, a in model.edges)
        + sum(abs(x) for x in model.b)
        + sum(abs(g) for g in model.gamma)
    )


def series_anchor(model: TimModel, beta0: float) -> tuple[float, float]:
    """Second-order expansion of Z(beta0) and its relative remainder bound.

    Every Hamiltonian term is traceless and distinct terms multiply to
    traceless products, so tr H = 0 and tr H^2 / 2^n reduces to the sum of
    squared coefficients.  The truncated tail is bounded through the
    operator norm: |remainder| <= 2^n (e^x - 1 - x - x^2/2), x = beta0 |H|.
    """
    s2 = (
        sum(a * a for _, _, a in model.edges)
        + sum(x * x for x in model.b)
        + sum(g * g for g in model.gamma)
    )
    x = beta0 * _one_norm(model)
    value = 2.0**model.n * (1.0 + 0.5 * beta0 * beta0 * s2)
    remainder = 2.0**model.n * (math.expm1(x) - x - 0.5 * x * x)
    return value, remainder / value


def _growth(cur: float, n: int, jd: float, bmax: float) -> float:
    """Relative schedule increment keeping per-stage weight variance in check."""
    return 1.0 / (2.0 + cur * n * (jd + bmax))


def _stages_remaining(cur: float, beta: float, n: int, jd: float, bmax: float) -> int:
    count = 0
    while cur < beta * (1.0 - 1e-12):
        cur = min(beta, cur * (1.0 + _growth(cur, n, jd, bmax)))
        count += 1
        if count >= 100_000:
            break
    return max(count, 1)


def _invalid(anchor_beta: float, anchor_value: float, anchor_rem: float,
             stages: list[StageEstimate], reason: str) -> PartitionEstimate:
    # budget failure: terminate and output a zero-valued, invalid estimate
    return PartitionEstimate(
        value=0.0, rel_stderr=math.inf, rel_ci95=math.inf,
        anchor_beta=anchor_beta, anchor_value=anchor_value,
        anchor_rel_remainder=anchor_rem, method="annealed", valid=False,
        stages=stages, failure_reason=reason,
    )


def estimate_partition(
    model: TimModel,
    beta: float,
    rel_err: float,
    seed: int,
    workers: int = 1,
    fail_prob: float = 1e-6,
    retry_cap: int = 1_000_000,
    mix_eps: float = 1e-3,
    base_samples: int = 1024,
    max_stage_samples: int = 1 << 17,
    var_bound: float = 2.0,
) -> PartitionEstimate:
    """Estimate Z(beta) to a target relative error at 95% confidence.

    Classical (all-gamma-zero) models are summed exactly by enumeration.
    Otherwise the anchor covers inverse temperatures up to roughly 0.1/|H|
    and staged ratio estimation bridges the rest, drawing equilibrium states
    with the certified sampler at every stage temperature.  Stages whose
    weights spread too widely are bisected; sample counts per stage grow
    until the stage meets its share of the error budget.
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not 0.0 < rel_err < 1.0:
        raise ValueError(f"rel_err must be in (0,1), got {rel_err}")
    if all(g == 0.0 for g in model.gamma):
        z = classical_partition(model, beta)
        return PartitionEstimate(
            value=z, rel_stderr=0.0, rel_ci95=0.0, anchor_beta=beta,
            anchor_value=z, anchor_rel_remainder=0.0, method="classical", valid=True,
        )
    h1 = _one_norm(model)
    beta0 = min(beta, 0.1 / h1)
    anchor, anchor_rem = series_anchor(model, beta0)
    if beta0 >= beta * (1.0 - 1e-12):
        return PartitionEstimate(
            value=anchor, rel_stderr=0.0, rel_ci95=anchor_rem, anchor_beta=beta0,
            anchor_value=anchor, anchor_rel_remainder=anchor_rem,
            method="anchor", valid=True,
        )
    stats = coupling_stats(model)
    jd = stats.max_coupling * stats.max_degree
    bmax = max((abs(x) for x in model.b), default=0.0)
    n = model.n
    # split the confidence budget: statistical part gets what the anchor leaves
    stat_rel = max(rel_err - anchor_rem, 0.5 * rel_err)
    var_budget = (0.8 * stat_rel / 1.96) ** 2
    used_var = 0.0
    log_z = math.log(anchor)
    stages: list[StageEstimate] = []
    batch_seeds = iter(spawn_seeds(seed, 65536))
    cur = beta0
    while cur < beta * (1.0 - 1e-12):
        nxt = min(beta, cur * (1.0 + _growth(cur, n, jd, bmax)))
        while True:
            remaining = _stages_remaining(cur, beta, n, jd, bmax)
            se_target = math.sqrt(max(var_budget - used_var, 1e-12) / remaining)
            weights: list[float] = []
            want = base_samples
            while True:
                draw = want - len(weights)
                states, rep = sample_states(
                    model, cur, mix_eps, draw, next(batch_seeds),
                    workers=workers, fail_prob=fail_prob, retry_cap=retry_cap,
                )
                if not rep.valid:
                    return _invalid(beta0, anchor, anchor_rem, stages, rep.failure_reason)
                weights.extend(ratio_weight(st, model, nxt).value for st in states)
                arr = np.array(weights)
                mean = float(arr.mean())
                sd = float(arr.std(ddof=1))
                rel_se = sd / (mean * math.sqrt(arr.size))
                if rel_se <= se_target or arr.size >= max_stage_samples:
                    break
                need = int(math.ceil((sd / (mean * se_target)) ** 2 * 1.1))
                want = min(max(need, 2 * arr.size), max_stage_samples)
            if sd / mean > var_bound and (nxt - cur) > 1e-6 * cur:
                # weights spread too widely for this step size: bisect the stage
                nxt = cur + 0.5 * (nxt - cur)
                continue
            break
        stages.append(StageEstimate(cur, nxt, mean, sd / math.sqrt(arr.size), arr.size))
        log_z += math.log(mean)
        used_var += rel_se * rel_se
        cur = nxt
    rel_stderr = math.sqrt(used_var)
    return PartitionEstimate(
        value=math.exp(log_z), rel_stderr=rel_stderr,
        rel_ci95=1.96 * rel_stderr + anchor_rem, anchor_beta=beta0,
        anchor_value=anchor, anchor_rel_remainder=anchor_rem,
        method="annealed", valid=True, stages=stages,
    )
