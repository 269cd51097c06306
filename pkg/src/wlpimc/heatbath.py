"""Continuous-time worldline heat-bath sampler.

One update redraws a single worldline exactly from its conditional law given
the others.  Conditioned on the cavity field (piecewise constant with q
interior breakpoints), the worldline measure factorizes into boundary spins
at the breakpoints and independent subpaths inside each constant-field
segment:

  * per-segment propagators are the 2x2 matrices exp(-lam (h Z - c X));
  * boundary spins follow the cyclic product law
    <s_0|A_q|s_q> ... <s_1|A_0|s_0> / Tr[A_q ... A_0], sampled sequentially
    from exact conditionals built out of suffix products;
  * within a segment, jumps come from alternating exponential waiting times
    with rate omega + (current spin) * h, accepted when the endpoint spin
    matches; the acceptance test makes the draw exact.

Jump counts are capped by a budget (Poisson-tail bound); exceeding it is a
hard failure and the caller must discard the run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TimModel, coupling_stats
from .worldline import PimcState, PiecewiseField, local_field_profile


class JumpBudgetExceeded(RuntimeError):
    """A single worldline update accumulated more jumps than the budget allows."""


class RetryLimitExceeded(RuntimeError):
    """The subpath rejection loop hit its retry cap."""


def _entries(h: float, c: float, lam: float) -> tuple[float, float, float]:
    """(A[+,+], off-diagonal, A[-,-]) of exp(-lam (h Z - c X)).

    Index order: matrix row/column 0 is spin +1.  The matrix is symmetric.
    """
    omega = math.hypot(h, c)
    x = lam * omega
    if x == 0.0:
        return 1.0, 0.0, 1.0
    ch = math.cosh(x)
    sh = math.sinh(x) / omega
    return ch - h * sh, c * sh, ch + h * sh


def _entries_scaled(h: float, c: float, lam: float) -> tuple[float, float, float]:
    """_entries divided by cosh(lam omega); overflow-free, scale cancels in ratios."""
    omega = math.hypot(h, c)
    x = lam * omega
    if x == 0.0:
        return 1.0, 0.0, 1.0
    th = math.tanh(x) / omega
    return 1.0 - h * th, c * th, 1.0 + h * th


@dataclass(frozen=True)
class TransferMatrix:
    """Propagator over one constant-field segment of a worldline."""

    h: float
    c: float
    lam: float
    matrix: np.ndarray  # 2x2, indices: 0 = spin +1, 1 = spin -1

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def transfer_matrix(h: float, c: float, lam: float) -> TransferMatrix:
    """exp(-lam (h Z - c X)) in closed form; identity when lam or omega is 0."""
    if lam < 0:
        raise ValueError(f"segment length must be nonnegative, got {lam}")
    if c < 0:
        raise ValueError(f"transverse strength must be nonnegative, got {c}")
    app, off, amm = _entries(h, c, lam)
    return TransferMatrix(h, c, lam, np.array([[app, off], [off, amm]]))


@dataclass
class BoundarySpins:
    """Spins at the field profile's breakpoints; spins[0] is the periodic anchor."""

    spins: list[int]


def sample_boundaries(profile: PiecewiseField, c: float, rng) -> BoundarySpins:
    """Draw breakpoint spins from the exact cyclic-product distribution.

    s_0 comes from the diagonal of the full product, each following spin from
    its conditional given s_0 and its predecessor; suffix products carry the
    remaining segments.  Every 2x2 factor is normalized to its largest entry,
    which cancels in the conditional ratios.
    """
    if c < 0:
        raise ValueError(f"transverse strength must be nonnegative, got {c}")
    hs = profile.values
    lengths = profile.lengths()
    nseg = len(hs)
    mats = []
    for h, lam in zip(hs, lengths):
        app, off, amm = _entries_scaled(h, c, lam)
        s = max(app, amm)
        mats.append((app / s, off / s, amm / s))
    # suffix[i] = A_{nseg-1} ... A_i as a full 2x2 (m00, m01, m10, m11)
    suffix: list[tuple[float, float, float, float]] = [(1.0, 0.0, 0.0, 1.0)] * (nseg + 1)
    for i in range(nseg - 1, -1, -1):
        app, off, amm = mats[i]
        m00, m01, m10, m11 = suffix[i + 1]
        r00 = m00 * app + m01 * off
        r01 = m00 * off + m01 * amm
        r10 = m10 * app + m11 * off
        r11 = m10 * off + m11 * amm
        s = max(r00, r01, r10, r11)
        suffix[i] = (r00 / s, r01 / s, r10 / s, r11 / s)
    m00, _, _, m11 = suffix[0]
    s0 = 1 if rng.random() * (m00 + m11) < m00 else -1
    spins = [s0]
    row = 0 if s0 == 1 else 1
    prev = s0
    for i in range(nseg - 1):
        app, off, amm = mats[i]
        to_plus = app if prev == 1 else off
        to_minus = off if prev == 1 else amm
        nxt = suffix[i + 1]
        if row == 0:
            wp = nxt[0] * to_plus
            wm = nxt[1] * to_minus
        else:
            wp = nxt[2] * to_plus
            wm = nxt[3] * to_minus
        sp = 1 if rng.random() * (wp + wm) < wp else -1
        spins.append(sp)
        prev = sp
    return BoundarySpins(spins)


def sample_subpath(
    s_in: int,
    s_out: int,
    h: float,
    lam_seg: float,
    c: float,
    budget: "JumpBudget",
    rng,
    allowance: int | None = None,
) -> list[float]:
    """Jump offsets in (0, lam_seg) of an exact constant-field bridge.

    Waiting times are exponential with rate omega + (current spin) * h; the
    path is accepted when its endpoint spin equals ``s_out``.  ``allowance``
    caps the jumps of this segment (defaults to the full budget).
    """
    if c < 0:
        raise ValueError(f"transverse strength must be nonnegative, got {c}")
    if c == 0.0:
        if s_in != s_out:
            raise ValueError("impossible boundary: endpoint spins differ with zero flip rate")
        return []
    if allowance is None:
        allowance = budget.max_jumps
    omega = math.hypot(h, c)
    rate = {1: omega + h, -1: omega - h}
    expo = rng.expovariate
    for _ in range(budget.retry_cap):
        t = 0.0
        spin = s_in
        jumps: list[float] = []
        while True:
            t += expo(rate[spin])
            if t >= lam_seg:
                break
            if len(jumps) >= allowance:
                raise JumpBudgetExceeded(
                    f"more than {allowance} jumps in one segment (budget k={budget.max_jumps})"
                )
            jumps.append(t)
            spin = -spin
        if spin == s_out:
            return jumps
    raise RetryLimitExceeded(f"no accepted subpath in {budget.retry_cap} attempts")


@dataclass(frozen=True)
class JumpBudget:
    """Per-update jump cap with its Poisson-tail justification.

    ``max_jumps`` bounds the jumps a single worldline update may generate;
    the chance any update in a planned run exceeds it is below ``fail_prob``
    when jumps are dominated by Poisson(rate_bound * beta).
    """

    max_jumps: int
    rate_bound: float
    fail_prob: float
    total_updates: int
    retry_cap: int = 1_000_000


def jump_budget(
    model: TimModel,
    beta: float,
    target_fail_prob: float,
    total_updates: int,
    retry_cap: int = 1_000_000,
) -> JumpBudget:
    """Budget k = max(ceil(rate * beta * e^2), ceil(log(updates / fail)))."""
    if total_updates < 1:
        raise ValueError(f"total_updates must be >= 1, got {total_updates}")
    if not 0.0 < target_fail_prob < 1.0:
        raise ValueError(f"target_fail_prob must be in (0,1), got {target_fail_prob}")
    stats = coupling_stats(model)
    h_max = stats.max_degree * stats.max_coupling
    rate = math.hypot(h_max, stats.max_transverse) + h_max
    k_poisson = math.ceil(rate * beta * math.e**2)
    k_tail = math.ceil(math.log(total_updates / target_fail_prob))
    return JumpBudget(max(k_poisson, k_tail), rate, target_fail_prob, total_updates, retry_cap)


def resample_worldline(state: PimcState, j: int, model: TimModel, budget: JumpBudget, rng) -> PimcState:
    """Replace worldline j with an exact draw from its conditional law.

    Mutates ``state`` in place (single-owner access) and returns it.  A site
    with zero transverse field reduces to a two-outcome Gibbs draw between
    the flat worldlines.
    """
    beta = state.beta
    gamma = model.gamma[j]
    if gamma < 0:
        raise ValueError(f"negative transverse field on qubit {j}; cure the sign first")
    wl = state.worldlines[j]
    if gamma == 0.0:
        integ = local_field_profile(state, j, model).integral()
        # flat worldline weights exp(-s * integral of the cavity field)
        if integ > 350.0:
            p_plus = 0.0
        elif integ < -350.0:
            p_plus = 1.0
        else:
            p_plus = 1.0 / (1.0 + math.exp(2.0 * integ))
        wl.s0 = 1 if rng.random() < p_plus else -1
        wl.jumps = []
        return state
    profile = local_field_profile(state, j, model)
    values = profile.values
    if len(values) == 1:
        # constant cavity field: anchor from the diagonal of the full propagator
        h = values[0]
        omega = math.hypot(h, gamma)
        p_plus = 0.5 * (1.0 - (h / omega) * math.tanh(beta * omega))
        s0 = 1 if rng.random() < p_plus else -1
        wl.s0 = s0
        wl.jumps = sample_subpath(s0, s0, h, beta, gamma, budget, rng)
        return state
    bounds = sample_boundaries(profile, gamma, rng).spins
    bp = profile.breakpoints
    nseg = len(values)
    jumps: list[float] = []
    used = 0
    for i in range(nseg):
        s_in = bounds[i]
        s_out = bounds[i + 1] if i + 1 < nseg else bounds[0]
        seg = sample_subpath(
            s_in, s_out, values[i], bp[i + 1] - bp[i], gamma, budget, rng,
            allowance=budget.max_jumps - used,
        )
        used += len(seg)
        t0 = bp[i]
        jumps.extend(t0 + tau for tau in seg)
    wl.s0 = bounds[0]
    wl.jumps = jumps
    return state
