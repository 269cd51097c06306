import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2

from wlpimc import (
    DiscreteConfig,
    JumpBudget,
    JumpBudgetExceeded,
    PiecewiseField,
    RetryLimitExceeded,
    TimModel,
    classical_gibbs,
    exact_conditional,
    flat_state,
    jump_budget,
    resample_worldline,
    sample_boundaries,
    sample_subpath,
    transfer_matrix,
    two_level_marginal_up,
)
from wlpimc.exact import exact_thermal
from wlpimc.rng import make_rng
from wlpimc.worldline import local_field_profile

from conftest import pair_model, single_qubit, tv_distance, uniform_degree_model

LOOSE_BUDGET = JumpBudget(max_jumps=200, rate_bound=10.0, fail_prob=1e-9,
                          total_updates=10**6)


def expm_oracle(h, c, lam):
    """exp(-lam * [[h, -c], [-c, -h]]) via symmetric eigendecomposition."""
    gen = np.array([[h, -c], [-c, -h]])
    vals, vecs = np.linalg.eigh(gen)
    return vecs @ np.diag(np.exp(-lam * vals)) @ vecs.T


def test_transfer_matrix_reference_values():
    tm = transfer_matrix(3.0, 4.0, 0.1)
    expected = np.array([[0.814969, 0.416876], [0.416876, 1.440283]])
    assert np.allclose(tm.matrix, expected, atol=5e-7)


@given(st.floats(-3.0, 3.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_transfer_matrix_matches_matrix_exponential(h, c, lam):
    tm = transfer_matrix(h, c, lam)
    assert np.allclose(tm.matrix, expm_oracle(h, c, lam), atol=1e-10)


@given(st.floats(-3.0, 3.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_transfer_matrix_structure(h, c, lam):
    tm = transfer_matrix(h, c, lam)
    a = tm.matrix
    assert tm.det == pytest.approx(1.0, rel=1e-9)
    assert a[0, 1] == a[1, 0]
    assert np.all(a >= 0.0) or c == 0.0
    omega = math.hypot(h, c)
    assert a[0, 0] + a[1, 1] == pytest.approx(2.0 * math.cosh(lam * omega), rel=1e-10)


@given(st.floats(-2.0, 2.0), st.floats(0.1, 2.0), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_transfer_matrix_composes_over_time(h, c, lam1, lam2):
    whole = transfer_matrix(h, c, lam1 + lam2).matrix
    split = transfer_matrix(h, c, lam1).matrix @ transfer_matrix(h, c, lam2).matrix
    assert np.allclose(whole, split, rtol=1e-9, atol=1e-12)


def test_transfer_matrix_validates_inputs():
    with pytest.raises(ValueError):
        transfer_matrix(1.0, -0.5, 1.0)
    with pytest.raises(ValueError):
        transfer_matrix(1.0, 0.5, -1.0)


def test_boundaries_zero_field_is_uniform():
    profile = PiecewiseField((0.0, 1.0), (0.0,))
    rng = make_rng(2)
    counts = Counter(sample_boundaries(profile, 1.0, rng).spins[0] for _ in range(20_000))
    p = counts[1] / 20_000
    sigma = math.sqrt(0.25 / 20_000)
    assert abs(p - 0.5) < 3.0 * sigma


def test_boundaries_single_segment_matches_closed_form():
    # constant field h=1, c=1, beta=0.5: P(+1) = 0.28473
    profile = PiecewiseField((0.0, 0.5), (1.0,))
    rng = make_rng(3)
    n = 50_000
    hits = sum(sample_boundaries(profile, 1.0, rng).spins[0] == 1 for _ in range(n))
    target = two_level_marginal_up(1.0, 1.0, 0.5)
    assert target == pytest.approx(0.28473, abs=1e-5)
    sigma = math.sqrt(target * (1.0 - target) / n)
    assert abs(hits / n - target) < 3.0 * sigma


def test_boundaries_zero_transverse_keeps_spins_equal():
    profile = PiecewiseField((0.0, 0.4, 1.0), (0.6, -0.2))
    rng = make_rng(4)
    for _ in range(200):
        spins = sample_boundaries(profile, 0.0, rng).spins
        assert len(set(spins)) == 1


def test_boundaries_distribution_matches_enumeration():
    # three segments: P(s) proportional to the product of transfer entries
    bp = (0.0, 0.3, 0.7, 1.1)
    vals = (0.8, -0.5, 0.2)
    profile = PiecewiseField(bp, vals)
    c = 0.9
    mats = [transfer_matrix(vals[i], c, bp[i + 1] - bp[i]).matrix for i in range(3)]
    idx = {1: 0, -1: 1}
    probs = {}
    for key in range(8):
        s = tuple(1 - 2 * ((key >> i) & 1) for i in range(3))
        w = 1.0
        for i in range(3):
            w *= mats[i][idx[s[(i + 1) % 3]], idx[s[i]]]
        probs[s] = w
    total = sum(probs.values())
    probs = {k: v / total for k, v in probs.items()}

    rng = make_rng(5)
    n = 100_000
    counts = Counter(tuple(sample_boundaries(profile, c, rng).spins) for _ in range(n))
    assert set(counts) <= set(probs)
    stat = sum((counts.get(k, 0) - n * p) ** 2 / (n * p) for k, p in probs.items())
    assert stat < chi2.ppf(0.999, df=len(probs) - 1)


def test_subpath_parity_follows_endpoints():
    rng = make_rng(6)
    for s_in, s_out in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        for _ in range(50):
            jumps = sample_subpath(s_in, s_out, 0.4, 0.8, 1.2, LOOSE_BUDGET, rng)
            assert len(jumps) % 2 == (0 if s_in == s_out else 1)
            assert all(0.0 < t < 0.8 for t in jumps)
            assert jumps == sorted(jumps)


def test_subpath_zero_transverse_edge_cases():
    rng = make_rng(7)
    assert sample_subpath(1, 1, 0.5, 1.0, 0.0, LOOSE_BUDGET, rng) == []
    with pytest.raises(ValueError):
        sample_subpath(1, -1, 0.5, 1.0, 0.0, LOOSE_BUDGET, rng)
    with pytest.raises(ValueError):
        sample_subpath(1, 1, 0.5, 1.0, -2.0, LOOSE_BUDGET, rng)


def test_subpath_budget_exhaustion_raises():
    tight = JumpBudget(max_jumps=0, rate_bound=10.0, fail_prob=1e-9, total_updates=100)
    rng = make_rng(8)
    with pytest.raises(JumpBudgetExceeded):
        sample_subpath(1, -1, 0.0, 1.0, 1.0, tight, rng)


def test_subpath_retry_exhaustion_raises():
    # opposite endpoints with a vanishing flip rate force rejection every try
    stubborn = JumpBudget(max_jumps=50, rate_bound=10.0, fail_prob=1e-9,
                          total_updates=100, retry_cap=20)
    rng = make_rng(9)
    with pytest.raises(RetryLimitExceeded):
        sample_subpath(1, -1, 0.0, 1.0, 1e-8, stubborn, rng)


def test_subpath_mean_jump_count_free_qubit():
    # h=0, c=1, beta=1 bridge with matched endpoints averaged over the
    # boundary law has mean jump count tanh(1) = 0.76159
    m = single_qubit(gamma=1.0)
    budget = jump_budget(m, 1.0, 1e-9, 10**6)
    rng = make_rng(10)
    n = 100_000
    total = 0
    state = flat_state(1.0, [1])
    for _ in range(n):
        state.worldlines[0].jumps.clear()
        state.worldlines[0].s0 = 1
        resample_worldline(state, 0, m, budget, rng)
        total += len(state.worldlines[0].jumps)
    mean = total / n
    # var of the count is about cosh-based but bounded by a few; crude 3 sigma
    assert abs(mean - math.tanh(1.0)) < 3.0 * math.sqrt(1.2 / n)


def test_budget_reference_rate_and_size():
    m = uniform_degree_model(6, 3, a=1.0, gamma=1.0)
    budget = jump_budget(m, 0.1, 0.9, 10)
    assert budget.rate_bound == pytest.approx(math.sqrt(10.0) + 3.0, rel=1e-12)
    assert budget.rate_bound == pytest.approx(6.16228, abs=1e-5)
    # poisson part: ceil(6.16228 * 0.1 * e^2) = 5; tail part: ceil(ln(10/0.9)) = 3
    assert budget.max_jumps == 5


def test_budget_zero_beta_keeps_tail_term():
    m = single_qubit(gamma=1.0)
    budget = jump_budget(m, 0.0, 1e-6, 10**6)
    assert budget.max_jumps == math.ceil(math.log(10**12))


def test_budget_validation():
    m = single_qubit()
    with pytest.raises(ValueError):
        jump_budget(m, 1.0, 0.0, 10)
    with pytest.raises(ValueError):
        jump_budget(m, 1.0, 1.5, 10)
    with pytest.raises(ValueError):
        jump_budget(m, 1.0, 0.5, 0)


def test_resample_rejects_negative_transverse():
    m = TimModel(n=1, edges=[], b=[0.0], gamma=[-1.0])
    state = flat_state(1.0, [1])
    with pytest.raises(ValueError):
        resample_worldline(state, 0, m, LOOSE_BUDGET, make_rng(0))


def test_resample_classical_qubit_draws_flat_gibbs():
    # gamma=0 worldlines stay flat and follow the diagonal conditional
    m = TimModel(n=2, edges=[(0, 1, 0.8)], b=[0.0, 0.0], gamma=[0.0, 0.0])
    rng = make_rng(12)
    n = 40_000
    hits = 0
    state = flat_state(0.7, [1, 1])
    for _ in range(n):
        state.worldlines[1].s0 = 1
        resample_worldline(state, 1, m, LOOSE_BUDGET, rng)
        assert state.worldlines[1].jumps == []
        hits += state.worldlines[1].s0 == 1
    # neighbor fixed at +1: P(s1=+1) = e^{-0.56} / (e^{-0.56} + e^{0.56})
    target = math.exp(-0.56) / (2.0 * math.cosh(0.56))
    sigma = math.sqrt(target * (1.0 - target) / n)
    assert abs(hits / n - target) < 3.0 * sigma


def test_resample_single_qubit_matches_diagonalization():
    m = single_qubit(b=1.0, gamma=1.0)
    budget = jump_budget(m, 0.5, 1e-9, 10**6)
    rng = make_rng(13)
    n = 20_000
    hits = 0
    state = flat_state(0.5, [1])
    for _ in range(n):
        state.worldlines[0].jumps.clear()
        state.worldlines[0].s0 = 1
        resample_worldline(state, 0, m, budget, rng)
        hits += state.worldlines[0].s0 == 1
    target = exact_thermal(m, 0.5).marginal_up(0)
    sigma = math.sqrt(target * (1.0 - target) / n)
    assert abs(hits / n - target) < 3.0 * sigma


def test_resample_conditional_matches_discrete_limit():
    # neighbor jumps sit on the L=8 grid, so the discrete replica conditional
    # and the continuous conditional agree on grid-readout patterns
    m = pair_model(0.8, b=(0.1, 0.0), gamma=(0.9, 1.0))
    beta, L = 0.15, 8
    neighbor = [2 * beta / L, 5 * beta / L]
    spins = np.ones((L, 2), dtype=np.int8)
    for i in range(L):
        t = i * beta / L
        spins[i, 0] = 1 if sum(1 for u in neighbor if u <= t) % 2 == 0 else -1
    dist = exact_conditional(1, DiscreteConfig(spins), m, beta)

    budget = jump_budget(m, beta, 1e-9, 10**6)
    rng = make_rng(14)
    n = 60_000
    counts = np.zeros(1 << L)
    state = flat_state(beta, [1, 1])
    state.worldlines[0].jumps.extend(neighbor)
    for _ in range(n):
        state.worldlines[1].jumps.clear()
        state.worldlines[1].s0 = 1
        resample_worldline(state, 1, m, budget, rng)
        wl = state.worldlines[1]
        key = 0
        for i in range(L):
            if wl.spin_at(i * beta / L, beta) == -1:
                key |= 1 << i
        counts[key] += 1

    expected = dist * n
    keep = expected >= 5.0
    pooled_exp = np.append(expected[keep], expected[~keep].sum())
    pooled_obs = np.append(counts[keep], counts[~keep].sum())
    stat = float(((pooled_obs - pooled_exp) ** 2 / pooled_exp).sum())
    assert stat < chi2.ppf(0.999, df=pooled_exp.size - 1)


def test_resample_respects_neighbor_sign_flip():
    # ferro coupling cured to antiferro means aligned has higher energy
    m = pair_model(1.5, gamma=(0.6, 0.6))
    budget = jump_budget(m, 0.4, 1e-9, 10**6)
    rng = make_rng(15)
    agree = 0
    n = 5_000
    state = flat_state(0.4, [1, 1])
    for _ in range(n):
        state.worldlines[1].jumps.clear()
        state.worldlines[1].s0 = 1
        resample_worldline(state, 1, m, budget, rng)
        agree += state.worldlines[1].s0 == 1
    assert agree / n < 0.5


def test_resample_profile_consistency_after_update():
    # updated worldline must remain a valid piecewise path for its neighbors
    m = uniform_degree_model(4, 2, a=0.7, gamma=0.9)
    budget = jump_budget(m, 0.3, 1e-9, 10**6)
    rng = make_rng(16)
    state = flat_state(0.3, [1, -1, 1, -1])
    for _ in range(100):
        j = rng.randrange(4)
        resample_worldline(state, j, m, budget, rng)
        profile = local_field_profile(state, j, m)
        assert profile.breakpoints[0] == 0.0
        assert profile.breakpoints[-1] == pytest.approx(0.3)
