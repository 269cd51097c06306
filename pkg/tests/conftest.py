import math

import hypothesis
import numpy as np
import pytest

from wlpimc import TimModel
from wlpimc.rng import make_rng

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True
)
hypothesis.settings.load_profile("default")


def single_qubit(b=0.0, gamma=1.0):
    return TimModel(n=1, edges=[], b=[b], gamma=[gamma])


def pair_model(a, b=(0.0, 0.0), gamma=(1.0, 1.0)):
    return TimModel(n=2, edges=[(0, 1, a)], b=list(b), gamma=list(gamma))


def uniform_degree_model(n, delta, a=1.0, gamma=1.0):
    """Circulant graph where every site has interaction degree exactly delta."""
    assert delta < n and (delta % 2 == 0 or n % 2 == 0), "degree sequence infeasible"
    edges = []
    for k in range(1, delta // 2 + 1):
        for i in range(n):
            j = (i + k) % n
            edges.append((min(i, j), max(i, j), a))
    edges = sorted(set(edges))
    if delta % 2 == 1:
        for i in range(n // 2):
            edges.append((i, i + n // 2, a))
    return TimModel(n=n, edges=sorted(edges), b=[0.0] * n, gamma=[gamma] * n)


def random_config_spins(rng, L, n):
    return np.array(
        [[1 if rng.random() < 0.5 else -1 for _ in range(n)] for _ in range(L)],
        dtype=np.int8,
    )


def empirical_counts(samples, n):
    """Empirical law of +-1 tuples over basis indices (bit j set means spin -1)."""
    counts = np.zeros(1 << n)
    for z in samples:
        counts[sum(1 << j for j, s in enumerate(z) if s == -1)] += 1
    return counts / max(1, len(samples))


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def multinomial_noise_floor(p, num_samples):
    """Expected TV of the empirical law of ``num_samples`` draws from p."""
    p = np.asarray(p)
    return 0.5 * float(np.sqrt(2.0 * p * (1.0 - p) / (math.pi * num_samples)).sum())


@pytest.fixture
def rng():
    return make_rng(20240817)
