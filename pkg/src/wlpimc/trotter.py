"""Discrete quantum-to-classical mapping, exact at desk scale.

The quantum model maps to L coupled replicas of the n classical spins.  The
unnormalized weight of a configuration ``z`` (an L x n array of +-1) is

    w(z) = exp( -(beta/L) * sum_i E_cl(z_i) ) * prod_j t_j^{m_j}

with ``E_cl`` the diagonal energy of replica i, ``t_j = tanh(beta g_j / L)``
and ``m_j`` the number of sign changes of worldline j around the periodic
imaginary-time circle.  Summing w over all configurations gives the classical
normalizer Z(L); multiplying by ``prod_j cosh(beta g_j / L)^L`` gives the
discrete estimate of the quantum partition function, which converges to
``tr exp(-beta H)`` as L grows.

Everything here is exact linear algebra or exact enumeration, guarded by hard
size limits.  It exists to verify the continuous-time sampler; none of it is
used in production sampling.

Encoding: configurations are indexed by integers with bit ``i*n + j`` holding
replica i of qubit j; candidate worldlines by integers with bit ``k`` holding
replica k.  A zero bit means spin +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import TimModel

ENUMERATION_LIMIT = 24  # max n*L for full configuration enumeration
TRANSFER_LIMIT = 10  # max n for the replica transfer matrix
CONDITIONAL_LIMIT = 14  # max L for exact worldline conditionals
KERNEL_LIMIT = 10  # max n*L for the full heat-bath transition matrix

_CHUNK = 1 << 16


class SizeGuardError(ValueError):
    """Requested exact computation exceeds its hard size limit."""


@dataclass
class DiscreteConfig:
    """L x n array of +-1 spins; row = replica (time slice), column = qubit."""

    spins: np.ndarray

    def __post_init__(self) -> None:
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if self.spins.ndim != 2:
            raise ValueError("spins must be a 2-d array")
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be +-1")

    @property
    def L(self) -> int:
        return self.spins.shape[0]

    @property
    def n(self) -> int:
        return self.spins.shape[1]

    def replica(self, i: int) -> np.ndarray:
        return self.spins[i]

    def worldline(self, j: int) -> np.ndarray:
        return self.spins[:, j]

    @classmethod
    def from_index(cls, idx: int, L: int, n: int) -> "DiscreteConfig":
        bits = (idx >> np.arange(L * n)) & 1
        return cls((1 - 2 * bits).reshape(L, n))

    def to_index(self) -> int:
        bits = ((1 - self.spins) // 2).reshape(-1)
        return int(np.dot(bits, 1 << np.arange(bits.size, dtype=object)))


def periodic_flips(worldline: np.ndarray) -> int:
    """Sign changes along a worldline, counting the wrap-around pair."""
    w = np.asarray(worldline)
    return int(np.count_nonzero(w != np.roll(w, -1)))


def flip_phi(m: int, beta: float, gamma_j: float, L: int) -> float:
    """tanh(beta gamma / L)^m for an explicit flip count.

    Odd m is answerable here even though cyclic counting of a +-1 vector can
    never produce it; a zero transverse field gives 1 only for m = 0.
    """
    if gamma_j == 0.0:
        return 1.0 if m == 0 else 0.0
    return math.tanh(beta * gamma_j / L) ** m


def worldline_phi(worldline: np.ndarray, beta: float, gamma_j: float, L: int) -> float:
    """tanh(beta gamma / L) raised to the number of periodic sign changes.

    A zero transverse field gives 1 for a flat worldline and 0 otherwise.
    """
    return flip_phi(periodic_flips(worldline), beta, gamma_j, L)


def validate_config(config: DiscreteConfig) -> list[str]:
    """Violation list for a discrete configuration (empty means valid).

    Spin values are enforced at construction; cyclic flip counts of +-1
    vectors are even by construction, so the parity check can only fire on a
    corrupted array.
    """
    problems = []
    if config.L < 2:
        problems.append(f"need at least 2 replicas, got {config.L}")
    for j in range(config.n):
        if periodic_flips(config.worldline(j)) % 2 != 0:
            problems.append(f"worldline {j}: odd periodic flip count")
    return problems


@dataclass(frozen=True)
class ClassicalWeight:
    exponent: float  # -(beta/L) * summed diagonal energy
    phi: tuple[float, ...]  # per-worldline flip factor
    weight: float


def classical_weight(config: DiscreteConfig, model: TimModel, beta: float) -> ClassicalWeight:
    z = config.spins
    L = config.L
    diag = 0.0
    for i, j, a in model.edges:
        diag += a * float(np.dot(z[:, i], z[:, j]))
    diag += float(np.dot(np.asarray(model.b), z.sum(axis=0)))
    exponent = -(beta / L) * diag
    phis = tuple(worldline_phi(z[:, j], beta, model.gamma[j], L) for j in range(config.n))
    w = math.exp(exponent)
    for p in phis:
        w *= p
    return ClassicalWeight(exponent, phis, w)


def _basis_spins(n: int) -> np.ndarray:
    """(2^n, n) array of +-1 spin vectors for every basis index."""
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _diag_energies(model: TimModel) -> np.ndarray:
    """Diagonal energy E_cl for every one of the 2^n basis configurations."""
    z = _basis_spins(model.n).astype(np.float64)
    e = np.zeros(1 << model.n)
    for i, j, a in model.edges:
        e += a * z[:, i] * z[:, j]
    e += z @ np.asarray(model.b, dtype=np.float64)
    return e


def _xor_flip_weights(model: TimModel, beta: float, L: int) -> np.ndarray:
    """W[d] = prod over set bits j of d of tanh(beta g_j / L)."""
    n = model.n
    t = [math.tanh(beta * g / L) for g in model.gamma]
    w = np.empty(1 << n)
    w[0] = 1.0
    for d in range(1, 1 << n):
        low = d & -d
        w[d] = w[d ^ low] * t[low.bit_length() - 1]
    return w


def _replica_transfer_sym(model: TimModel, beta: float, L: int) -> np.ndarray:
    """Symmetrized replica-to-replica transfer matrix (2^n x 2^n)."""
    if model.n > TRANSFER_LIMIT:
        raise SizeGuardError(f"transfer path needs n <= {TRANSFER_LIMIT}, got {model.n}")
    e = _diag_energies(model)
    half = np.exp(-0.5 * (beta / L) * e)
    w = _xor_flip_weights(model, beta, L)
    idx = np.arange(1 << model.n)
    flip = w[idx[:, None] ^ idx[None, :]]
    return half[:, None] * flip * half[None, :]


def _enumerate_partition(model: TimModel, beta: float, L: int) -> float:
    n = model.n
    nbits = n * L
    total = 0.0
    tanhs = np.array([math.tanh(beta * g / L) for g in model.gamma])
    b = np.asarray(model.b, dtype=np.float64)
    shifts = np.arange(nbits)
    for start in range(0, 1 << nbits, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 1 << nbits), dtype=np.int64)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        z = (1 - 2 * bits).astype(np.float64).reshape(-1, L, n)
        diag = np.zeros(z.shape[0])
        for i, j, a in model.edges:
            diag += a * np.einsum("bl,bl->b", z[:, :, i], z[:, :, j])
        diag += z.sum(axis=1) @ b
        flips = np.count_nonzero(z != np.roll(z, -1, axis=1), axis=1)  # (B, n)
        phi = np.power(tanhs[None, :], flips)  # 0**0 == 1 covers gamma = 0
        total += float(np.sum(np.exp(-(beta / L) * diag) * phi.prod(axis=1)))
    return total


def trotter_partition(model: TimModel, beta: float, L: int, method: str = "auto") -> float:
    """Sum of classical weights over all L x n configurations.

    ``method="enumerate"`` sums the 2^(nL) weights directly (guarded);
    ``method="transfer"`` contracts the replica transfer matrix, exact for
    any L at small n.  ``"auto"`` enumerates when feasible.
    """
    if method == "auto":
        method = "enumerate" if model.n * L <= ENUMERATION_LIMIT else "transfer"
    if method == "enumerate":
        if model.n * L > ENUMERATION_LIMIT:
            raise SizeGuardError(
                f"enumeration needs n*L <= {ENUMERATION_LIMIT}, got {model.n * L}"
            )
        return _enumerate_partition(model, beta, L)
    if method == "transfer":
        ts = _replica_transfer_sym(model, beta, L)
        evals = np.linalg.eigvalsh(ts)
        return float(np.sum(evals**L))
    raise ValueError(f"unknown method {method!r}")


def trotter_quantum_partition(model: TimModel, beta: float, L: int, method: str = "auto") -> float:
    """Discrete estimate of tr exp(-beta H); converges to it as L grows."""
    scale = 1.0
    for g in model.gamma:
        scale *= math.cosh(beta * g / L) ** L
    return scale * trotter_partition(model, beta, L, method=method)


def replica_marginal(model: TimModel, beta: float, L: int) -> np.ndarray:
    """Distribution of a single replica under the normalized discrete measure.

    Returned over basis indices (bit j = 0 means qubit j has spin +1).  This
    is the finite-L counterpart of the measurement distribution of the
    thermal state.
    """
    ts = _replica_transfer_sym(model, beta, L)
    evals, vecs = np.linalg.eigh(ts)
    powered = evals**L
    diag = (vecs**2) @ powered
    return diag / diag.sum()


@lru_cache(maxsize=8)
def _candidates(L: int) -> tuple[np.ndarray, np.ndarray]:
    """All 2^L worldline candidates and their periodic flip counts."""
    idx = np.arange(1 << L)
    bits = (idx[:, None] >> np.arange(L)[None, :]) & 1
    c = (1 - 2 * bits).astype(np.int8)
    flips = np.count_nonzero(c != np.roll(c, -1, axis=1), axis=1)
    return c, flips


def conditional_energy(j: int, candidate: np.ndarray, config: DiscreteConfig, model: TimModel) -> float:
    """Energy terms involving worldline j when it is replaced by ``candidate``."""
    z = config.spins
    cand = np.asarray(candidate, dtype=np.float64)
    field = np.full(config.L, float(model.b[j]))
    for i, a in model.neighbors[j]:
        field += a * z[:, i]
    return float(np.dot(field, cand))


def exact_conditional(j: int, config: DiscreteConfig, model: TimModel, beta: float) -> np.ndarray:
    """Heat-bath distribution of worldline j given the rest of the lattice.

    Returned over candidate indices (bit k = 0 means replica k has spin +1);
    proportional to exp(-(beta/L) g_j(candidate)) * phi(candidate).
    """
    L = config.L
    if L > CONDITIONAL_LIMIT:
        raise SizeGuardError(f"exact conditional needs L <= {CONDITIONAL_LIMIT}, got {L}")
    cands, flips = _candidates(L)
    field = np.full(L, float(model.b[j]))
    for i, a in model.neighbors[j]:
        field += a * config.spins[:, i].astype(np.float64)
    g = cands.astype(np.float64) @ field
    if model.gamma[j] == 0.0:
        phi = (flips == 0).astype(np.float64)
    else:
        phi = math.tanh(beta * model.gamma[j] / L) ** flips
    w = np.exp(-(beta / L) * g) * phi
    return w / w.sum()


def conditional_tv(
    j: int,
    config_a: DiscreteConfig,
    config_b: DiscreteConfig,
    model: TimModel,
    beta: float,
) -> tuple[float, float, bool]:
    """Total variation between worldline-j conditionals of two lattices.

    The lattices must differ on exactly one worldline i != j.  Returns
    ``(tv, bound, holds)`` with ``bound = (e^{4 beta |a_ij|} - 1) / 2``; the
    bound is 0 (and the conditionals equal) when i is not a neighbor of j.
    """
    differs = [
        k for k in range(config_a.n)
        if not np.array_equal(config_a.spins[:, k], config_b.spins[:, k])
    ]
    if len(differs) != 1:
        raise ValueError(f"configs must differ on exactly one worldline, differ on {differs}")
    i = differs[0]
    if i == j:
        raise ValueError("the differing worldline must not be the updated one")
    pa = exact_conditional(j, config_a, model, beta)
    pb = exact_conditional(j, config_b, model, beta)
    tv = 0.5 * float(np.abs(pa - pb).sum())
    a_ij = model.coupling(i, j)
    bound = 0.5 * (math.exp(4.0 * beta * abs(a_ij)) - 1.0)
    return tv, bound, tv <= bound + 1e-12


def _worldline_scatter(L: int, n: int, j: int) -> np.ndarray:
    """Map candidate index -> config-index bits of worldline j."""
    c = np.arange(1 << L, dtype=np.int64)
    out = np.zeros(1 << L, dtype=np.int64)
    for k in range(L):
        out |= ((c >> k) & 1) << (k * n + j)
    return out


def heatbath_kernel(model: TimModel, beta: float, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Stationary distribution and full transition matrix of the chain.

    One step: choose a worldline uniformly, redraw it from its exact
    conditional.  Returns ``(pi, P)`` over all 2^(nL) configuration indices;
    intended for stationarity certificates at tiny sizes.
    """
    n = model.n
    if n * L > KERNEL_LIMIT:
        raise SizeGuardError(f"kernel needs n*L <= {KERNEL_LIMIT}, got {n * L}")
    size = 1 << (n * L)
    weights = np.array(
        [classical_weight(DiscreteConfig.from_index(s, L, n), model, beta).weight for s in range(size)]
    )
    pi = weights / weights.sum()
    P = np.zeros((size, size))
    scatters = [_worldline_scatter(L, n, j) for j in range(n)]
    full_masks = []
    for j in range(n):
        m = 0
        for k in range(L):
            m |= 1 << (k * n + j)
        full_masks.append(m)
    for s in range(size):
        config = DiscreteConfig.from_index(s, L, n)
        for j in range(n):
            cond = exact_conditional(j, config, model, beta)
            base = s & ~full_masks[j]
            targets = base | scatters[j]
            P[s, targets] += cond / n
    return pi, P
