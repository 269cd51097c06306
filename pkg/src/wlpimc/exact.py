"""Dense thermal-state reference values for small instances.

Builds the 2^n x 2^n Hamiltonian, diagonalizes it, and exposes the partition
function and the measurement distribution of the thermal state.  Basis index
convention matches the rest of the package: bit j = 0 means qubit j has spin
+1, so index 0 is the all-up configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .model import TimModel
from .trotter import SizeGuardError, _diag_energies

EXACT_LIMIT = 10  # max n for dense diagonalization
CLASSICAL_LIMIT = 20  # max n for diagonal-only enumeration


def hamiltonian(model: TimModel) -> np.ndarray:
    """Dense matrix: diagonal from the classical energy, -gamma_j flip terms."""
    if model.n > EXACT_LIMIT:
        raise SizeGuardError(f"dense Hamiltonian needs n <= {EXACT_LIMIT}, got {model.n}")
    size = 1 << model.n
    h = np.zeros((size, size))
    h[np.arange(size), np.arange(size)] = _diag_energies(model)
    for j in range(model.n):
        g = model.gamma[j]
        if g == 0.0:
            continue
        idx = np.arange(size)
        h[idx, idx ^ (1 << j)] += -g
    return h


@dataclass(frozen=True)
class ExactThermal:
    """Spectral summary of exp(-beta H) for one model and temperature."""

    beta: float
    partition: float
    log_partition: float
    measure: np.ndarray  # P(z) over basis indices
    mean_spin: np.ndarray  # <Z_j> per qubit
    energy: float  # <H>

    def marginal_up(self, j: int) -> float:
        """P(qubit j reads +1)."""
        idx = np.arange(self.measure.size)
        mask = (idx >> j) & 1
        return float(self.measure[mask == 0].sum())


def exact_thermal(model: TimModel, beta: float) -> ExactThermal:
    """Diagonalize H and return partition function and measurement law."""
    h = hamiltonian(model)
    evals, vecs = np.linalg.eigh(h)
    shifted = evals - evals.min()
    boltz = np.exp(-beta * shifted)
    z_shifted = boltz.sum()
    log_z = math.log(z_shifted) - beta * float(evals.min())
    measure = (vecs**2) @ boltz / z_shifted
    idx = np.arange(measure.size)
    spins = np.empty((measure.size, model.n))
    for j in range(model.n):
        spins[:, j] = 1.0 - 2.0 * ((idx >> j) & 1)
    mean_spin = measure @ spins
    energy = float(np.dot(evals, boltz) / z_shifted)
    return ExactThermal(
        beta=beta,
        partition=math.exp(log_z),
        log_partition=log_z,
        measure=measure,
        mean_spin=mean_spin,
        energy=energy,
    )


def classical_partition(model: TimModel, beta: float) -> float:
    """Partition function when every transverse field is zero (diagonal H)."""
    if any(g != 0.0 for g in model.gamma):
        raise ValueError("classical_partition requires all transverse fields zero")
    if model.n > CLASSICAL_LIMIT:
        raise SizeGuardError(f"classical enumeration needs n <= {CLASSICAL_LIMIT}, got {model.n}")
    e = _diag_energies(model)
    m = e.min()
    return float(np.exp(-beta * (e - m)).sum() * math.exp(-beta * m))


def classical_gibbs(model: TimModel, beta: float) -> np.ndarray:
    """Gibbs distribution over basis indices for a diagonal model."""
    if model.n > CLASSICAL_LIMIT:
        raise SizeGuardError(f"classical enumeration needs n <= {CLASSICAL_LIMIT}, got {model.n}")
    e = _diag_energies(model)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def two_level_marginal_up(b: float, gamma: float, beta: float) -> float:
    """Closed-form P(+1) for one qubit with longitudinal b and transverse gamma."""
    omega = math.hypot(b, gamma)
    if omega == 0.0:
        return 0.5
    return (math.cosh(beta * omega) - (b / omega) * math.sinh(beta * omega)) / (
        2.0 * math.cosh(beta * omega)
    )


def brute_force_measure(model: TimModel, beta: float, L: int) -> np.ndarray:
    """Replica marginal by direct enumeration of all L x n configurations.

    Independent cross-check for the transfer-matrix marginal; O(2^(nL)).
    """
    from .trotter import ENUMERATION_LIMIT, DiscreteConfig, classical_weight

    if model.n * L > ENUMERATION_LIMIT:
        raise SizeGuardError(f"enumeration needs n*L <= {ENUMERATION_LIMIT}")
    out = np.zeros(1 << model.n)
    for assignment in product((1, -1), repeat=model.n * L):
        spins = np.array(assignment, dtype=np.int8).reshape(L, model.n)
        w = classical_weight(DiscreteConfig(spins), model, beta).weight
        basis = 0
        for j in range(model.n):
            if spins[0, j] < 0:
                basis |= 1 << j
        out[basis] += w
    return out / out.sum()
