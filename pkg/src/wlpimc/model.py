"""Transverse-field Ising model instances and rigorous temperature thresholds.

A model is the data ``H = sum_{i~j} a_ij Z_i Z_j + sum_i b_i Z_i - sum_i g_i X_i``
on an interaction graph: pair couplings ``a_ij``, longitudinal fields ``b_i``
and transverse fields ``g_i``, all in one common (arbitrary) energy unit.
Inverse temperatures are in the inverse of that unit.

The threshold formulas implemented here bound the inverse temperatures at
which the worldline heat-bath chain provably mixes fast:

* ``beta_simple``  = 1 / (2 J (Delta + 2))
* ``beta_log``     = log(2/Delta + 1) / (4 J)
* ``beta_degree``  = the root of  max_i sum_{j in N(i)} (e^{4 beta |a_ij|} - 1) = 2

with J the largest |a_ij| and Delta the largest interaction degree.  The
contraction rate behind them is

    alpha(beta) = (1/2n) [ 2 - max_i sum_{j in N(i)} (e^{4 beta |a_ij|} - 1) ].

Longitudinal fields b_i do not enter any threshold (they cancel from the
coupling-difference term the analysis bounds).  Coupling magnitudes |a_ij|
are used throughout; the formulas are monotone in them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

# Planck constant over Boltzmann constant, in kelvin per gigahertz (CODATA 2018
# exact values: h = 6.62607015e-34 J s, k_B = 1.380649e-23 J/K).
KELVIN_PER_GHZ = 6.62607015e-34 * 1e9 / 1.380649e-23


class ModelError(ValueError):
    """Invalid model data (bad indices, duplicate edges, malformed file)."""


@dataclass
class TimModel:
    """A transverse-field Ising instance on ``n`` qubits.

    ``edges`` holds one entry ``(i, j, a_ij)`` per interacting pair with
    ``i < j``.  Instances are treated as immutable after construction and are
    safe to share between concurrent chains.
    """

    n: int
    edges: list[tuple[int, int, float]]
    b: list[float]
    gamma: list[float]
    # adjacency over nonzero couplings: neighbors[j] = [(i, a_ij), ...]
    neighbors: list[list[tuple[int, float]]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ModelError(f"n must be >= 1, got {self.n}")
        if len(self.b) != self.n:
            raise ModelError(f"b has length {len(self.b)}, expected n={self.n}")
        if len(self.gamma) != self.n:
            raise ModelError(f"gamma has length {len(self.gamma)}, expected n={self.n}")
        seen: set[tuple[int, int]] = set()
        norm_edges = []
        for pos, (i, j, a) in enumerate(self.edges):
            if i == j:
                raise ModelError(f"edges[{pos}]: self-edge ({i},{j})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ModelError(f"edges[{pos}]: index out of range ({i},{j}) for n={self.n}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ModelError(f"edges[{pos}]: duplicate edge ({i},{j})")
            seen.add((i, j))
            norm_edges.append((i, j, float(a)))
        self.edges = norm_edges
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for i, j, a in self.edges:
            if a != 0.0:
                nbrs[i].append((j, a))
                nbrs[j].append((i, a))
        self.neighbors = nbrs

    @property
    def degenerate_sites(self) -> list[int]:
        """Qubits with zero transverse field (their worldlines stay flat)."""
        return [i for i, g in enumerate(self.gamma) if g == 0.0]

    def coupling(self, i: int, j: int) -> float:
        """a_ij, or 0.0 when i and j are not adjacent."""
        for k, a in self.neighbors[i]:
            if k == j:
                return a
        return 0.0

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])


def load_model(source) -> TimModel:
    """Load a model from a JSON document.

    ``source`` may be a path, an open file, a JSON string, or an already
    parsed dict.  Expected keys: ``n`` (int), ``edges`` (list of ``[i, j, a]``),
    ``b`` (list of n reals), ``gamma`` (list of n reals).
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            if hasattr(source, "read"):
                doc = json.load(source)
            else:
                text = str(source)
                if text.lstrip().startswith("{"):
                    doc = json.loads(text)
                else:
                    with open(text) as fh:
                        doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelError(f"cannot parse model document: {exc}") from exc
    for key in ("n", "edges", "b", "gamma"):
        if key not in doc:
            raise ModelError(f"missing key '{key}' in model document")
    try:
        n = int(doc["n"])
        edges = [(int(e[0]), int(e[1]), float(e[2])) for e in doc["edges"]]
        b = [float(x) for x in doc["b"]]
        gamma = [float(x) for x in doc["gamma"]]
    except (TypeError, ValueError, IndexError) as exc:
        raise ModelError(f"malformed field in model document: {exc}") from exc
    return TimModel(n=n, edges=edges, b=b, gamma=gamma)


def cure_sign(model: TimModel) -> TimModel:
    """Flip negative transverse fields to positive.

    Conjugation by a Z-diagonal single-qubit unitary changes the sign of the
    X term on the selected qubits and leaves all Z terms alone, so the
    returned model has the same spectrum and the same measurement
    distribution.  Idempotent; qubits with ``gamma == 0`` stay at zero and are
    reported by ``degenerate_sites``.
    """
    return TimModel(
        n=model.n,
        edges=list(model.edges),
        b=list(model.b),
        gamma=[abs(g) for g in model.gamma],
    )


@dataclass(frozen=True)
class CouplingStats:
    """Summary statistics of the interaction graph."""

    max_coupling: float  # J = max |a_ij|
    max_degree: int  # Delta
    max_transverse: float  # max |gamma_i|
    site_coupling_sums: tuple[float, ...]  # per-site sum of |a_ij|


def coupling_stats(model: TimModel) -> CouplingStats:
    J = max((abs(a) for _, _, a in model.edges), default=0.0)
    delta = max((model.degree(i) for i in range(model.n)), default=0)
    gmax = max((abs(g) for g in model.gamma), default=0.0)
    sums = tuple(sum(abs(a) for _, a in model.neighbors[i]) for i in range(model.n))
    return CouplingStats(J, delta, gmax, sums)


def contraction_rate(model: TimModel, beta: float) -> float:
    """Per-step contraction rate alpha(beta) of the worldline heat-bath chain.

    Positive alpha certifies mixing in ceil(log(n/eps)/alpha) updates.  For an
    edgeless model this is 1/n at every beta.
    """
    worst = 0.0
    for i in range(model.n):
        s = sum(math.exp(4.0 * beta * abs(a)) - 1.0 for _, a in model.neighbors[i])
        if s > worst:
            worst = s
    return (2.0 - worst) / (2.0 * model.n)


@dataclass(frozen=True)
class ThresholdReport:
    """Inverse-temperature thresholds below which fast mixing is certified.

    All three are +inf for models without couplings, in which case
    ``unbounded`` is set.  ``beta_simple <= beta_log <= beta_degree`` always,
    with the last two equal when every coupling has magnitude J.
    """

    beta_simple: float
    beta_log: float
    beta_degree: float
    unbounded: bool
    model: TimModel = field(repr=False)

    def alpha_at(self, beta: float) -> float:
        return contraction_rate(self.model, beta)


def beta_thresholds(model: TimModel) -> ThresholdReport:
    stats = coupling_stats(model)
    J, delta = stats.max_coupling, stats.max_degree
    if J == 0.0 or delta == 0:
        inf = math.inf
        return ThresholdReport(inf, inf, inf, True, model)
    beta_simple = 1.0 / (2.0 * J * (delta + 2))
    beta_log = math.log(2.0 / delta + 1.0) / (4.0 * J)

    def excess(beta: float) -> float:
        # max_i sum_j (e^{4 beta |a_ij|} - 1) - 2; strictly increasing in beta
        return max(
            sum(math.exp(4.0 * beta * abs(a)) - 1.0 for _, a in model.neighbors[i])
            for i in range(model.n)
        ) - 2.0

    lo, hi = 0.0, beta_log * delta
    # the bracket always contains the root: excess(0) = -2 and at the upper
    # end the J-edge alone contributes (1 + 2/Delta)^Delta - 1 >= 2
    for _ in range(200):
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    beta_degree = 0.5 * (lo + hi)
    return ThresholdReport(beta_simple, beta_log, beta_degree, False, model)


def ghz_to_kelvin(freq_ghz: float) -> float:
    """Convert an energy given as a frequency in GHz to a temperature in K."""
    if freq_ghz < 0:
        raise ValueError(f"frequency must be nonnegative, got {freq_ghz}")
    return freq_ghz * KELVIN_PER_GHZ


def random_model(
    n: int,
    max_degree: int,
    rng,
    coupling_scale: float = 1.0,
    field_scale: float = 0.0,
    transverse_scale: float = 1.0,
    force_max_coupling: bool = True,
) -> TimModel:
    """Draw a random instance with interaction degree at most ``max_degree``.

    Couplings are uniform in sign with magnitude in (0, coupling_scale]; with
    ``force_max_coupling`` one edge is pinned to the full magnitude so that
    J equals ``coupling_scale`` exactly.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    deg = [0] * n
    edges: list[tuple[int, int, float]] = []
    for i, j in pairs:
        if deg[i] < max_degree and deg[j] < max_degree:
            mag = coupling_scale * (0.25 + 0.75 * rng.random())
            sign = 1.0 if rng.random() < 0.5 else -1.0
            edges.append((i, j, sign * mag))
            deg[i] += 1
            deg[j] += 1
    if force_max_coupling and edges:
        i, j, a = edges[0]
        edges[0] = (i, j, math.copysign(coupling_scale, a))
    b = [field_scale * (2.0 * rng.random() - 1.0) for _ in range(n)]
    gamma = [transverse_scale * (0.5 + 0.5 * rng.random()) for _ in range(n)]
    return TimModel(n=n, edges=edges, b=b, gamma=gamma)
