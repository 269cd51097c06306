"""Continuous imaginary-time spin trajectories and cavity-field profiles.

A worldline is one qubit's classical trajectory on the circle [0, beta): an
initial spin plus the sorted times at which it flips.  Periodicity forces an
even number of flips.  ``spin_at`` uses the convention that a flip at time t
has already happened when reading at t.

The time slice at ``t = beta`` is identified with ``t = 0``; beta itself is
outside the domain of every accessor.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass


class Worldline:
    """Spin at time 0 and strictly increasing flip times in [0, beta)."""

    __slots__ = ("s0", "jumps")

    def __init__(self, s0: int, jumps: list[float] | None = None):
        self.s0 = s0
        self.jumps = jumps if jumps is not None else []

    def spin_at(self, t: float, beta: float) -> int:
        if not 0.0 <= t < beta:
            raise ValueError(f"t={t} outside [0, {beta})")
        return self.s0 if bisect_right(self.jumps, t) % 2 == 0 else -self.s0

    def __repr__(self) -> str:
        return f"Worldline(s0={self.s0}, jumps={self.jumps!r})"


class PimcState:
    """One worldline per qubit, all sharing the same inverse temperature."""

    __slots__ = ("beta", "worldlines")

    def __init__(self, beta: float, worldlines: list[Worldline]):
        self.beta = beta
        self.worldlines = worldlines

    @property
    def n(self) -> int:
        return len(self.worldlines)

    def total_jumps(self) -> int:
        return sum(len(w.jumps) for w in self.worldlines)


def flat_state(beta: float, spins: list[int]) -> PimcState:
    return PimcState(beta, [Worldline(s) for s in spins])


def spin_at(w: Worldline, t: float, beta: float) -> int:
    return w.spin_at(t, beta)


def read_timeslice(state: PimcState, t: float = 0.0) -> tuple[int, ...]:
    """The classical configuration cut out of the state at imaginary time t."""
    return tuple(w.spin_at(t, state.beta) for w in state.worldlines)


@dataclass
class PiecewiseField:
    """A piecewise-constant field on [0, beta).

    ``breakpoints`` runs from 0 to beta inclusive; ``values[k]`` holds on
    the half-open segment [breakpoints[k], breakpoints[k+1]).
    """

    breakpoints: list[float]
    values: list[float]

    def __post_init__(self) -> None:
        assert len(self.breakpoints) == len(self.values) + 1

    @property
    def segments(self) -> int:
        return len(self.values)

    def lengths(self) -> list[float]:
        bp = self.breakpoints
        return [bp[k + 1] - bp[k] for k in range(len(self.values))]

    def value_at(self, t: float) -> float:
        bp = self.breakpoints
        if not bp[0] <= t < bp[-1]:
            raise ValueError(f"t={t} outside [{bp[0]}, {bp[-1]})")
        return self.values[bisect_right(bp, t) - 1]

    def integral(self) -> float:
        return sum(v * lam for v, lam in zip(self.values, self.lengths()))


def local_field_profile(state: PimcState, j: int, model) -> PiecewiseField:
    """Field seen by worldline j: sum of a_ij * z_i(t) over neighbors, plus b_j.

    Breakpoints are the neighbors' jump times; coincident times collapse to a
    single breakpoint (the value after both flips).  Walks the merged jump
    events once, updating the field incrementally.
    """
    beta = state.beta
    nbrs = model.neighbors[j]
    h = model.b[j]
    events: list[tuple[float, int]] = []
    for idx, (i, _) in enumerate(nbrs):
        w = state.worldlines[i]
        events.extend((t, idx) for t in w.jumps)
    cur = [state.worldlines[i].s0 for i, _ in nbrs]
    for s, (_, a) in zip(cur, nbrs):
        h += a * s
    if not events:
        return PiecewiseField([0.0, beta], [h])
    events.sort()
    breakpoints = [0.0]
    values: list[float] = []
    prev_h = h
    k = 0
    m = len(events)
    while k < m:
        t = events[k][0]
        while k < m and events[k][0] == t:
            idx = events[k][1]
            h -= 2.0 * nbrs[idx][1] * cur[idx]
            cur[idx] = -cur[idx]
            k += 1
        if 0.0 < t:
            values.append(prev_h)
            breakpoints.append(t)
        # a jump at exactly t = 0 counts as already flipped at time 0
        prev_h = h
    values.append(prev_h)
    breakpoints.append(beta)
    return PiecewiseField(breakpoints, values)


def validate_state(state: PimcState, max_jumps: int | None = None) -> list[str]:
    """Check ordering, range, flip parity and the optional jump budget.

    Returns a list of violation messages; empty means the state is valid.
    """
    problems = []
    beta = state.beta
    if beta <= 0:
        problems.append(f"beta must be positive, got {beta}")
    for j, w in enumerate(state.worldlines):
        if w.s0 not in (-1, 1):
            problems.append(f"worldline {j}: s0={w.s0} not in {{-1,+1}}")
        for a, bnext in zip(w.jumps, w.jumps[1:]):
            if not a < bnext:
                problems.append(f"worldline {j}: jump times not strictly increasing")
                break
        if w.jumps and not (0.0 <= w.jumps[0] and w.jumps[-1] < beta):
            problems.append(f"worldline {j}: jump time outside [0, beta)")
        if len(w.jumps) % 2 != 0:
            problems.append(f"worldline {j}: odd number of jumps ({len(w.jumps)})")
        if max_jumps is not None and len(w.jumps) > max_jumps:
            problems.append(f"worldline {j}: {len(w.jumps)} jumps exceed budget {max_jumps}")
    return problems


def diagonal_energy(z, model) -> float:
    """Classical energy sum a_ij z_i z_j + sum b_i z_i of a spin vector."""
    e = sum(a * z[i] * z[j] for i, j, a in model.edges)
    e += sum(bi * zi for bi, zi in zip(model.b, z))
    return e


def diagonal_energy_integral(state: PimcState, model) -> float:
    """Integral of the diagonal energy of the time slice over [0, beta).

    Walks the merged jump events once, updating the energy incrementally at
    each flip.
    """
    beta = state.beta
    events: list[tuple[float, int]] = []
    for j, w in enumerate(state.worldlines):
        events.extend((t, j) for t in w.jumps)
    events.sort()
    z = [w.s0 for w in state.worldlines]
    e = diagonal_energy(z, model)
    total = 0.0
    prev = 0.0
    for t, j in events:
        total += e * (t - prev)
        prev = t
        # flipping qubit j changes the energy by -2 z_j * (local field at j)
        loc = model.b[j] + sum(a * z[i] for i, a in model.neighbors[j])
        e -= 2.0 * z[j] * loc
        z[j] = -z[j]
    total += e * (beta - prev)
    return total


def state_to_json(state: PimcState) -> str:
    """Serialize a state for checkpointing.

    Schema: ``{"beta": float, "worldlines": [{"s0": +-1, "jumps": [t...]}...]}``.
    """
    doc = {
        "beta": state.beta,
        "worldlines": [{"s0": w.s0, "jumps": list(w.jumps)} for w in state.worldlines],
    }
    return json.dumps(doc)


def state_from_json(text: str) -> PimcState:
    doc = json.loads(text)
    wls = [Worldline(int(rec["s0"]), [float(t) for t in rec["jumps"]])
           for rec in doc["worldlines"]]
    return PimcState(float(doc["beta"]), wls)
