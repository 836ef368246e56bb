"""Exact event-driven stochastic simulation of a behaviour spec.

Generates ground-truth trajectories for the same rule set the belief
machinery evolves, plus the noisy partial observation protocol: each
index is observed with some probability, and each agent at an observed
index is counted with the detection probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .assimilation import Observation
from .hamiltonian import BehaviorSpec

#: abort if any occupation exceeds this (propensity overflow guard)
MAX_COUNT = 10 ** 9


@dataclass
class WorldState:
    """Exact occupation counts of the ground-truth realization."""

    counts: np.ndarray
    time: float = 0.0

    def copy(self) -> "WorldState":
        return WorldState(self.counts.copy(), self.time)

    def to_record(self) -> dict:
        return {"t": self.time, "counts": self.counts.tolist()}


def trajectory_stream(seed: int) -> np.random.Generator:
    """RNG stream driving event times and choices for one trajectory."""
    return np.random.default_rng([int(seed), 0])


def observation_stream(seed: int) -> np.random.Generator:
    """RNG stream driving observation draws, independent of the trajectory."""
    return np.random.default_rng([int(seed), 1])


def sample_initial(lambdas: Sequence[float],
                   rng: np.random.Generator) -> WorldState:
    """Independent Poisson draw per index at time zero."""
    lam = np.asarray(lambdas, dtype=float)
    if (lam < 0).any():
        raise ValueError("initial rates must be >= 0")
    return WorldState(rng.poisson(lam).astype(np.int64), 0.0)


class _CompiledRules:
    """Flat arrays for fast propensity evaluation."""

    def __init__(self, spec: BehaviorSpec):
        spec.validate()
        subj, part, rate, deltas = [], [], [], []
        for r in spec.actions:
            subj.append(r.subject)
            part.append(-1)
            rate.append(r.rate)
            d = np.zeros(spec.num_states, dtype=np.int64)
            d[r.subject] -= 1
            for k in r.products:
                d[k] += 1
            deltas.append(d)
        for r in spec.interactions:
            subj.append(r.subject)
            part.append(r.partner)
            rate.append(r.rate)
            d = np.zeros(spec.num_states, dtype=np.int64)
            d[r.subject] -= 1
            d[r.partner] -= 1
            for k in r.products:
                d[k] += 1
            deltas.append(d)
        self.subject = np.array(subj, dtype=np.int64)
        self.partner = np.array(part, dtype=np.int64)
        self.rate = np.array(rate, dtype=float)
        self.delta = np.array(deltas, dtype=np.int64)
        self.is_pair = self.partner >= 0
        self.self_pair = self.is_pair & (self.partner == self.subject)

    def propensities(self, counts: np.ndarray) -> np.ndarray:
        n_s = counts[self.subject]
        a = self.rate * n_s
        pair = self.is_pair
        n_p = counts[np.where(pair, self.partner, 0)]
        a = np.where(pair, self.rate * n_s * n_p, a)
        # i == j pairs number n (n - 1)
        a = np.where(self.self_pair, self.rate * n_s * (n_s - 1), a)
        return a


_RULE_CACHE: dict = {}


def _compiled(spec: BehaviorSpec) -> _CompiledRules:
    key = id(spec)
    hit = _RULE_CACHE.get(key)
    if hit is None:
        hit = _CompiledRules(spec)
        _RULE_CACHE.clear()
        _RULE_CACHE[key] = hit
    return hit


def advance(world: WorldState, spec: BehaviorSpec, t_end: float,
            rng: np.random.Generator) -> WorldState:
    """Simulate exactly (exponential waits, one event at a time) to t_end."""
    if world.time > t_end:
        raise ValueError("world is already past t_end")
    rules = _compiled(spec)
    counts = world.counts.copy()
    t = world.time
    while True:
        if counts.max(initial=0) > MAX_COUNT:
            raise OverflowError("occupation count exceeded guard limit")
        a = rules.propensities(counts)
        total = a.sum()
        if total <= 0.0:
            t = t_end
            break
        t_next = t + rng.exponential(1.0 / total)
        if t_next >= t_end:
            t = t_end
            break
        t = t_next
        pick = np.searchsorted(np.cumsum(a), rng.uniform(0.0, total),
                               side="right")
        pick = min(pick, len(a) - 1)
        counts += rules.delta[pick]
    return WorldState(counts, t)


def observe(world: WorldState, p_observe: float, p_detect: float,
            rng: np.random.Generator,
            index_order: Sequence[int] = None) -> List[Observation]:
    """Noisy partial census.

    Each index is observed independently with probability ``p_observe``;
    an observed index reports Binomial(n, p_detect) agents.  Zero counts
    are emitted, they are informative.  The draw order is deterministic:
    ``index_order`` if given, else ascending index.
    """
    if not 0.0 <= p_observe <= 1.0 or not 0.0 <= p_detect <= 1.0:
        raise ValueError("probabilities must be in [0, 1]")
    if index_order is None:
        index_order = range(len(world.counts))
    out: List[Observation] = []
    for i in index_order:
        if rng.random() < p_observe:
            if p_detect == 0.0:
                continue  # zero-detection census carries no information
            m = int(rng.binomial(int(world.counts[i]), p_detect))
            out.append(Observation(int(i), m, p_detect))
    return out


def species_major_order(num_cells: int, num_species: int = 2) -> List[int]:
    """All indices of species 0 in cell order, then species 1, and so on."""
    return [c * num_species + s
            for s in range(num_species) for c in range(num_cells)]


def write_trajectory_record(fh, world: WorldState) -> None:
    fh.write(json.dumps(world.to_record()) + "\n")


def write_observation_record(fh, t: float, omega: Sequence[Observation]) -> None:
    rec = {"t": t, "obs": [{"index": o.index, "m": o.count, "r": o.detect}
                           for o in omega]}
    fh.write(json.dumps(rec) + "\n")
