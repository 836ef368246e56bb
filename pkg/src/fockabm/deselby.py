"""Shifted-Poisson ("Deselby") belief states.

The single-state family D(lambda, delta) puts mass

    p(k) = (k)_delta lambda^(k - delta) e^(-lambda) / k!
         = Poisson(lambda) shifted up by delta

on occupation k, so k >= delta always and delta = 0 recovers the plain
Poisson.  A belief over a whole model is a product of these, one per
agent state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class DeselbyParams:
    lam: float
    delta: int

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


@dataclass
class DeselbyState:
    """Product belief state: per-index rate vector and shift vector."""

    lambdas: np.ndarray
    deltas: np.ndarray

    @staticmethod
    def uniform(num_states: int, lam: float) -> "DeselbyState":
        return DeselbyState(np.full(num_states, float(lam)),
                            np.zeros(num_states, dtype=np.int64))

    @property
    def num_states(self) -> int:
        return len(self.lambdas)

    def means(self) -> np.ndarray:
        return self.lambdas + self.deltas

    def copy(self) -> "DeselbyState":
        return DeselbyState(self.lambdas.copy(), self.deltas.copy())


def log_pmf(lam: float, delta: int, k: int) -> float:
    """Log probability of occupation k; -inf outside the support."""
    j = k - delta
    if j < 0:
        return -math.inf
    if lam == 0.0:
        return 0.0 if j == 0 else -math.inf
    return j * math.log(lam) - lam - math.lgamma(j + 1)


def pmf(p: DeselbyParams, k: int) -> float:
    """Probability of occupation k; 0 for k < delta."""
    return math.exp(log_pmf(p.lam, p.delta, k))


def mean(p: DeselbyParams) -> float:
    return p.lam + p.delta


def apply_creation(p: DeselbyParams) -> DeselbyParams:
    """Adding one agent shifts the family: (lam, delta) -> (lam, delta + 1)."""
    return DeselbyParams(p.lam, p.delta + 1)


def support_cap(lam: float, delta: int, tail: float = 1e-12) -> int:
    """Smallest K with tail mass beyond K below ``tail``."""
    k = delta
    acc = pmf(DeselbyParams(lam, delta), k)
    while 1.0 - acc > tail:
        k += 1
        acc += pmf(DeselbyParams(lam, delta), k)
        if k > delta + 10000:  # unreachable for sane parameters
            break
    return k


def binomial_posterior_exact(p: DeselbyParams, m: int, r: float,
                             cap: int = None) -> np.ndarray:
    """Brute-force posterior over occupation given a thinned count.

    Likelihood of observing m out of k is Binomial(k, r); the returned
    vector is the normalized posterior over k = 0..cap.  Serves as the
    independent oracle for the operator-based update.
    """
    if m < 0:
        raise ValueError("observed count must be >= 0")
    if not 0.0 <= r <= 1.0:
        raise ValueError("detection probability must be in [0, 1]")
    if r == 0.0 and m > 0:
        raise ValueError("impossible observation: m > 0 with zero detection")
    if cap is None:
        cap = max(support_cap(p.lam, p.delta), m) + 40
    ks = np.arange(cap + 1)
    prior = np.array([pmf(p, int(k)) for k in ks])
    if r == 0.0:
        like = np.ones_like(prior)
    else:
        like = np.where(
            ks >= m,
            np.exp([_log_binom(int(k), m) for k in ks])
            * r ** m * (1.0 - r) ** np.maximum(ks - m, 0),
            0.0,
        )
    post = prior * like
    z = post.sum()
    if z <= 0.0:
        raise ValueError("zero-likelihood observation")
    return post / z


def _log_binom(k: int, m: int) -> float:
    if m > k:
        return -math.inf
    return math.lgamma(k + 1) - math.lgamma(m + 1) - math.lgamma(k - m + 1)
