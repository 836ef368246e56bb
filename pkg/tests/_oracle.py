"""Dense occupation-number oracles for small systems.

Operators are represented as matrices over the truncated basis
|n_0 .. n_{S-1}>, n_i < cap, with index 0 as the leftmost Kronecker
factor.  Thinning factors are diagonal s^n, which reproduces the symbolic
rewrite rules exactly; the symbolic functional additionally renormalizes
the thinned ground state, so functional comparisons against the matrix
oracle multiply back the exp(r * lambda) mass factor.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from scipy.linalg import expm

from fockabm.algebra import OperatorPoly
from fockabm.deselby import DeselbyParams, pmf
from fockabm.hamiltonian import (BehaviorSpec, build_action_term,
                                 build_hamiltonian, build_interaction_term)


def creation_matrix(cap: int) -> np.ndarray:
    m = np.zeros((cap, cap))
    for n in range(cap - 1):
        m[n + 1, n] = 1.0
    return m


def annihilation_matrix(cap: int) -> np.ndarray:
    m = np.zeros((cap, cap))
    for n in range(1, cap):
        m[n - 1, n] = n
    return m


def thinning_matrix(cap: int, survival: float) -> np.ndarray:
    return np.diag([survival ** n for n in range(cap)])


def poly_matrix(poly: OperatorPoly, num_states: int, cap: int) -> np.ndarray:
    """Dense matrix of a polynomial over the truncated product basis."""
    adag = creation_matrix(cap)
    a = annihilation_matrix(cap)
    dim = cap ** num_states
    out = np.zeros((dim, dim))
    for (cre, ann, thin), coeff in poly.terms.items():
        factors = [np.eye(cap) for _ in range(num_states)]
        td = dict(thin)
        for i, e in ann:
            factors[i] = np.linalg.matrix_power(a, e) @ factors[i]
        for i, e in cre:
            factors[i] = np.linalg.matrix_power(adag, e) @ factors[i]
        for i, s in td.items():
            factors[i] = factors[i] @ thinning_matrix(cap, s)
        m = factors[0]
        for f in factors[1:]:
            m = np.kron(m, f)
        out += coeff * m
    return out


def ground_vector(lambdas, cap: int, deltas=None) -> np.ndarray:
    """Probability vector of a product shifted-Poisson state."""
    vecs = []
    for i, lam in enumerate(lambdas):
        d = 0 if deltas is None else int(deltas[i])
        vecs.append(np.array([pmf(DeselbyParams(lam, d), k)
                              for k in range(cap)]))
    v = vecs[0]
    for w in vecs[1:]:
        v = np.kron(v, w)
    return v


def functional(vec: np.ndarray) -> float:
    """Sum of coefficients: total probability mass of a state vector."""
    return float(vec.sum())


def spec_matrix(spec: BehaviorSpec, cap: int) -> np.ndarray:
    return poly_matrix(build_hamiltonian(spec).poly, spec.num_states, cap)


def evolve(spec: BehaviorSpec, p0: np.ndarray, t: float,
           cap: int) -> np.ndarray:
    """Master-equation evolution of a probability vector."""
    return expm(t * spec_matrix(spec, cap)) @ p0


def occupancy_mean(p: np.ndarray, num_states: int, cap: int,
                   index: int) -> float:
    """Mean occupation at one index from a flat product-basis vector."""
    shape = (cap,) * num_states
    grid = p.reshape(shape)
    axes = tuple(i for i in range(num_states) if i != index)
    marg = grid.sum(axis=axes) if axes else grid
    return float(np.arange(cap) @ marg)


def condition_on_observations(p: np.ndarray, num_states: int, cap: int,
                              observations) -> np.ndarray:
    """Multiply in binomial detection likelihoods and renormalize."""
    shape = (cap,) * num_states
    grid = p.reshape(shape).copy()
    for (index, m, r) in observations:
        like = np.array([math.comb(k, m) * r ** m * (1 - r) ** (k - m)
                         if k >= m else 0.0 for k in range(cap)])
        sl = [np.newaxis] * num_states
        sl[index] = slice(None)
        grid = grid * like[tuple(sl)]
    z = grid.sum()
    if z <= 0:
        raise ValueError("zero-likelihood observation in oracle")
    return (grid / z).reshape(-1)
