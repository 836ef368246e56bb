#!/usr/bin/env python3
"""Forecasting occupancy moments with the commutator series.

The belief state evolves as exp(Ht); expectations under the evolved
state are computed by a series of nested commutators with the model
operator, with an on-line error estimate choosing the truncation order.
We check the series against closed forms and a dense matrix exponential.
"""

import math

import numpy as np
from scipy.linalg import expm

from fockabm.algebra import OperatorPoly
from fockabm.assimilation import z_series_value
from fockabm.deselby import DeselbyState
from fockabm.hamiltonian import ActionRule, BehaviorSpec, build_hamiltonian

print("=== pure death has an exact answer ===")
h = build_hamiltonian(BehaviorSpec(1, [ActionRule(0, 0.1, ())]))
psi = DeselbyState(np.array([1.0]), np.zeros(1, dtype=np.int64))
val, diag = z_series_value(OperatorPoly.annihilation(0), h, psi, 0.5,
                           rel_tol=1e-9, max_order=30)
print(f"series mean {val:.9f} vs analytic {math.exp(-0.05):.9f} "
      f"(order {diag.order})")

print()
print("=== two-site shuttle vs a dense master equation ===")
spec = BehaviorSpec(2, [ActionRule(0, 1.0, (1,)), ActionRule(1, 1.0, (0,))])
h2 = build_hamiltonian(spec)
psi2 = DeselbyState(np.array([0.9, 0.2]), np.zeros(2, dtype=np.int64))

# dense comparison: truncate occupancies at cap agents per site and
# build the generator over the product basis
cap = 12
dim = cap * cap
gen = np.zeros((dim, dim))
for n0 in range(cap):
    for n1 in range(cap):
        i = n0 * cap + n1
        if n0 > 0 and n1 + 1 < cap:
            gen[(n0 - 1) * cap + (n1 + 1), i] += 1.0 * n0
            gen[i, i] -= 1.0 * n0
        if n1 > 0 and n0 + 1 < cap:
            gen[(n0 + 1) * cap + (n1 - 1), i] += 1.0 * n1
            gen[i, i] -= 1.0 * n1
p0 = np.zeros(dim)
for n0 in range(cap):
    for n1 in range(cap):
        p0[n0 * cap + n1] = (math.exp(-0.9) * 0.9 ** n0 / math.factorial(n0)
                             * math.exp(-0.2) * 0.2 ** n1
                             / math.factorial(n1))
for t in (0.1, 0.5):
    p = expm(gen * t) @ p0
    occ = p.reshape(cap, cap)
    dense = [(occ.sum(axis=1) * np.arange(cap)).sum(),
             (occ.sum(axis=0) * np.arange(cap)).sum()]
    for i in range(2):
        val, diag = z_series_value(OperatorPoly.annihilation(i), h2, psi2,
                                   t, rel_tol=1e-9, max_order=30)
        print(f"t={t}: site {i} series {val:.8f} dense {dense[i]:.8f} "
              f"(order {diag.order})")

print()
print("=== the estimator trades accuracy for work ===")
for rel_tol in (0.01, 1e-4, 1e-8):
    val, diag = z_series_value(OperatorPoly.annihilation(0), h2, psi2, 0.5,
                               rel_tol=rel_tol, max_order=30)
    print(f"rel_tol {rel_tol:g}: order {diag.order}, "
          f"estimate {diag.error_estimate:.2e}")
