#!/usr/bin/env python3
"""A tour of the operator algebra on a single site.

Creation adds an agent, annihilation weights by occupancy and removes
one, and the thinning operator encodes partial detection.  The algebra
keeps everything in normal order (creations left of annihilations) so a
handful of rewriting rules drive the whole library.
"""

import numpy as np

from fockabm.algebra import OperatorPoly, commutator, multiply
from fockabm.deselby import DeselbyParams, binomial_posterior_exact, mean, pmf

print("=== canonical commutator ===")
a = OperatorPoly.annihilation(0)
adag = OperatorPoly.creation(0)
print("[a, a+] =", commutator(a, adag))

print()
print("=== normal ordering does the bookkeeping ===")
# a^2 (a+)^2 expands into ordered words with combinatorial weights
print("a^2 (a+)^2 =", multiply(OperatorPoly.annihilation(0, 2),
                               OperatorPoly.creation(0, 2)))

print()
print("=== a Poisson belief under partial observation ===")
# prior: on average 0.06 agents on this site; we look once with 90%
# detection probability and see exactly one agent
prior = DeselbyParams(0.06, 0)
post = binomial_posterior_exact(prior, m=1, r=0.9)
conjugate = DeselbyParams(0.06 * 0.1, 1)
print("posterior mean:", np.sum(np.arange(len(post)) * post))
print("conjugate family member mean:", mean(conjugate))
print("max pmf deviation:",
      np.abs(post - np.array([pmf(conjugate, k)
                              for k in range(len(post))])).max())

print()
print("=== the same update, written as operators ===")
# one sighting = creation * annihilation * thinning applied to the prior
op = multiply(multiply(OperatorPoly.creation(0), OperatorPoly.annihilation(0)),
              OperatorPoly.thinning(0, 0.1))
print("a+ a Lg_0.9 =", op)
print("functional of op on the prior (unnormalized evidence):",
      op.strip_creations().eval_moments(np.array([0.06]), None))
