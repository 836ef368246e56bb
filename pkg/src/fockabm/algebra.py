"""Sparse algebra of creation/annihilation operators with thinning factors.

Operators are stored in normal order: creation factors on the left,
annihilation factors in the middle and thinning (``Lg``) factors on the
right.  A polynomial is a hash map from a canonical term key to a float
coefficient, so addition is key-wise and the representation of a given
operator is unique.

Term keys are nested tuples::

    ((index, exponent), ...)   creations, sorted by index, exponents > 0
    ((index, exponent), ...)   annihilations, same layout
    ((index, survival), ...)   thinning factors, survival = 1 - detection

The only nontrivial rewrite rules are

    a_i a_i^+      -> a_i^+ a_i + 1
    Lg_{i,s} a_i^+ -> s a_i^+ Lg_{i,s}
    Lg_{i,s} a_i   -> (1/s) a_i Lg_{i,s}

everything at distinct indices commutes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Iterable, Mapping, Optional, Sequence

IndexMap = tuple  # ((index, exponent), ...)
ThinMap = tuple   # ((index, survival), ...)
TermKey = tuple   # (creations, annihilations, thinning)

#: coefficients with magnitude below this (relative to the largest term)
#: are dropped after public operations
DEFAULT_EPS = 1e-14


def _falling(n: int, k: int) -> int:
    """k-th order falling factorial n (n-1) ... (n-k+1)."""
    out = 1
    for j in range(k):
        out *= n - j
    return out


def _freeze(d: Mapping) -> tuple:
    return tuple(sorted(d.items()))


def _merge(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for i, e in b:
        d[i] = d.get(i, 0) + e
    return tuple(sorted(d.items()))


@dataclass(frozen=True)
class OperatorTerm:
    """One normal-ordered product: coeff * creations * annihilations * thinning."""

    coeff: float
    creations: IndexMap = ()
    annihilations: IndexMap = ()
    thinning: ThinMap = ()

    def key(self) -> TermKey:
        return (self.creations, self.annihilations, self.thinning)


def _term_product(ka: TermKey, ca: float, kb: TermKey, cb: float):
    """Normal-ordered product of two terms, yielding (key, coeff) pairs.

    The ordered product is  C_a A_a T_a . C_b A_b T_b.  Moving T_a to the
    right past C_b and A_b only produces scalar factors; the interesting
    part is reordering A_a against C_b, which expands index-wise as

        a^m a+^c = sum_q  C(m, q) (c)_q  a+^(c-q) a^(m-q)
    """
    cre_a, ann_a, thin_a = ka
    cre_b, ann_b, thin_b = kb
    coeff = ca * cb
    cre_b_d = dict(cre_b)
    if thin_a:
        ann_b_d = dict(ann_b)
        for i, s in thin_a:
            e = cre_b_d.get(i, 0) - ann_b_d.get(i, 0)
            if e:
                coeff *= s ** e
    if thin_b:
        if thin_a:
            td = dict(thin_a)
            for i, s in thin_b:
                td[i] = td.get(i, 1.0) * s
            thin = tuple(sorted(td.items()))
        else:
            thin = thin_b
    else:
        thin = thin_a

    shared = [(i, m) for i, m in ann_a if i in cre_b_d]
    if not shared:
        yield (_merge(cre_a, cre_b), _merge(ann_a, ann_b), thin), coeff
        return

    options = []
    for i, m in shared:
        c = cre_b_d[i]
        options.append([(i, q, math.comb(m, q) * _falling(c, q))
                        for q in range(min(m, c) + 1)])
    for combo in _iproduct(*options):
        w = coeff
        contracted = {}
        for i, q, wq in combo:
            w *= wq
            if q:
                contracted[i] = q
        if w == 0.0:
            continue
        cre = {i: e for i, e in cre_b}
        ann = {i: e for i, e in ann_a}
        for i, q in contracted.items():
            cre[i] -= q
            ann[i] -= q
        cre = {i: e for i, e in cre.items() if e}
        ann = {i: e for i, e in ann.items() if e}
        key = (_merge(cre_a, _freeze(cre)), _merge(_freeze(ann), ann_b), thin)
        yield key, w


def _keys_commute(ka: TermKey, kb: TermKey) -> bool:
    """True when the two terms commute exactly (disjoint interaction support)."""
    cre_a, ann_a, thin_a = ka
    cre_b, ann_b, thin_b = kb
    cre_a_idx = {i for i, _ in cre_a}
    cre_b_idx = {i for i, _ in cre_b}
    ann_a_idx = {i for i, _ in ann_a}
    ann_b_idx = {i for i, _ in ann_b}
    if ann_a_idx & cre_b_idx or ann_b_idx & cre_a_idx:
        return False
    if thin_a:
        ta = {i for i, _ in thin_a}
        if ta & (cre_b_idx | ann_b_idx):
            return False
    if thin_b:
        tb = {i for i, _ in thin_b}
        if tb & (cre_a_idx | ann_a_idx):
            return False
    return True


class OperatorPoly:
    """Normal-ordered sparse sum of operator terms.

    Immutable by convention: every operation returns a new polynomial, so
    values can be shared freely between threads.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[TermKey, float]] = None):
        self.terms: dict = dict(terms) if terms else {}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "OperatorPoly":
        return OperatorPoly()

    @staticmethod
    def one() -> "OperatorPoly":
        return OperatorPoly({((), (), ()): 1.0})

    @staticmethod
    def term(coeff: float, creations: Mapping[int, int] = None,
             annihilations: Mapping[int, int] = None,
             thinning: Mapping[int, float] = None) -> "OperatorPoly":
        key = (
            _freeze({i: e for i, e in (creations or {}).items() if e}),
            _freeze({i: e for i, e in (annihilations or {}).items() if e}),
            _freeze({i: s for i, s in (thinning or {}).items() if s != 1.0}),
        )
        return OperatorPoly({key: coeff})

    @staticmethod
    def from_term(t: OperatorTerm) -> "OperatorPoly":
        return OperatorPoly({t.key(): t.coeff})

    @staticmethod
    def creation(i: int, n: int = 1) -> "OperatorPoly":
        return OperatorPoly.term(1.0, creations={i: n})

    @staticmethod
    def annihilation(i: int, n: int = 1) -> "OperatorPoly":
        return OperatorPoly.term(1.0, annihilations={i: n})

    @staticmethod
    def thinning(i: int, survival: float) -> "OperatorPoly":
        """Thinning factor at index ``i``; survival = 1 - detection in (0, 1]."""
        if not 0.0 < survival <= 1.0:
            raise ValueError(f"survival must be in (0, 1], got {survival}")
        return OperatorPoly.term(1.0, thinning={i: survival})

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0.0) + c
            if v == 0.0:
                out.pop(k, None)
            else:
                out[k] = v
        return OperatorPoly(out)

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        return self + (-other)

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly({k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return OperatorPoly()
            return OperatorPoly({k: c * other for k, c in self.terms.items()})
        return multiply(self, other)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def prune(self, eps: float = DEFAULT_EPS) -> "OperatorPoly":
        """Drop terms whose coefficient is below eps relative to the largest."""
        if not self.terms:
            return self
        cut = eps * self.max_abs_coeff()
        return OperatorPoly({k: c for k, c in self.terms.items() if abs(c) > cut})

    # -- algebra -----------------------------------------------------------

    def strip_creations(self) -> "OperatorPoly":
        """Erase every creation factor, keeping coefficients.

        Valid only under the summing functional, where a leading creation
        operator acts as the identity.
        """
        out: dict = {}
        for (cre, ann, thin), c in self.terms.items():
            k = ((), ann, thin)
            v = out.get(k, 0.0) + c
            if v == 0.0:
                out.pop(k, None)
            else:
                out[k] = v
        return OperatorPoly(out)

    def eval_functional(self, lambdas: Sequence[float]) -> float:
        """Summing functional over the rate-vector ground state.

        Each annihilation at index i contributes a factor lambda'_i, where
        lambda'_i is lambda_i rescaled by the term's thinning survival at i
        (thinning acts first, being rightmost).  Creations contribute 1.
        """
        return self.eval_moments(lambdas, None)

    def eval_moments(self, lambdas: Sequence[float],
                     deltas: Optional[Sequence[int]]) -> float:
        """Summing functional over a shifted ground state.

        Evaluates the functional of ``self`` applied to the product state
        prod_i a_i^+^{delta_i} D_Lambda.  Leading creations in a term act as
        the identity under the functional and are ignored.
        """
        total = 0.0
        for (cre, ann, thin), c in self.terms.items():
            v = c
            if thin:
                sd = dict(thin)
            else:
                sd = None
            seen = set()
            for i, d in ann:
                s = sd.pop(i, 1.0) if sd else 1.0
                delta = deltas[i] if deltas is not None else 0
                v *= _occupancy_factor(d, delta, lambdas[i], s)
                seen.add(i)
            if sd:
                for i, s in sd.items():
                    delta = deltas[i] if deltas is not None else 0
                    if delta:
                        v *= s ** delta
            total += v
        return total

    # -- debug serialization ----------------------------------------------

    def to_lines(self) -> list:
        """Human-readable dump: ``coeff | i^c ... | i^d ... | i:s ...``."""
        lines = []
        for (cre, ann, thin), c in sorted(self.terms.items()):
            cpart = " ".join(f"{i}^{e}" for i, e in cre)
            apart = " ".join(f"{i}^{e}" for i, e in ann)
            tpart = " ".join(f"{i}:{s:g}" for i, s in thin)
            lines.append(f"{c:.12g} | {cpart} | {apart} | {tpart}")
        return lines

    def __repr__(self) -> str:
        if not self.terms:
            return "OperatorPoly(0)"
        return "OperatorPoly[\n  " + "\n  ".join(self.to_lines()) + "\n]"

    def isclose(self, other: "OperatorPoly", tol: float = 1e-12) -> bool:
        diff = self - other
        return diff.max_abs_coeff() <= tol


def _occupancy_factor(d: int, delta: int, lam: float, s: float) -> float:
    """Functional value of a^d Lg_s applied to a+^delta D_lambda at one index.

    Equals s^delta * sum_q C(d, q) (delta)_q (s lambda)^(d - q); for
    delta = 0 this is just (s lambda)^d.
    """
    lam_s = s * lam
    if delta == 0:
        return lam_s ** d
    total = 0.0
    for q in range(min(d, delta) + 1):
        total += math.comb(d, q) * _falling(delta, q) * lam_s ** (d - q)
    return (s ** delta) * total


def multiply(a: OperatorPoly, b: OperatorPoly,
             eps: float = DEFAULT_EPS) -> OperatorPoly:
    """Normal-ordered product a * b."""
    out: dict = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            for k, c in _term_product(ka, ca, kb, cb):
                v = out.get(k, 0.0) + c
                if v == 0.0:
                    out.pop(k, None)
                else:
                    out[k] = v
    return OperatorPoly(out).prune(eps)


def commutator(a: OperatorPoly, b: OperatorPoly,
               eps: float = DEFAULT_EPS) -> OperatorPoly:
    """[a, b] = ab - ba.

    Term pairs with disjoint interaction support commute exactly and are
    skipped without computing either product.
    """
    out: dict = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            if _keys_commute(ka, kb):
                continue
            for k, c in _term_product(ka, ca, kb, cb):
                v = out.get(k, 0.0) + c
                if v == 0.0:
                    out.pop(k, None)
                else:
                    out[k] = v
            for k, c in _term_product(kb, cb, ka, ca):
                v = out.get(k, 0.0) - c
                if v == 0.0:
                    out.pop(k, None)
                else:
                    out[k] = v
    return OperatorPoly(out).prune(eps)


def normal_order(factors: Iterable[OperatorTerm],
                 eps: float = DEFAULT_EPS) -> OperatorPoly:
    """Normal-ordered polynomial equal to the ordered product of factors."""
    poly = OperatorPoly.one()
    for f in factors:
        poly = multiply(poly, OperatorPoly.from_term(f), eps=eps)
    return poly
