"""Compile declarative agent behaviours into an evolution operator.

A behaviour is either an action (one agent replaces itself by a product
set at a given rate) or a binary interaction (an agent, in the presence
of a partner, replaces the pair).  Each rule compiles to a small operator
polynomial; the model operator is the sum over all rules, with an
index-based lookup so that commutators against small observables only
visit the rules that can actually couple to them.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product as _iproduct
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from .algebra import (OperatorPoly, _falling, _keys_commute, _merge,
                      _occupancy_factor, _term_product)


@dataclass(frozen=True)
class ActionRule:
    """One agent in ``subject`` replaces itself by ``products`` at ``rate``."""

    subject: int
    rate: float
    products: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"action rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class InteractionRule:
    """Subject + partner replace themselves by ``products`` at ``rate``.

    ``subject`` may equal ``partner``; the pair count is then n (n - 1).
    """

    subject: int
    partner: int
    rate: float
    products: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"interaction rate must be >= 0, got {self.rate}")


@dataclass
class BehaviorSpec:
    """A full model: state count plus its action and interaction rules."""

    num_states: int
    actions: List[ActionRule] = field(default_factory=list)
    interactions: List[InteractionRule] = field(default_factory=list)

    def validate(self) -> None:
        for r in self.actions:
            idxs = (r.subject,) + r.products
            if any(i < 0 or i >= self.num_states for i in idxs):
                raise ValueError(f"rule index out of range: {r}")
        for r in self.interactions:
            idxs = (r.subject, r.partner) + r.products
            if any(i < 0 or i >= self.num_states for i in idxs):
                raise ValueError(f"rule index out of range: {r}")

    def dump_rules(self) -> List[str]:
        """One rule per line: kind, indices, rate, products (golden-test format)."""
        lines = []
        for r in self.actions:
            prod = ",".join(map(str, r.products))
            lines.append(f"action {r.subject} {r.rate:g} [{prod}]")
        for r in self.interactions:
            prod = ",".join(map(str, r.products))
            lines.append(f"interaction {r.subject},{r.partner} {r.rate:g} [{prod}]")
        return lines


def _product_creations(products: Sequence[int]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for k in products:
        out[k] = out.get(k, 0) + 1
    return out


def build_action_term(rule: ActionRule) -> OperatorPoly:
    """rate * (prod_k a_k^+  -  a_subject^+) a_subject."""
    if rule.rate == 0:
        return OperatorPoly.zero()
    gain = OperatorPoly.term(rule.rate,
                             creations=_product_creations(rule.products),
                             annihilations={rule.subject: 1})
    loss = OperatorPoly.term(-rule.rate,
                             creations={rule.subject: 1},
                             annihilations={rule.subject: 1})
    return gain + loss


def build_interaction_term(rule: InteractionRule) -> OperatorPoly:
    """rate * ((prod_k a_k^+) - a_subject^+ a_partner^+) a_partner a_subject."""
    if rule.rate == 0:
        return OperatorPoly.zero()
    pair = {rule.subject: 1}
    pair[rule.partner] = pair.get(rule.partner, 0) + 1
    gain = OperatorPoly.term(rule.rate,
                             creations=_product_creations(rule.products),
                             annihilations=dict(pair))
    loss = OperatorPoly.term(-rule.rate,
                             creations=dict(pair),
                             annihilations=dict(pair))
    return gain + loss


class Hamiltonian:
    """Compiled model operator with index-sparse commutation support.

    Immutable after construction; concurrent commutators against the same
    instance are safe.
    """

    def __init__(self, poly: OperatorPoly, num_states: int,
                 spec: BehaviorSpec = None):
        self.poly = poly
        self.num_states = num_states
        self.spec = spec
        self._keys: List[tuple] = list(poly.terms.keys())
        self._coeffs: List[float] = [poly.terms[k] for k in self._keys]
        self.by_creation: Dict[int, List[int]] = defaultdict(list)
        self.by_annihilation: Dict[int, List[int]] = defaultdict(list)
        self.by_support: Dict[int, List[int]] = defaultdict(list)
        self._cre_dicts: List[Dict[int, int]] = []
        self._ann_dicts: List[Dict[int, int]] = []
        for t, (cre, ann, thin) in enumerate(self._keys):
            support = set()
            for i, _ in cre:
                self.by_creation[i].append(t)
                support.add(i)
            for i, _ in ann:
                self.by_annihilation[i].append(t)
                support.add(i)
            for i in support:
                self.by_support[i].append(t)
            self._cre_dicts.append(dict(cre))
            self._ann_dicts.append(dict(ann))
        self._adjacency: Dict[int, Set[int]] = None

    def adjacency(self) -> Dict[int, Set[int]]:
        """Index-coupling graph: each term's support forms a clique."""
        if self._adjacency is None:
            adj: Dict[int, Set[int]] = defaultdict(set)
            for (cre, ann, _thin) in self._keys:
                support = {i for i, _ in cre} | {i for i, _ in ann}
                for i in support:
                    adj[i] |= support - {i}
            self._adjacency = dict(adj)
        return self._adjacency

    def reachable(self, start: int, hops: int) -> Set[int]:
        """Indices reachable from ``start`` within ``hops`` coupling steps."""
        adj = self.adjacency()
        seen = {start}
        frontier = {start}
        for _ in range(hops):
            nxt = set()
            for i in frontier:
                nxt |= adj.get(i, set())
            nxt -= seen
            if not nxt:
                break
            seen |= nxt
            frontier = nxt
        return seen


def build_hamiltonian(spec: BehaviorSpec) -> Hamiltonian:
    """Sum of all rule terms, with the per-index lookup populated."""
    spec.validate()
    poly = OperatorPoly.zero()
    for r in spec.actions:
        poly = poly + build_action_term(r)
    for r in spec.interactions:
        poly = poly + build_interaction_term(r)
    return Hamiltonian(poly, spec.num_states, spec)


def commutator_with_H(x: OperatorPoly, h: Hamiltonian) -> OperatorPoly:
    """[x, H] visiting only the model terms that can couple to ``x``.

    Exactly equal to ``algebra.commutator(x, h.poly)``; the index lookup
    is an optimization, never a semantic change.  Creation-free terms
    against thinning-free model terms take a closed-form path: the
    reverse product is already normal ordered, so the commutator reduces
    to the contraction sum plus a thinning rescale of the base term.
    """
    out: dict = {}
    for kx, cx in x.terms.items():
        cre_x, ann_x, thin_x = kx
        cand: Set[int] = set()
        for i, _ in ann_x:
            cand.update(h.by_creation.get(i, ()))
        for i, _ in cre_x:
            cand.update(h.by_annihilation.get(i, ()))
        for i, _ in thin_x:
            cand.update(h.by_support.get(i, ()))
        fast = not cre_x
        for t in sorted(cand):
            kh = h._keys[t]
            ch = h._coeffs[t]
            if not fast or kh[2]:
                if _keys_commute(kx, kh):
                    continue
                for k, c in _term_product(kx, cx, kh, ch):
                    v = out.get(k, 0.0) + c
                    if v == 0.0:
                        out.pop(k, None)
                    else:
                        out[k] = v
                for k, c in _term_product(kh, ch, kx, cx):
                    v = out.get(k, 0.0) - c
                    if v == 0.0:
                        out.pop(k, None)
                    else:
                        out[k] = v
                continue
            cre_h, ann_h, _ = kh
            cre_h_d = h._cre_dicts[t]
            coeff = cx * ch
            scale = 1.0
            if thin_x:
                ann_h_d = h._ann_dicts[t]
                for i, s in thin_x:
                    e = cre_h_d.get(i, 0) - ann_h_d.get(i, 0)
                    if e:
                        scale *= s ** e
            shared = [(i, m) for i, m in ann_x if i in cre_h_d]
            if not shared and scale == 1.0:
                continue
            ann_total = _merge_sorted(ann_h, ann_x)
            base = (cre_h, ann_total, thin_x)
            c0 = (scale - 1.0) * coeff
            if c0 != 0.0:
                v = out.get(base, 0.0) + c0
                if v == 0.0:
                    out.pop(base, None)
                else:
                    out[base] = v
            if not shared:
                continue
            cc = scale * coeff
            if len(shared) == 1:
                i, m = shared[0]
                c = cre_h_d[i]
                for q in range(1, min(m, c) + 1):
                    w = cc * math.comb(m, q) * _falling(c, q)
                    key = (_dec(cre_h, i, q), _dec(ann_total, i, q), thin_x)
                    v = out.get(key, 0.0) + w
                    if v == 0.0:
                        out.pop(key, None)
                    else:
                        out[key] = v
                continue
            options = [[(i, q, math.comb(m, q) * _falling(cre_h_d[i], q))
                        for q in range(min(m, cre_h_d[i]) + 1)]
                       for i, m in shared]
            for combo in _iproduct(*options):
                w = cc
                contracted = []
                for i, q, wq in combo:
                    if q:
                        w *= wq
                        contracted.append((i, q))
                if not contracted or w == 0.0:
                    continue
                cre, ann = cre_h, ann_total
                for i, q in contracted:
                    cre = _dec(cre, i, q)
                    ann = _dec(ann, i, q)
                key = (cre, ann, thin_x)
                v = out.get(key, 0.0) + w
                if v == 0.0:
                    out.pop(key, None)
                else:
                    out[key] = v
    return OperatorPoly(out)


def commutator_value_with_H(x: OperatorPoly, h: Hamiltonian,
                            lambdas, deltas=None) -> float:
    """Functional value of [x, H] applied to the prior product state.

    Equal to ``commutator_with_H(x, h).strip_creations().eval_moments(...)``
    but accumulates the scalar directly, never materializing the result.
    The series driver uses this for its final order, which is the widest
    polynomial and is only ever needed through the functional.

    Each x term's occupancy-factor product is computed once; a model term
    touches at most a few indices, so every pair contribution patches just
    those factors instead of rebuilding the whole product.
    """
    total = 0.0
    scale_cache: Dict[tuple, float] = {}
    for kx, cx in x.terms.items():
        cre_x, ann_x, thin_x = kx
        cand: Set[int] = set()
        for i, _ in ann_x:
            cand.update(h.by_creation.get(i, ()))
        for i, _ in cre_x:
            cand.update(h.by_annihilation.get(i, ()))
        for i, _ in thin_x:
            cand.update(h.by_support.get(i, ()))
        fast = not cre_x
        thin_d = dict(thin_x)
        ann_x_d = dict(ann_x)
        # per-index occupancy factors of the x term and their product
        # split into the nonzero part and the set of zero factors
        fx: Dict[int, float] = {}
        v_nz = 1.0
        zero_set: Set[int] = set()
        for i, e in ann_x:
            d = deltas[i] if deltas is not None else 0
            f = _occupancy_factor(e, d, lambdas[i], thin_d.get(i, 1.0))
            fx[i] = f
            if f == 0.0:
                zero_set.add(i)
            else:
                v_nz *= f
        for i, s in thin_x:
            if i in ann_x_d:
                continue
            d = deltas[i] if deltas is not None else 0
            f = s ** d if d else 1.0
            fx[i] = f
            if f == 0.0:
                zero_set.add(i)
            else:
                v_nz *= f
        for t in sorted(cand):
            kh = h._keys[t]
            ch = h._coeffs[t]
            if not fast or kh[2]:
                if _keys_commute(kx, kh):
                    continue
                for k, c in _term_product(kx, cx, kh, ch):
                    total += c * _stripped_value(k, lambdas, deltas)
                for k, c in _term_product(kh, ch, kx, cx):
                    total -= c * _stripped_value(k, lambdas, deltas)
                continue
            cre_h_d = h._cre_dicts[t]
            coeff = cx * ch
            if thin_x:
                ck = (thin_x, t)
                scale = scale_cache.get(ck)
                if scale is None:
                    scale = 1.0
                    ann_h_d = h._ann_dicts[t]
                    for i, s in thin_x:
                        e = cre_h_d.get(i, 0) - ann_h_d.get(i, 0)
                        if e:
                            scale *= s ** e
                    scale_cache[ck] = scale
            else:
                scale = 1.0
            shared = [(i, m) for i, m in ann_x if i in cre_h_d]
            if not shared and scale == 1.0:
                continue
            # replaced indices: wherever the pair changes the occupancy
            # exponent (model-term annihilations plus contraction sites);
            # every other index keeps its x-term factor
            info = []
            seen = set()
            excl = v_nz
            for i, eh in kh[1]:
                seen.add(i)
                f = fx.get(i)
                if f:
                    excl /= f
                d = deltas[i] if deltas is not None else 0
                info.append((i, ann_x_d.get(i, 0) + eh, d,
                             lambdas[i], thin_d.get(i, 1.0)))
            for i, _m in shared:
                if i not in seen:
                    seen.add(i)
                    f = fx.get(i)
                    if f:
                        excl /= f
                    d = deltas[i] if deltas is not None else 0
                    info.append((i, ann_x_d[i], d, lambdas[i],
                                 thin_d.get(i, 1.0)))
            if zero_set and zero_set - seen:
                continue  # an untouched zero factor kills every term
            base = excl
            for _i, e, d, lm, s in info:
                base *= _occupancy_factor(e, d, lm, s)
            c0 = (scale - 1.0) * coeff
            if c0 != 0.0 and base != 0.0:
                total += c0 * base
            if not shared:
                continue
            cc = scale * coeff
            if len(shared) == 1:
                i, m = shared[0]
                c = cre_h_d[i]
                others = excl
                at_i = None
                for j, e, d, lm, s in info:
                    if j == i:
                        at_i = (e, d, lm, s)
                    else:
                        others *= _occupancy_factor(e, d, lm, s)
                e_i, d_i, lm_i, s_i = at_i
                for q in range(1, min(m, c) + 1):
                    w = cc * math.comb(m, q) * _falling(c, q)
                    total += (w * others
                              * _occupancy_factor(e_i - q, d_i, lm_i, s_i))
                continue
            options = [[(i, q, math.comb(m, q) * _falling(cre_h_d[i], q))
                        for q in range(min(m, cre_h_d[i]) + 1)]
                       for i, m in shared]
            for combo in _iproduct(*options):
                w = cc
                qmap = {}
                for i, q, wq in combo:
                    if q:
                        w *= wq
                        qmap[i] = q
                if not qmap or w == 0.0:
                    continue
                val = excl
                for i, e, d, lm, s in info:
                    val *= _occupancy_factor(e - qmap.get(i, 0), d, lm, s)
                total += w * val
    return total


def _ann_value(ann: Dict[int, int], thin: Dict[int, float],
               lambdas, deltas) -> float:
    """Functional of a creation-stripped term given as exponent/thinning maps."""
    v = 1.0
    for i, e in ann.items():
        if not e:
            continue
        d = deltas[i] if deltas is not None else 0
        v *= _occupancy_factor(e, d, lambdas[i], thin.get(i, 1.0))
    for i, s in thin.items():
        if ann.get(i):
            continue
        d = deltas[i] if deltas is not None else 0
        if d:
            v *= s ** d
    return v


def _stripped_value(key, lambdas, deltas) -> float:
    _cre, ann, thin = key
    return _ann_value(dict(ann), dict(thin), lambdas, deltas)


def _dec(factors: tuple, index: int, q: int) -> tuple:
    """Lower the exponent at one index of a sorted factor tuple."""
    out = []
    for j, e in factors:
        if j == index:
            e -= q
            if not e:
                continue
        out.append((j, e))
    return tuple(out)


def _merge_sorted(a: tuple, b: tuple) -> tuple:
    """Union of two sorted ``(index, exponent)`` tuples, adding exponents."""
    if not a:
        return b
    if not b:
        return a
    out = []
    ia = ib = 0
    na, nb = len(a), len(b)
    while ia < na and ib < nb:
        ja, ea = a[ia]
        jb, eb = b[ib]
        if ja < jb:
            out.append(a[ia])
            ia += 1
        elif jb < ja:
            out.append(b[ib])
            ib += 1
        else:
            out.append((ja, ea + eb))
            ia += 1
            ib += 1
    out.extend(a[ia:])
    out.extend(b[ib:])
    return tuple(out)
