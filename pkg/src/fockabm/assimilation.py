"""Sequential belief update: forecast by a commutator series, condition on
thinned counts, and project back onto a product shifted-Poisson state.

The workhorse computes functional values of the form

    y = e^(-t) sum_n (t^n / n!) F(Z'_n),     Z'_{n+1} = Z'_n + [Z'_n, H]

where F evaluates a creation-free operator against the prior product
state.  The shift ``e^(t(I+H))`` keeps the terms well scaled, and the
creation-stripping identity keeps each Z'_n small.  The series stops once
an empirical truncation estimate drops below a relative tolerance.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import OperatorPoly, _occupancy_factor, multiply
from .deselby import DeselbyState
from .hamiltonian import (Hamiltonian, commutator_value_with_H,
                          commutator_with_H)

#: relative coefficient cut applied after every series step
SERIES_COEFF_EPS = 1e-14
DEFAULT_REL_TOL = 0.002
DEFAULT_MAX_ORDER = 12


@dataclass(frozen=True)
class Observation:
    """Count ``count`` seen at ``index`` with detection probability ``detect``."""

    index: int
    count: int
    detect: float

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("observed count must be >= 0")
        if not 0.0 < self.detect <= 1.0:
            raise ValueError("detection probability must be in (0, 1]")


@dataclass
class SeriesDiagnostics:
    order: int
    term_values: List[float] = field(default_factory=list)
    error_estimate: float = 0.0
    pruned: int = 0


class SeriesConvergenceError(RuntimeError):
    """Raised when the series hits max order above tolerance."""

    def __init__(self, message: str, diagnostics: SeriesDiagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ZeroLikelihoodError(RuntimeError):
    """The observation set has zero probability under the forecast."""


class WindowRejectedError(RuntimeError):
    """The assimilation window produced an unusable posterior."""


def observation_operator(obs: Observation) -> OperatorPoly:
    """a+^m a^m Lg at the observed index, as a single normal-ordered term."""
    survival = 1.0 - obs.detect
    thin = {obs.index: survival} if survival < 1.0 else {}
    if survival == 0.0:
        # full detection: survival 0 is encoded as an explicit zero factor
        thin = {obs.index: 0.0}
    m = obs.count
    return OperatorPoly.term(
        1.0,
        creations={obs.index: m} if m else None,
        annihilations={obs.index: m} if m else None,
        thinning=thin if thin else None,
    )


def truncation_error(term_values: Sequence[float], t: float, n: int) -> float:
    """Empirical estimate of the remainder after truncating at order n.

    Uses xbar = (t / n) * sum_{k=1..n} |F(Z'_k)|^(1/k) and returns
    e^(-t) (e^xbar - sum_{k=0..n} xbar^k / k!).
    """
    if n < 1:
        raise ValueError("need at least one computed order")
    xbar = (t / n) * sum(abs(v) ** (1.0 / k)
                         for k, v in enumerate(term_values[:n], start=1))
    partial = 0.0
    fact = 1.0
    for k in range(n + 1):
        if k:
            fact *= k
        partial += xbar ** k / fact
    return math.exp(-t) * (math.exp(xbar) - partial)


def z_series_value(z0: OperatorPoly, h: Hamiltonian, psi0: DeselbyState,
                   t: float, rel_tol: float = DEFAULT_REL_TOL,
                   max_order: int = DEFAULT_MAX_ORDER,
                   coeff_eps: float = SERIES_COEFF_EPS,
                   ) -> Tuple[float, SeriesDiagnostics]:
    """Evaluate the functional of z0 applied to the evolved prior state.

    Each order's operator is stripped of creation factors (valid under the
    summing functional) and evaluated against the prior's full product
    state, shifts included.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = psi0.lambdas
    delta = psi0.deltas if psi0.deltas.any() else None
    z = z0.strip_creations().prune(coeff_eps)
    f0 = z.eval_moments(lam, delta)
    if t == 0.0:
        return f0, SeriesDiagnostics(order=0, term_values=[f0])
    term_values = [f0]
    partial = f0
    weight = 1.0
    for n in range(1, max_order + 1):
        # probe the next order by value only; the full polynomial is
        # materialized just below, and only if the series must continue,
        # so the widest order is never built
        fn = term_values[-1] + commutator_value_with_H(z, h, lam, delta)
        term_values.append(fn)
        weight *= t / n
        partial += weight * fn
        # the root-mean estimator assumes order-one term values; rescale
        # by the running maximum so the estimate is exact for geometric
        # series of any overall magnitude
        scale = max(abs(v) for v in term_values) or 1.0
        err = scale * truncation_error([v / scale
                                        for v in term_values[1:]], t, n)
        value = math.exp(-t) * partial
        if err <= rel_tol * abs(value):
            return value, SeriesDiagnostics(order=n, term_values=term_values,
                                            error_estimate=err)
        if n < max_order:
            z = (z + commutator_with_H(z, h)).strip_creations().prune(coeff_eps)
    diag = SeriesDiagnostics(order=max_order, term_values=term_values,
                             error_estimate=err)
    raise SeriesConvergenceError(
        f"series did not converge within {max_order} orders "
        f"(error estimate {err:.3g})", diag)


def _eval_many(poly: OperatorPoly, lam_mat: np.ndarray,
               delta_mat: np.ndarray) -> np.ndarray:
    """Functional of a creation-stripped operator over many product states.

    Row k of the matrices holds one state's rates and shifts; the result
    matches ``poly.eval_moments`` applied row by row.  Shift handling is
    only vectorized where a column is all zero, which covers almost every
    index in practice.
    """
    rows = lam_mat.shape[0]
    has_delta = delta_mat.any(axis=0)
    total = np.zeros(rows)
    for (_cre, ann, thin), c in poly.terms.items():
        v = np.full(rows, c)
        sd = dict(thin) if thin else None
        for i, d in ann:
            s = sd.pop(i, 1.0) if sd else 1.0
            col = lam_mat[:, i]
            if has_delta[i]:
                dcol = delta_mat[:, i]
                f = np.empty(rows)
                zero = dcol == 0
                f[zero] = (s * col[zero]) ** d
                for r in np.nonzero(~zero)[0]:
                    f[r] = _occupancy_factor(d, int(dcol[r]),
                                             float(col[r]), s)
                v = v * f
            else:
                v = v * (s * col) ** d
        if sd:
            for i, s in sd.items():
                if has_delta[i]:
                    v = v * s ** delta_mat[:, i].astype(float)
        total += v
    return total


class _CompiledPoly:
    """A creation-stripped operator packed into flat arrays.

    Matches ``_eval_many`` row by row but an order of magnitude smaller
    than the dict form and far cheaper to evaluate, which makes caching
    the widest series order affordable.  Every term gets at least one
    factor (a harmless power of zero) so segment products stay aligned.
    """

    __slots__ = ("coeff", "f_idx", "f_d", "f_s", "f_ptr",
                 "t_idx", "t_s", "t_term", "nterms")

    def __init__(self, poly: OperatorPoly):
        coeff, f_idx, f_d, f_s, f_ptr = [], [], [], [], [0]
        t_idx, t_s, t_term = [], [], []
        for (_cre, ann, thin), c in poly.terms.items():
            coeff.append(c)
            sd = dict(thin) if thin else None
            for i, d in ann:
                f_idx.append(i)
                f_d.append(d)
                f_s.append(sd.pop(i, 1.0) if sd else 1.0)
            if f_ptr[-1] == len(f_idx):
                f_idx.append(0)
                f_d.append(0)
                f_s.append(1.0)
            f_ptr.append(len(f_idx))
            if sd:
                for i, s in sd.items():
                    t_idx.append(i)
                    t_s.append(s)
                    t_term.append(len(coeff) - 1)
        self.coeff = np.array(coeff)
        self.f_idx = np.array(f_idx, dtype=np.int32)
        self.f_d = np.array(f_d, dtype=np.float64)
        self.f_s = np.array(f_s)
        self.f_ptr = np.array(f_ptr[:-1], dtype=np.int64)
        self.t_idx = np.array(t_idx, dtype=np.int32)
        self.t_s = np.array(t_s)
        self.t_term = np.array(t_term, dtype=np.int64)
        self.nterms = len(poly.terms)

    def eval_row(self, lam: np.ndarray, delta: np.ndarray) -> float:
        fv = (self.f_s * lam[self.f_idx]) ** self.f_d
        if delta.any():
            hot = np.nonzero(delta[self.f_idx] != 0)[0]
            for p in hot:
                fv[p] = _occupancy_factor(int(self.f_d[p]),
                                          int(delta[self.f_idx[p]]),
                                          float(lam[self.f_idx[p]]),
                                          float(self.f_s[p]))
        prod = np.multiply.reduceat(fv, self.f_ptr)
        if len(self.t_idx) and delta.any():
            dv = delta[self.t_idx]
            nz = np.nonzero(dv != 0)[0]
            if len(nz):
                np.multiply.at(prod, self.t_term[nz],
                               self.t_s[nz] ** dv[nz].astype(float))
        return float(self.coeff @ prod)

    def eval_rows(self, lam_mat: np.ndarray,
                  delta_mat: np.ndarray) -> np.ndarray:
        return np.array([self.eval_row(lam_mat[k], delta_mat[k])
                         for k in range(lam_mat.shape[0])])


class _SeriesTemplate:
    """Lazily extended series polynomials for one canonical seed."""

    __slots__ = ("polys", "compiled", "hits")

    def __init__(self, z0: OperatorPoly, coeff_eps: float):
        self.polys = [z0.strip_creations().prune(coeff_eps)]
        self.compiled: Dict[int, _CompiledPoly] = {}
        self.hits = 0

    def poly(self, n: int, h: Hamiltonian,
             coeff_eps: float) -> OperatorPoly:
        while len(self.polys) <= n:
            z = self.polys[-1]
            self.polys.append((z + commutator_with_H(z, h))
                              .strip_creations().prune(coeff_eps))
        return self.polys[n]

    def eval_order(self, n: int, h: Hamiltonian, coeff_eps: float,
                   lam_mat: np.ndarray,
                   delta_mat: np.ndarray) -> np.ndarray:
        cp = self.compiled.get(n)
        if cp is None:
            if len(self.polys) > n:
                z = self.polys[n]
            else:
                # widest order: compile without keeping the dict form,
                # which dominates the memory of a stored recurrence
                z = self.polys[-1]
                z = (z + commutator_with_H(z, h)) \
                    .strip_creations().prune(coeff_eps)
            cp = _CompiledPoly(z)
            self.compiled[n] = cp
        return cp.eval_rows(lam_mat, delta_mat)

    def size(self) -> int:
        # packed orders weigh roughly a tenth of a dict term each
        dict_orders = len(self.polys)
        return (sum(len(p.terms) for p in self.polys)
                + sum(cp.nterms // 10 + 1
                      for o, cp in self.compiled.items()
                      if o >= dict_orders))


#: materializing an order only pays off when enough rows evaluate it;
#: below this, the order is probed by value and never stored
_PROBE_MAX_ROWS = 3


class SeriesTemplateCache:
    """Series recurrences reused across assimilation windows.

    A recurrence depends only on its seed shape and the model operator, so
    one cache can serve every window of an experiment run against the same
    model.  Stored terms are capped; least recently used entries go first.
    """

    def __init__(self, max_terms: int = 500_000):
        self.max_terms = max_terms
        self._entries: "OrderedDict[tuple, _SeriesTemplate]" = OrderedDict()

    def get(self, key: tuple) -> Optional["_SeriesTemplate"]:
        tpl = self._entries.get(key)
        if tpl is not None:
            tpl.hits += 1
            self._entries.move_to_end(key)
        return tpl

    def put(self, key: tuple, template: "_SeriesTemplate") -> None:
        self._entries[key] = template
        self._entries.move_to_end(key)

    def trim(self) -> None:
        total = sum(t.size() for t in self._entries.values())
        while total > self.max_terms and len(self._entries) > 1:
            _, dropped = self._entries.popitem(last=False)
            total -= dropped.size()


def _template_series(template: _SeriesTemplate, h: Hamiltonian,
                     lam_mat: np.ndarray, delta_mat: np.ndarray,
                     t: float, rel_tol: float, max_order: int,
                     coeff_eps: float,
                     ) -> Tuple[np.ndarray, List[SeriesDiagnostics]]:
    """One operator recurrence evaluated against many product states.

    Equivalent to ``z_series_value`` per row, but the series polynomials
    are built once and shared; each row keeps its own convergence test and
    may stop at a different order.  The widest order of a seed seen for
    the first time with few remaining rows is probed by value and never
    built; once a seed recurs, its widest order is compiled to packed
    arrays so later windows evaluate it directly.
    """
    rows = lam_mat.shape[0]
    f0 = _eval_many(template.polys[0], lam_mat, delta_mat)
    if t == 0.0:
        return f0, [SeriesDiagnostics(order=0, term_values=[v])
                    for v in f0]
    term_values: List[List[float]] = [[v] for v in f0]
    partial = f0.copy()
    values = np.empty(rows)
    diags: List[Optional[SeriesDiagnostics]] = [None] * rows
    active = np.arange(rows)
    weight = 1.0
    last_err = np.zeros(rows)
    for n in range(1, max_order + 1):
        if (len(template.polys) == n and n not in template.compiled
                and template.hits == 0
                and len(active) <= _PROBE_MAX_ROWS):
            # first sighting of a rare seed: probe by value, store nothing
            z_prev = template.polys[n - 1]
            fn = np.array([
                term_values[k][-1] + commutator_value_with_H(
                    z_prev, h, lam_mat[k],
                    delta_mat[k] if delta_mat[k].any() else None)
                for k in active])
        else:
            fn = template.eval_order(n, h, coeff_eps,
                                     lam_mat[active], delta_mat[active])
        weight *= t / n
        still = []
        for pos, k in enumerate(active):
            tv = term_values[k]
            tv.append(float(fn[pos]))
            partial[k] += weight * fn[pos]
            scale = max(abs(v) for v in tv) or 1.0
            err = scale * truncation_error([v / scale for v in tv[1:]],
                                           t, n)
            last_err[k] = err
            value = math.exp(-t) * partial[k]
            if err <= rel_tol * abs(value):
                values[k] = value
                diags[k] = SeriesDiagnostics(order=n, term_values=tv,
                                             error_estimate=err)
            else:
                still.append(k)
        if not still:
            return values, diags
        active = np.array(still)
        if n < max_order:
            # the next order probes or evaluates against this one
            template.poly(n, h, coeff_eps)
    k = int(active[0])
    diag = SeriesDiagnostics(order=max_order, term_values=term_values[k],
                             error_estimate=last_err[k])
    raise SeriesConvergenceError(
        f"series did not converge within {max_order} orders "
        f"(error estimate {last_err[k]:.3g})", diag)


def prune_observations(target: int, omega: Sequence[Observation],
                       h: Hamiltonian, n: int) -> List[Observation]:
    """Keep observations whose n-step influence cone can reach the target's.

    The cone is over-approximated by breadth-first reachability on the
    rule-coupling graph; two radius-n cones intersect iff the graph
    distance is at most 2n.
    """
    if n < 0:
        raise ValueError("cone order must be >= 0")
    cone = h.reachable(target, 2 * n)
    return [o for o in omega if o.index in cone]


@dataclass
class TargetDiagnostics:
    index: int
    order: int
    error_estimate: float
    pruned: int
    clamped: bool = False


@dataclass
class WindowDiagnostics:
    targets: List[TargetDiagnostics] = field(default_factory=list)

    def max_order(self) -> int:
        return max((d.order for d in self.targets), default=0)

    def total_pruned(self) -> int:
        return sum(d.pruned for d in self.targets)

    def to_record(self) -> Dict:
        return {
            "max_order": self.max_order(),
            "pruned": self.total_pruned(),
            "max_error": max((d.error_estimate for d in self.targets),
                             default=0.0),
            "clamped": sum(1 for d in self.targets if d.clamped),
        }


def assimilate_window(psi0: DeselbyState, omega: Sequence[Observation],
                      h: Hamiltonian, t: float,
                      rel_tol: float = DEFAULT_REL_TOL,
                      max_order: int = DEFAULT_MAX_ORDER,
                      prune_n: int = 4,
                      neg_tol: float = 1e-9,
                      coeff_eps: float = SERIES_COEFF_EPS,
                      symmetry=None,
                      series_cache: Optional[SeriesTemplateCache] = None,
                      ) -> Tuple[DeselbyState, WindowDiagnostics]:
    """One assimilation cycle: forecast by ``t``, condition on ``omega``,
    and moment-match back to a product shifted-Poisson state.

    The new shift at an observed index is the observed count; the new rate
    is the ratio of two series values (with the shift subtracted), using a
    per-target pruned observation set.  Slightly negative rates are series
    noise and clamp to zero; larger negatives reject the window.

    ``symmetry`` may name a translation group the model operator commutes
    with (``gridmodel.TorusSymmetry`` for torus lattices); targets whose
    observation sets have the same shape then share one series recurrence,
    which is much faster on large grids.  The caller must guarantee the
    invariance; results are identical either way.
    """
    num_states = psi0.num_states
    seen = set()
    for o in omega:
        if o.index in seen:
            raise ValueError(
                f"index {o.index} observed twice in one window")
        seen.add(o.index)

    if t == 0.0:
        return _assimilate_instant(psi0, omega, neg_tol)
    if symmetry is not None:
        if symmetry.num_states != num_states:
            raise ValueError("symmetry geometry does not match the state")
        return _assimilate_window_grouped(psi0, omega, h, t, rel_tol,
                                          max_order, prune_n, neg_tol,
                                          coeff_eps, symmetry, series_cache)

    new_deltas = np.zeros(num_states, dtype=np.int64)
    for o in omega:
        new_deltas[o.index] = o.count

    new_lambdas = np.zeros(num_states)
    diag = WindowDiagnostics()
    den_cache: Dict[tuple, Tuple[float, SeriesDiagnostics]] = {}
    obs_poly_cache: Dict[tuple, OperatorPoly] = {}

    for i in range(num_states):
        kept = prune_observations(i, omega, h, prune_n)
        key = tuple(sorted((o.index, o.count, o.detect) for o in kept))
        obs_poly = obs_poly_cache.get(key)
        if obs_poly is None:
            obs_poly = OperatorPoly.one()
            for o in sorted(kept, key=lambda o: o.index):
                obs_poly = multiply(obs_poly, observation_operator(o))
            obs_poly_cache[key] = obs_poly
        cached = den_cache.get(key)
        if cached is None:
            cached = z_series_value(obs_poly, h, psi0, t, rel_tol,
                                    max_order, coeff_eps)
            den_cache[key] = cached
        den, _ = cached
        if den == 0.0:
            raise ZeroLikelihoodError(
                f"zero-probability observation set near index {i}")
        num_poly = multiply(OperatorPoly.annihilation(i), obs_poly)
        num, ndiag = z_series_value(num_poly, h, psi0, t, rel_tol,
                                    max_order, coeff_eps)
        lam = num / den - new_deltas[i]
        clamped = False
        if lam < 0.0:
            if lam > -neg_tol:
                lam = 0.0
                clamped = True
            else:
                raise WindowRejectedError(
                    f"negative posterior rate {lam:.3g} at index {i}; "
                    "series tolerance too loose for this window")
        new_lambdas[i] = lam
        diag.targets.append(TargetDiagnostics(
            index=i, order=ndiag.order, error_estimate=ndiag.error_estimate,
            pruned=len(omega) - len(kept), clamped=clamped))

    return DeselbyState(new_lambdas, new_deltas), diag


def _canonical_poly(canon_obs: tuple) -> OperatorPoly:
    poly = OperatorPoly.one()
    for index, count, detect in canon_obs:
        poly = multiply(poly, observation_operator(
            Observation(index, count, detect)))
    return poly


def _template_for(cache: Optional[SeriesTemplateCache], key: tuple,
                  build_z0, coeff_eps: float) -> _SeriesTemplate:
    if cache is None:
        return _SeriesTemplate(build_z0(), coeff_eps)
    tpl = cache.get(key)
    if tpl is None:
        tpl = _SeriesTemplate(build_z0(), coeff_eps)
        cache.put(key, tpl)
    return tpl


def _assimilate_window_grouped(psi0: DeselbyState,
                               omega: Sequence[Observation],
                               h: Hamiltonian, t: float, rel_tol: float,
                               max_order: int, prune_n: int,
                               neg_tol: float, coeff_eps: float, symmetry,
                               series_cache: Optional[SeriesTemplateCache],
                               ) -> Tuple[DeselbyState, WindowDiagnostics]:
    """Translation-grouped assimilation: same result as the generic loop.

    Targets whose pruned observation sets have the same shape relative to
    the target share one series recurrence; each target only re-evaluates
    the shared polynomials against its own shifted rate field.
    """
    num_states = psi0.num_states
    lam = psi0.lambdas
    dp = psi0.deltas
    new_deltas = np.zeros(num_states, dtype=np.int64)
    for o in omega:
        new_deltas[o.index] = o.count

    kept_list = [sorted(prune_observations(i, omega, h, prune_n),
                        key=lambda o: o.index)
                 for i in range(num_states)]
    abs_keys = [tuple((o.index, o.count, o.detect) for o in kept)
                for kept in kept_list]

    # one denominator per distinct absolute observation set, grouped by
    # the set's shape; the canonical frame anchors at whichever member
    # observation gives the lexicographically least shape
    den_values: Dict[tuple, float] = {}
    den_jobs: Dict[tuple, List[Observation]] = {}
    for kept, ak in zip(kept_list, abs_keys):
        if ak and ak not in den_jobs:
            den_jobs[ak] = kept
    if any(not ak for ak in abs_keys):
        # the empty-set denominator is the truncated identity series, kept
        # (rather than exactly 1) so both code paths agree bit for bit
        den_values[()] = z_series_value(OperatorPoly.one(), h, psi0, t,
                                        rel_tol, max_order, coeff_eps)[0]
    den_groups: Dict[tuple, List[tuple]] = {}
    for ak, kept in den_jobs.items():
        candidates = []
        for o in kept:
            anchor = symmetry.anchor(o.index)
            shape, tf = symmetry.canonical_shape(ak, anchor)
            candidates.append((shape, anchor, tf))
        shape, anchor, tf = min(candidates)
        den_groups.setdefault(shape, []).append((ak, anchor, tf))
    for ck, members in den_groups.items():
        tpl = _template_for(series_cache, ("den", ck, coeff_eps),
                            lambda: _canonical_poly(ck), coeff_eps)
        gathers = np.array([symmetry.gather(anchor, tf)
                            for _, anchor, tf in members])
        vals, _ = _template_series(tpl, h, lam[gathers], dp[gathers], t,
                                   rel_tol, max_order, coeff_eps)
        for (ak, _, _), v in zip(members, vals):
            den_values[ak] = float(v)

    # numerators grouped by target species plus observation shape; the
    # canonical frame anchors at the target itself
    num_groups: Dict[tuple, List[Tuple[int, tuple]]] = {}
    for i in range(num_states):
        ck, tf = symmetry.canonical_shape(abs_keys[i], symmetry.anchor(i))
        num_groups.setdefault((i % symmetry.num_species, ck),
                              []).append((i, tf))
    num_values = np.empty(num_states)
    num_diags: List[Optional[SeriesDiagnostics]] = [None] * num_states
    for (sp, ck), members in num_groups.items():
        targets = [i for i, _ in members]
        tpl = _template_for(
            series_cache, ("num", sp, ck, coeff_eps),
            lambda: multiply(OperatorPoly.annihilation(sp),
                             _canonical_poly(ck)), coeff_eps)
        gathers = np.array([symmetry.gather(symmetry.anchor(i), tf)
                            for i, tf in members])
        vals, dgs = _template_series(tpl, h, lam[gathers], dp[gathers], t,
                                     rel_tol, max_order, coeff_eps)
        for i, v, dg in zip(targets, vals, dgs):
            num_values[i] = v
            num_diags[i] = dg
    if series_cache is not None:
        series_cache.trim()

    new_lambdas = np.zeros(num_states)
    diag = WindowDiagnostics()
    for i in range(num_states):
        den = den_values[abs_keys[i]]
        if den == 0.0:
            raise ZeroLikelihoodError(
                f"zero-probability observation set near index {i}")
        value = num_values[i] / den - new_deltas[i]
        clamped = False
        if value < 0.0:
            if value > -neg_tol:
                value = 0.0
                clamped = True
            else:
                raise WindowRejectedError(
                    f"negative posterior rate {value:.3g} at index {i}; "
                    "series tolerance too loose for this window")
        new_lambdas[i] = value
        ndiag = num_diags[i]
        diag.targets.append(TargetDiagnostics(
            index=i, order=ndiag.order,
            error_estimate=ndiag.error_estimate,
            pruned=len(omega) - len(kept_list[i]), clamped=clamped))
    return DeselbyState(new_lambdas, new_deltas), diag


def _assimilate_instant(psi0: DeselbyState, omega: Sequence[Observation],
                        neg_tol: float) -> Tuple[DeselbyState, WindowDiagnostics]:
    """Pure observation update (t = 0).

    With no evolution the functional factorizes per index, so each
    observed index conditions independently and unobserved indices just
    moment-match their prior mean back to a zero-shift state.  Full
    detection (survival 0) is a removable 0/0 in the operator ratio and
    is resolved by the brute-force posterior mean.
    """
    from .deselby import DeselbyParams, binomial_posterior_exact

    lam = psi0.lambdas
    dp = psi0.deltas
    new_deltas = np.zeros(psi0.num_states, dtype=np.int64)
    new_lambdas = (lam + dp).astype(float)
    diag = WindowDiagnostics()
    observed = {o.index: o for o in omega}
    for i in range(psi0.num_states):
        o = observed.get(i)
        clamped = False
        if o is not None:
            obs_poly = observation_operator(o)
            den = obs_poly.eval_moments(lam, dp)
            num_poly = multiply(OperatorPoly.annihilation(i), obs_poly)
            num = num_poly.eval_moments(lam, dp)
            if den > 0.0:
                ratio = num / den
            else:
                post = binomial_posterior_exact(
                    DeselbyParams(float(lam[i]), int(dp[i])),
                    o.count, o.detect)
                ratio = float(np.arange(len(post)) @ post)
            value = ratio - o.count
            if value < 0.0:
                if value > -neg_tol:
                    value = 0.0
                    clamped = True
                else:
                    raise WindowRejectedError(
                        f"negative posterior rate {value:.3g} at index {i}")
            new_lambdas[i] = value
            new_deltas[i] = o.count
        diag.targets.append(TargetDiagnostics(
            index=i, order=0, error_estimate=0.0,
            pruned=len(omega) - (1 if o is not None else 0),
            clamped=clamped))
    return DeselbyState(new_lambdas, new_deltas), diag
