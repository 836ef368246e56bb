"""Lattice-symmetry series sharing against the per-target reference path."""

import numpy as np
import pytest

from fockabm.algebra import OperatorPoly, multiply
from fockabm.assimilation import (Observation, SeriesTemplateCache,
                                  _CompiledPoly, _canonical_poly,
                                  assimilate_window)
from fockabm.deselby import DeselbyState
from fockabm.gridmodel import TorusSymmetry, predator_prey_spec
from fockabm.hamiltonian import build_hamiltonian, commutator_with_H


@pytest.fixture(scope="module")
def h4():
    return build_hamiltonian(predator_prey_spec(4, 4))


class TestTorusSymmetry:
    def test_transform_counts(self):
        assert len(TorusSymmetry(4, 4).transforms) == 8
        assert len(TorusSymmetry(4, 3).transforms) == 4

    def test_gather_inverts_to_canonical(self):
        sym = TorusSymmetry(5, 4)
        rng = np.random.default_rng(0)
        for _ in range(40):
            i = int(rng.integers(0, sym.num_states))
            anchor = sym.anchor(int(rng.integers(0, sym.num_states)))
            for tf in sym.transforms:
                g = sym.gather(anchor, tf)
                assert g[sym.to_canonical(i, anchor, tf)] == i

    def test_anchor_maps_to_origin(self):
        sym = TorusSymmetry(4, 4)
        for i in (0, 1, 13, 30):
            anchor = sym.anchor(i)
            assert sym.to_canonical(i, anchor) == i % 2

    def test_canonical_shape_orientation_invariant(self):
        # the same two-point constellation rotated and translated must
        # produce the same key
        sym = TorusSymmetry(4, 4)
        a = [(sym.to_canonical(0, (0, 0)), 1, 0.9),
             ((2 * (1 * 4 + 2) + 1), 0, 0.9)]
        shape_a, _ = sym.canonical_shape(a, (0, 0))
        # shift by (1, 1) and rotate the displacement (2, 1) to (-1, 2)
        b = [(2 * (1 * 4 + 1) + 0, 1, 0.9),
             (2 * (3 * 4 + 0) + 1, 0, 0.9)]
        shape_b, _ = sym.canonical_shape(b, (1, 1))
        assert shape_a == shape_b

    def test_distinct_shapes_distinct_keys(self):
        sym = TorusSymmetry(4, 4)
        a, _ = sym.canonical_shape([(2 * 1 + 0, 1, 0.9)], (0, 0))
        b, _ = sym.canonical_shape([(2 * 1 + 1, 1, 0.9)], (0, 0))
        assert a != b


class TestCompiledPoly:
    def test_matches_eval_moments(self, h4):
        seed = multiply(OperatorPoly.annihilation(3),
                        _canonical_poly(((5, 1, 0.9), (12, 0, 0.8))))
        z = seed.strip_creations().prune(1e-14)
        for _ in range(2):
            z = (z + commutator_with_H(z, h4)).strip_creations().prune(1e-14)
        cp = _CompiledPoly(z)
        rng = np.random.default_rng(7)
        for trial in range(6):
            lam = rng.uniform(0.01, 0.3, 32)
            delta = np.zeros(32, dtype=np.int64)
            if trial % 2:
                delta[rng.integers(0, 32, 4)] = rng.integers(1, 3, 4)
            want = z.eval_moments(lam, delta if delta.any() else None)
            assert cp.eval_row(lam, delta) == pytest.approx(want, rel=1e-12)

    def test_constant_term(self):
        cp = _CompiledPoly(OperatorPoly.one())
        assert cp.eval_row(np.array([0.5]),
                           np.zeros(1, dtype=np.int64)) == 1.0


class TestGroupedEquivalence:
    def test_matches_reference_path_across_windows(self, h4):
        # shared cache across windows, nonzero prior shifts, both the
        # probe (first sight) and compiled (recurring) code paths fire
        sym = TorusSymmetry(4, 4)
        cache = SeriesTemplateCache()
        rng = np.random.default_rng(7)
        lam = rng.uniform(0.02, 0.15, 32)
        delta = np.zeros(32, dtype=np.int64)
        delta[[6, 21]] = [1, 2]
        grouped = DeselbyState(lam.copy(), delta.copy())
        reference = DeselbyState(lam.copy(), delta.copy())
        for _ in range(2):
            idx = rng.choice(32, 2, replace=False)
            omega = [Observation(int(i), int(rng.integers(0, 2)), 0.9)
                     for i in idx]
            pg, _ = assimilate_window(grouped, omega, h4, 0.25,
                                      prune_n=1, symmetry=sym,
                                      series_cache=cache)
            pr, _ = assimilate_window(reference, omega, h4, 0.25,
                                      prune_n=1)
            np.testing.assert_allclose(pg.lambdas, pr.lambdas,
                                       rtol=1e-9, atol=1e-14)
            assert (pg.deltas == pr.deltas).all()
            grouped, reference = pg, pr
        assert len(cache._entries) > 0

    def test_instant_update_ignores_symmetry(self, h4):
        sym = TorusSymmetry(4, 4)
        lam = np.full(32, 0.1)
        state = DeselbyState(lam, np.zeros(32, dtype=np.int64))
        omega = [Observation(5, 1, 0.9)]
        pg, _ = assimilate_window(state, omega, h4, 0.0, symmetry=sym)
        pr, _ = assimilate_window(state, omega, h4, 0.0)
        np.testing.assert_allclose(pg.lambdas, pr.lambdas, rtol=1e-12)

    def test_dimension_mismatch_rejected(self, h4):
        sym = TorusSymmetry(5, 5)
        state = DeselbyState(np.full(32, 0.1), np.zeros(32, dtype=np.int64))
        with pytest.raises(ValueError):
            assimilate_window(state, [Observation(0, 0, 0.9)], h4, 0.1,
                              symmetry=sym)
