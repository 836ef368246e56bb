"""Shifted-Poisson family: pmf, moments, creation action, observation posterior."""

import math

import numpy as np
import pytest

from fockabm.algebra import OperatorPoly, multiply
from fockabm.deselby import (DeselbyParams, apply_creation,
                             binomial_posterior_exact, mean, pmf, support_cap)

from _oracle import (annihilation_matrix, creation_matrix, ground_vector,
                     thinning_matrix)


class TestPmf:
    def test_poisson_at_zero_shift(self):
        assert pmf(DeselbyParams(1.0, 0), 0) == pytest.approx(math.exp(-1))

    def test_zero_below_shift(self):
        assert pmf(DeselbyParams(0.5, 1), 0) == 0.0
        assert pmf(DeselbyParams(2.0, 3), 2) == 0.0

    def test_definition_value(self):
        # (2)_1 * 0.5^1 * e^-0.5 / 2! = 0.5 e^-0.5
        assert pmf(DeselbyParams(0.5, 1), 2) == pytest.approx(
            0.5 * math.exp(-0.5))

    @pytest.mark.parametrize("lam", [0.0, 0.01, 0.5, 1.0, 5.0])
    @pytest.mark.parametrize("delta", range(6))
    def test_normalization(self, lam, delta):
        cap = support_cap(lam, delta) + 20
        total = sum(pmf(DeselbyParams(lam, delta), k) for k in range(cap + 1))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_falling_factorial_form(self):
        # agree with the literal (k)_delta lam^(k-delta) e^-lam / k! expression
        for lam in (0.3, 1.7):
            for delta in range(4):
                for k in range(delta, 12):
                    falling = 1
                    for j in range(delta):
                        falling *= k - j
                    want = (falling * lam ** (k - delta) * math.exp(-lam)
                            / math.factorial(k))
                    assert pmf(DeselbyParams(lam, delta), k) == pytest.approx(want)


class TestMoments:
    def test_poisson_mean(self):
        assert mean(DeselbyParams(1.0, 0)) == 1.0

    def test_shifted_mean_against_sum(self):
        p = DeselbyParams(0.5, 2)
        cap = support_cap(p.lam, p.delta) + 20
        numeric = sum(k * pmf(p, k) for k in range(cap + 1))
        assert mean(p) == pytest.approx(numeric, abs=1e-10)
        assert mean(p) == 2.5

    def test_point_mass(self):
        assert mean(DeselbyParams(0.0, 3)) == 3.0
        assert pmf(DeselbyParams(0.0, 3), 3) == pytest.approx(1.0)


class TestCreation:
    def test_increments_shift(self):
        assert apply_creation(DeselbyParams(1.0, 0)) == DeselbyParams(1.0, 1)
        assert apply_creation(DeselbyParams(0.5, 2)) == DeselbyParams(0.5, 3)

    def test_repeated_creation_matches_matrix(self):
        # k applications of the creation matrix on a Poisson vector reproduce
        # the shifted family's pmf after renormalization
        lam, cap = 0.8, 30
        v = ground_vector([lam], cap)
        adag = creation_matrix(cap)
        for k in range(1, 4):
            v = adag @ v
            p = DeselbyParams(lam, k)
            got = v / v.sum()
            want = np.array([pmf(p, n) for n in range(cap)])
            assert np.allclose(got[:-3], want[:-3], atol=1e-12)


class TestBinomialPosterior:
    def test_conjugate_closure_at_zero_shift(self):
        # prior Poisson(0.06), one sighting at 0.9 detection
        post = binomial_posterior_exact(DeselbyParams(0.06, 0), m=1, r=0.9)
        want = np.array([pmf(DeselbyParams(0.006, 1), k)
                         for k in range(len(post))])
        assert np.allclose(post, want, atol=1e-12)

    def test_uninformative_observation(self):
        p = DeselbyParams(0.7, 1)
        post = binomial_posterior_exact(p, m=0, r=0.0)
        want = np.array([pmf(p, k) for k in range(len(post))])
        assert np.allclose(post, want, atol=1e-12)

    def test_impossible_observation_rejected(self):
        with pytest.raises(ValueError):
            binomial_posterior_exact(DeselbyParams(1.0, 0), m=2, r=0.0)

    def test_matches_operator_pipeline(self):
        # normalized coefficients of a+^m a^m Lg applied to the prior state
        cap = 60
        for lam in (0.06, 0.5, 1.0):
            for delta in (0, 1, 2):
                for m in range(4):
                    for r in (0.5, 0.9):
                        prior = ground_vector([lam], cap, deltas=[delta])
                        op = (np.linalg.matrix_power(creation_matrix(cap), m)
                              @ np.linalg.matrix_power(annihilation_matrix(cap), m)
                              @ thinning_matrix(cap, 1.0 - r))
                        v = op @ prior
                        if v.sum() == 0:
                            continue
                        got = v / v.sum()
                        want = binomial_posterior_exact(
                            DeselbyParams(lam, delta), m, r, cap=cap - 1)
                        assert np.allclose(got, want, atol=1e-10), (lam, delta, m, r)

    def test_matches_symbolic_operator_expansion(self):
        # same check through the sparse algebra instead of dense matrices
        lam, delta, m, r = 1.0, 1, 2, 0.5
        cap = 60
        op = multiply(multiply(OperatorPoly.creation(0, m),
                               OperatorPoly.annihilation(0, m)),
                      OperatorPoly.thinning(0, 1.0 - r))
        # apply the polynomial to the prior coefficient vector directly
        prior = ground_vector([lam], cap, deltas=[delta])
        out = np.zeros(cap)
        for (cre, ann, thin), coeff in op.terms.items():
            vec = prior.copy()
            for i, s in thin:
                vec *= np.array([s ** n for n in range(cap)])
            for _i, e in ann:
                for _ in range(e):
                    vec = np.concatenate([(np.arange(1, cap) * vec[1:]), [0.0]])
            for _i, e in cre:
                for _ in range(e):
                    vec = np.concatenate([[0.0], vec[:-1]])
            out += coeff * vec
        got = out / out.sum()
        want = binomial_posterior_exact(DeselbyParams(lam, delta), m, r,
                                        cap=cap - 1)
        assert np.allclose(got, want, atol=1e-10)
