"""Exact stochastic simulator: determinism, conservation, and statistics."""

import io
import json
import math

import numpy as np
import pytest

from fockabm.hamiltonian import ActionRule, BehaviorSpec, InteractionRule
from fockabm.worldsim import (WorldState, advance, observation_stream, observe,
                              sample_initial, species_major_order,
                              trajectory_stream, write_observation_record,
                              write_trajectory_record)

from _oracle import evolve, ground_vector


def death_spec(rate=0.5, n=1):
    return BehaviorSpec(n, [ActionRule(i, rate, ()) for i in range(n)])


def ring_spec(n=4, rate=1.0):
    return BehaviorSpec(n, [ActionRule(i, rate, ((i + 1) % n,))
                            for i in range(n)])


class TestDeterminism:
    def test_same_seed_same_trajectory(self):
        spec = ring_spec()
        for _ in range(2):
            runs = []
            for _rep in range(2):
                rng = trajectory_stream(42)
                w = sample_initial([2.0] * 4, rng)
                path = [w.counts.copy()]
                for _ in range(5):
                    w = advance(w, spec, w.time + 0.3, rng)
                    path.append(w.counts.copy())
                runs.append(path)
            for a, b in zip(*runs):
                assert np.array_equal(a, b)

    def test_streams_are_independent(self):
        a = trajectory_stream(7).random(4)
        b = observation_stream(7).random(4)
        assert not np.allclose(a, b)

    def test_observation_draws_deterministic(self):
        w = WorldState(np.array([5, 3, 0, 2], dtype=np.int64))
        draws = [observe(w, 0.5, 0.9, observation_stream(3))
                 for _ in range(2)]
        assert draws[0] == draws[1]


class TestDynamics:
    def test_initial_sample_statistics(self):
        rng = trajectory_stream(11)
        lam = 4.0
        samples = np.array([sample_initial([lam] * 50, rng).counts.mean()
                            for _ in range(40)])
        se = math.sqrt(lam / 50) / math.sqrt(40)
        assert abs(samples.mean() - lam) < 3 * se

    def test_move_only_conserves_total(self):
        spec = ring_spec()
        rng = trajectory_stream(13)
        w = sample_initial([3.0] * 4, rng)
        total = w.counts.sum()
        for _ in range(10):
            w = advance(w, spec, w.time + 0.5, rng)
            assert w.counts.sum() == total

    def test_absorbing_state_stays_put(self):
        spec = death_spec()
        w = WorldState(np.array([0], dtype=np.int64))
        w2 = advance(w, spec, 1.0, trajectory_stream(1))
        assert w2.counts[0] == 0
        assert w2.time == 1.0

    def test_time_must_advance(self):
        w = WorldState(np.array([1], dtype=np.int64), time=2.0)
        with pytest.raises(ValueError):
            advance(w, death_spec(), 1.0, trajectory_stream(1))

    def test_decay_mean(self):
        # n(t) averages n(0) e^(-rate t)
        spec = death_spec(rate=0.5)
        rng = trajectory_stream(17)
        n0, t, reps = 40, 1.0, 300
        finals = []
        for _ in range(reps):
            w = WorldState(np.array([n0], dtype=np.int64))
            finals.append(advance(w, spec, t, rng).counts[0])
        finals = np.array(finals)
        want = n0 * math.exp(-0.5 * t)
        se = finals.std(ddof=1) / math.sqrt(reps)
        assert abs(finals.mean() - want) < 4 * se

    def test_single_agent_survival_exponential(self):
        # one agent dying at rate r survives past t with probability e^(-rt)
        spec = death_spec(rate=0.3)
        rng = trajectory_stream(19)
        t, reps = 2.0, 1500
        survived = 0
        for _ in range(reps):
            w = WorldState(np.array([1], dtype=np.int64))
            if advance(w, spec, t, rng).counts[0] == 1:
                survived += 1
        p = math.exp(-0.3 * t)
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(survived / reps - p) < 4 * se

    def test_distribution_matches_master_equation(self):
        # birth-death occupation histogram vs dense evolution, TV < 0.01
        spec = BehaviorSpec(1, [ActionRule(0, 0.4, (0, 0)),
                                ActionRule(0, 0.6, ())])
        cap = 25
        p = evolve(spec, ground_vector([2.0], cap), 0.8, cap)
        rng = trajectory_stream(23)
        reps = 4000
        hist = np.zeros(cap)
        for _ in range(reps):
            w = sample_initial([2.0], rng)
            w = advance(w, spec, 0.8, rng)
            k = int(w.counts[0])
            if k < cap:
                hist[k] += 1
        hist /= reps
        tv = 0.5 * np.abs(hist - p).sum()
        assert tv < 0.02

    def test_predation_self_pair_rate(self):
        # a self-interaction at n = 1 has zero propensity: nothing happens
        spec = BehaviorSpec(1, interactions=[InteractionRule(0, 0, 5.0, ())])
        w = WorldState(np.array([1], dtype=np.int64))
        out = advance(w, spec, 10.0, trajectory_stream(29))
        assert out.counts[0] == 1


class TestObserve:
    def test_probabilities_validated(self):
        w = WorldState(np.array([1], dtype=np.int64))
        with pytest.raises(ValueError):
            observe(w, -0.1, 0.9, observation_stream(1))
        with pytest.raises(ValueError):
            observe(w, 0.5, 1.1, observation_stream(1))

    def test_zero_counts_are_reported(self):
        w = WorldState(np.zeros(20, dtype=np.int64))
        omega = observe(w, 1.0, 0.9, observation_stream(5))
        assert len(omega) == 20
        assert all(o.count == 0 for o in omega)

    def test_zero_detection_emits_nothing(self):
        w = WorldState(np.array([4, 4], dtype=np.int64))
        assert observe(w, 1.0, 0.0, observation_stream(5)) == []

    def test_expected_observation_count(self):
        w = WorldState(np.zeros(512, dtype=np.int64))
        rng = observation_stream(31)
        sizes = [len(observe(w, 0.02, 0.9, rng)) for _ in range(200)]
        want = 512 * 0.02
        se = math.sqrt(want) / math.sqrt(200)
        assert abs(np.mean(sizes) - want) < 4 * se

    def test_detection_is_binomial_thinning(self):
        w = WorldState(np.full(1000, 10, dtype=np.int64))
        omega = observe(w, 1.0, 0.3, observation_stream(37))
        counts = np.array([o.count for o in omega])
        assert abs(counts.mean() - 3.0) < 4 * counts.std(ddof=1) / math.sqrt(1000)

    def test_index_order_controls_draws(self):
        w = WorldState(np.array([5, 0], dtype=np.int64))
        a = observe(w, 1.0, 0.5, observation_stream(41), index_order=[0, 1])
        b = observe(w, 1.0, 0.5, observation_stream(41), index_order=[1, 0])
        assert {o.index for o in a} == {o.index for o in b} == {0, 1}
        assert [o.index for o in b] == [1, 0]

    def test_species_major_order(self):
        assert species_major_order(3) == [0, 2, 4, 1, 3, 5]


class TestRecords:
    def test_trajectory_round_trip(self):
        w = WorldState(np.array([1, 2], dtype=np.int64), time=0.5)
        buf = io.StringIO()
        write_trajectory_record(buf, w)
        rec = json.loads(buf.getvalue())
        assert rec == {"t": 0.5, "counts": [1, 2]}

    def test_observation_round_trip(self):
        from fockabm.assimilation import Observation
        buf = io.StringIO()
        write_observation_record(buf, 1.5, [Observation(3, 2, 0.9)])
        rec = json.loads(buf.getvalue())
        assert rec == {"t": 1.5, "obs": [{"index": 3, "m": 2, "r": 0.9}]}
