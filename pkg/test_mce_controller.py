"""Tests for the multiple-chain ensemble and the annealing search."""

from collections import Counter

import numpy as np
import pytest

from errors import ConfigError, MixtureInputError
from gibbs_chain import AnnealSchedule
from mce_controller import (MCEConfig, anneal_search, estimate_all, init_ensemble, jump, mce_run,
                            run_segment)
from synthgen import GeneratorSpec, generate

QUICK = MCEConfig(burn_in=20, samples=60, segment=10, seed=5)


@pytest.fixture
def one_class():
    return generate(GeneratorSpec('univariate', sigma=1.0, per_class=150, seed=21)).dataset


class TestInitEnsemble:

    def test_single_chain(self, one_class):
        ensemble = init_ensemble(one_class, 1, 1, QUICK)
        assert ensemble.ks == [1]

    def test_one_chain_per_k(self, one_class):
        ensemble = init_ensemble(one_class, 2, 5, QUICK)
        assert ensemble.ks == [2, 3, 4, 5]
        draws = [chain.rng.random() for chain in ensemble.chains.values()]
        assert len(set(draws)) == 4

    def test_same_seed_same_start(self, one_class):
        first = init_ensemble(one_class, 1, 3, QUICK)
        second = init_ensemble(one_class, 1, 3, QUICK)
        for k in first.ks:
            np.testing.assert_array_equal(first.chains[k].assignment.labels, second.chains[k].assignment.labels)

    def test_invalid_range(self, one_class):
        with pytest.raises(MixtureInputError):
            init_ensemble(one_class, 3, 2, QUICK)
        with pytest.raises(MixtureInputError):
            init_ensemble(one_class, 0, 2, QUICK)


class TestEstimateAll:

    def test_single_chain(self, one_class):
        ensemble = init_ensemble(one_class, 2, 2, QUICK)
        assert estimate_all(ensemble, one_class) == {2: 1.0}
        assert ensemble.chains[2].sweep_count == QUICK.burn_in + QUICK.samples

    def test_one_class_data_prefers_one_class(self, one_class):
        ensemble = init_ensemble(one_class, 1, 6, QUICK)
        for k in range(2, 6):
            del ensemble.chains[k]
            del ensemble.traces[k]
        probs = estimate_all(ensemble, one_class)
        assert set(probs) == {1, 6}
        assert probs[1] > probs[6]

    def test_reproducible(self, one_class):
        first = estimate_all(init_ensemble(one_class, 1, 3, QUICK), one_class)
        second = estimate_all(init_ensemble(one_class, 1, 3, QUICK), one_class)
        assert first == second

    def test_threads_give_same_result(self, one_class):
        serial = estimate_all(init_ensemble(one_class, 1, 3, QUICK), one_class)
        threaded_config = MCEConfig(QUICK.burn_in, QUICK.samples, QUICK.segment, QUICK.seed, workers=3)
        threaded = estimate_all(init_ensemble(one_class, 1, 3, threaded_config), one_class)
        assert serial == threaded

    def test_burn_in_happens_once(self, one_class):
        ensemble = init_ensemble(one_class, 1, 2, QUICK)
        estimate_all(ensemble, one_class)
        estimate_all(ensemble, one_class)
        assert ensemble.chains[2].sweep_count == QUICK.burn_in + 2 * QUICK.samples
        assert len(ensemble.traces[2]) == 2 * QUICK.samples


class TestJump:

    def test_certain(self):
        rng = np.random.default_rng(0)
        assert {jump({1: 1.0, 2: 0.0, 3: 0.0}, rng) for _ in range(1000)} == {1}

    def test_even(self):
        rng = np.random.default_rng(1)
        counts = Counter(jump({2: 0.5, 3: 0.5}, rng) for _ in range(10000))
        assert abs(counts[2] - 5000) <= 150

    def test_three_to_one(self):
        rng = np.random.default_rng(2)
        counts = Counter(jump({2: 0.75, 3: 0.25}, rng) for _ in range(10000))
        assert abs(counts[2] - 7500) <= 130


class TestMCERun:

    def test_degenerate_range_is_one_chain(self, one_class):
        result = mce_run(one_class, 2, 2, QUICK, total_segments=4)
        assert result.probabilities == {2: 1.0}
        assert result.visits == {2: 4}
        assert len(result.trace) == QUICK.samples + 4 * QUICK.segment
        assert result.ensemble.chains[2].sweep_count == QUICK.burn_in + QUICK.samples + 4 * QUICK.segment

    def test_best_is_shortest_sample(self, one_class):
        result = mce_run(one_class, 1, 3, QUICK, total_segments=6)
        assert result.best.length.total == pytest.approx(min(s.total_nits for s in result.trace))
        assert sum(result.visits.values()) == 6
        assert sum(result.probabilities.values()) == pytest.approx(1.0)

    def test_reproducible(self, one_class):
        first = mce_run(one_class, 1, 2, QUICK, total_segments=5)
        second = mce_run(one_class, 1, 2, QUICK, total_segments=5)
        assert first.trace == second.trace
        assert first.probabilities == second.probabilities

    def test_needs_a_segment(self, one_class):
        with pytest.raises(MixtureInputError):
            mce_run(one_class, 1, 2, QUICK, total_segments=0)

    @pytest.mark.slow
    def test_visits_follow_probabilities(self, two_blobs):
        config = MCEConfig(burn_in=200, samples=500, segment=20, seed=3)
        result = mce_run(two_blobs, 2, 3, config, total_segments=2000)
        for k, p in result.probabilities.items():
            assert result.visits[k] / 2000 == pytest.approx(p, abs=0.05)


class TestRunSegment:

    def test_only_the_active_chain_moves(self, one_class):
        ensemble = init_ensemble(one_class, 1, 3, QUICK)
        probs = estimate_all(ensemble, one_class)
        before = {k: (chain, chain.assignment.labels.copy(), chain.model.mu.copy(), chain.model.sigma.copy(),
                      chain.sweep_count, chain.rng.bit_generator.state, len(ensemble.traces[k]))
                  for k, chain in ensemble.chains.items()}
        _, segment = run_segment(ensemble, one_class, probs)
        active = ensemble.active_k
        assert len(segment) == QUICK.segment
        assert ensemble.chains[active].sweep_count == before[active][4] + QUICK.segment
        for k in ensemble.ks:
            if k == active:
                continue
            chain, labels, mu, sigma, sweeps, rng_state, n_trace = before[k]
            assert ensemble.chains[k] is chain
            np.testing.assert_array_equal(chain.assignment.labels, labels)
            np.testing.assert_array_equal(chain.model.mu, mu)
            np.testing.assert_array_equal(chain.model.sigma, sigma)
            assert chain.sweep_count == sweeps
            assert chain.rng.bit_generator.state == rng_state
            assert len(ensemble.traces[k]) == n_trace


class TestAnnealSearch:

    def test_runs_until_budget(self, two_blobs):
        schedule = AnnealSchedule(t0=1.0, cool=0.5, iters_per_temp=2, t_min=0.2)
        result = anneal_search(two_blobs, 1, 3, schedule, budget_seconds=0.5, seed=4)
        assert len(result.runs) >= 1
        assert all(1 <= run['k'] <= 3 for run in result.runs)
        assert result.best.length.total == pytest.approx(min(run['total_nits'] for run in result.runs))

    def test_bad_budget(self, two_blobs):
        with pytest.raises(ConfigError):
            anneal_search(two_blobs, 1, 3, AnnealSchedule(), budget_seconds=0, seed=0)


def test_config_validation():
    with pytest.raises(ConfigError):
        MCEConfig(samples=0)
    with pytest.raises(ConfigError):
        MCEConfig(workers=0)
    with pytest.raises(ConfigError):
        MCEConfig(rule='greedy')
    settings = {'burn_in': 1, 'samples': 2, 'segment': 3, 'workers': 1, 'sweep_rule': 'fixed'}
    config = MCEConfig.from_settings(settings, seed=9)
    assert (config.seed, config.rule) == (9, 'fixed')
