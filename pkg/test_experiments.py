"""
Desk-scale experiments. Everything except the mode-visiting checks is marked
slow; run them with ``pytest -m slow``.
"""

import numpy as np
import pytest

from baselines import em_fit, responsibilities
from experiments import (MixtureBenchmark, consistency_contrast, mode_visit_frequencies,
                         run_head_to_head)
from gibbs_chain import new_chain, run_anneal
from mml_coder import message_length
from models import Dataset, MixtureModel
from rng_streams import substream
from synthgen import GeneratorSpec, generate

SEEDS = [0, 1, 2, 3, 4]


def mirrored_pair():
    v = np.random.default_rng(8).normal(2.0, 0.5, 30)
    return Dataset.from_values(np.concatenate([v, -v]), range_mu=(-6, 6), range_sigma=6.0, eps=0.01)


def test_label_symmetric_modes_visited_evenly():
    result = mode_visit_frequencies(mirrored_pair(), n_sweeps=10000, burn_in=500, seed=5, em_restarts=20)
    assert result['sampler_low_first'] == pytest.approx(0.5, abs=0.05)
    assert len(result['em_modes']) == 20
    assert set(result['em_modes']) == {'low_first', 'high_first'}
    assert min(result['em_decisiveness']) > 0.95


def test_chain_without_relabelling_keeps_its_mode():
    result = mode_visit_frequencies(mirrored_pair(), n_sweeps=2000, burn_in=500, seed=5,
                                    em_restarts=1, relabel=False)
    assert result['sampler_low_first'] in (0.0, 1.0)


def test_protocol_overrides():
    benchmark = MixtureBenchmark({'sigma': 0.6, 'budget_seconds': 5.0})
    assert benchmark.protocol['sigma'] == 0.6
    assert benchmark.protocol['per_class'] == 500
    assert benchmark.schedule.block_count() == 528
    assert MixtureBenchmark.DEFAULT_PROTOCOL['sigma'] == 0.5


@pytest.mark.slow
def test_annealing_beats_em_search():
    summaries = run_head_to_head(SEEDS)
    shorter = sum(s['mce']['total_nits'] <= s['em_search']['total_nits'] for s in summaries)
    six = sum(s['mce']['k'] == 6 for s in summaries)
    assert shorter >= 4
    assert six >= 4


@pytest.mark.slow
def test_wider_classes_still_recovered():
    summaries = run_head_to_head(SEEDS, {'sigma': 0.6})
    recovered = sum(s['mce']['k'] == 6 and s['mce']['mu_error'] < 0.15 for s in summaries)
    no_worse = sum(s['mce']['mu_error'] <= s['em_search']['mu_error'] for s in summaries)
    assert recovered >= 3
    assert no_worse >= 3


@pytest.mark.slow
def test_likelihood_keeps_rising_while_length_bottoms_out():
    truth = MixtureModel([0.5, 0.5], [[-2.0], [2.0]], [[1.0], [1.0]])
    at_two = 0
    for seed in SEEDS:
        data = generate(GeneratorSpec('custom', per_class=500, seed=seed, custom=truth)).dataset
        table = consistency_contrast(data, range(1, 7), restarts=5, seed=seed)
        logliks = [table[k]['loglik'] for k in range(1, 7)]
        assert all(b > a for a, b in zip(logliks, logliks[1:]))
        lengths = {k: row['message_length'] for k, row in table.items()}
        at_two += min(lengths, key=lengths.get) == 2
    assert at_two >= 4


@pytest.mark.slow
def test_anneal_matches_em_restarts_at_fixed_k():
    wins = 0
    for seed in SEEDS:
        data = generate(GeneratorSpec('six-gauss', sigma=0.5, per_class=500, seed=seed)).dataset
        annealed = run_anneal(new_chain(data, 6, substream(seed, "anneal-run-0"), k_max=64, rule='fixed'), data)
        em_best = min(
            message_length(data, responsibilities(data, fit.model).harden(), fit.model, 64).total
            for fit in (em_fit(data, 6, seed * 100 + r) for r in range(10)))
        wins += annealed.best.length.total <= em_best
    assert wins >= 4
