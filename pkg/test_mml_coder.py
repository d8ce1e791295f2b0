"""Tests for the two-part message length coder."""

import math

import numpy as np
import pytest

from errors import CoderError, MixtureInputError
from mml_coder import (KAPPA_2, MessageLength, class_nll_matrix, class_shares, derived_class_shares,
                       label_costs, length_constant, log_odds, message_length, normalized_posteriors,
                       part1_length, part2_length, raw_data_length, region_odds)
from models import Assignment, Dataset, MixtureModel, derive_model
from synthgen import GeneratorSpec, generate


def random_instance(rng, n=20, k=3, m=2):
    values = rng.normal(0, 2, size=(n, m))
    data = Dataset.from_values(values, range_mu=(-20, 20), range_sigma=20.0, eps=0.01)
    assignment = Assignment(rng.integers(0, k, size=n), k)
    return data, assignment, derive_model(data, assignment, rng)


class TestPart1:

    def test_single_class_single_option(self):
        data = Dataset.from_values(np.linspace(-1, 1, 10), range_mu=(-5, 5), range_sigma=5.0, eps=0.1)
        model = MixtureModel([1.0], [[0.0]], [[0.5]])
        expected = (math.log(10 * 5) + 0.5 * math.log(2) + math.log(10) - 2 * math.log(0.5)
                    + 1 + math.log(KAPPA_2))
        assert part1_length(model, [10], data, k_max=1) == pytest.approx(expected, rel=1e-12)

    def test_formula_oracle(self):
        data = Dataset.from_values(np.linspace(0.5, 9.5, 1000), range_mu=(0, 10), range_sigma=5.0, eps=0.01)
        model = MixtureModel([0.5, 0.5], [[3.0], [7.0]], [[1.0], [1.0]])
        kappa = 5 / (36 * math.sqrt(3))
        expected = (math.log(20)
                    + 0.5 * math.log(1000 / 12 + 1) - 0.5 * 2 * math.log(0.5)
                    + 2 * (math.log(50) + 0.5 * math.log(2) + math.log(500) + 1 + math.log(kappa)))
        assert part1_length(model, [500, 500], data, k_max=20) == pytest.approx(expected, rel=1e-12)

    def test_doubling_mean_range(self):
        values = np.linspace(0, 1, 30)
        narrow = Dataset.from_values(values, range_mu=(-1, 2), range_sigma=3.0, eps=0.01)
        wide = Dataset.from_values(values, range_mu=(-1, 5), range_sigma=3.0, eps=0.01)
        model = MixtureModel([0.5, 0.5], [[0.2], [0.8]], [[0.1], [0.1]])
        diff = part1_length(model, [15, 15], wide, 4) - part1_length(model, [15, 15], narrow, 4)
        assert diff == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_outside_priors_is_infinite(self):
        data = Dataset.from_values(np.linspace(0, 1, 10), range_mu=(0, 1), range_sigma=1.0, eps=0.01)
        assert part1_length(MixtureModel([1.0], [[1.5]], [[0.3]]), [10], data, 1) == math.inf
        assert part1_length(MixtureModel([1.0], [[0.5]], [[1.5]]), [10], data, 1) == math.inf

    def test_duplicate_class_costs_more(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 200))
            data = Dataset.from_values(rng.normal(size=n), range_mu=(-10, 10), range_sigma=5.0, eps=0.01)
            mu, sigma = float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 4))
            one = part1_length(MixtureModel([1.0], [[mu]], [[sigma]]), [n], data, 10)
            half = n // 2
            two = part1_length(MixtureModel([0.5, 0.5], [[mu], [mu]], [[sigma], [sigma]]),
                               [half, n - half], data, 10)
            assert two > one

    def test_count_mismatch(self):
        data = Dataset.from_values(np.linspace(0, 1, 10))
        model = MixtureModel([1.0], [[0.5]], [[0.3]])
        with pytest.raises(CoderError):
            part1_length(model, [9], data, 1)
        with pytest.raises(CoderError):
            part1_length(model, [5, 5], data, 1)


class TestPart2:

    def test_single_observation(self):
        data = Dataset([[0.0]], (-1.0, 1.0), 5.0, 1.0)
        model = MixtureModel([1.0], [[0.0]], [[1.0]])
        assert part2_length(data, Assignment([0], 1), model) == pytest.approx(0.91894, abs=1e-5)

    def test_single_class_has_no_label_cost(self):
        np.testing.assert_allclose(label_costs(MixtureModel([1.0], [[0.0]], [[1.0]])), [0.0])

    def test_relabelling(self, rng):
        for _ in range(100):
            data, a, model = random_instance(rng)
            perm = rng.permutation(model.k)
            assert part2_length(data, a.relabel(perm), model.relabel(perm)) == pytest.approx(
                part2_length(data, a, model), rel=1e-12)

    def test_better_class_never_lengthens(self, rng):
        for _ in range(100):
            data, a, model = random_instance(rng)
            deltas = label_costs(model)[None, :] + class_nll_matrix(data.values, model, data.eps)
            i = int(rng.integers(data.n_obs))
            best = int(np.argmin(deltas[i]))
            labels = a.labels.copy()
            labels[i] = best
            assert part2_length(data, Assignment(labels, a.k), model) <= part2_length(data, a, model) + 1e-9


class TestMessageLength:

    def test_total_is_sum(self, rng):
        for _ in range(100):
            data, a, model = random_instance(rng)
            length = message_length(data, a, model, 8)
            assert length.total == length.part1 + length.part2

    def test_relabelling_and_observation_order(self, rng):
        for _ in range(100):
            data, a, model = random_instance(rng)
            base = message_length(data, a, model, 8).total
            perm = rng.permutation(model.k)
            assert message_length(data, a.relabel(perm), model.relabel(perm), 8).total == pytest.approx(base, rel=1e-12)
            order = rng.permutation(data.n_obs)
            shuffled = Dataset(data.values[order], data.range_mu, data.range_sigma, data.eps)
            assert message_length(shuffled, Assignment(a.labels[order], a.k), model, 8).total == pytest.approx(base, rel=1e-12)

    def test_six_gauss_order_of_magnitude(self):
        generated = generate(GeneratorSpec('six-gauss', sigma=0.5, per_class=500, seed=1))
        a = Assignment(generated.labels, 6)
        length = message_length(generated.dataset, a, generated.truth, 64)
        assert 1e4 < length.total < 2e5
        assert raw_data_length(generated.dataset) > length.total

    def test_from_parts(self):
        assert MessageLength.from_parts(1.5, 2.0) == MessageLength(1.5, 2.0, 3.5)
        assert not MessageLength.from_parts(math.inf, 2.0).is_finite


class TestClassShares:

    def test_shares_add_up_to_total(self, rng):
        for k in (1, 2, 4):
            data, assignment, model = random_instance(rng, n=40, k=k)
            counts = assignment.counts()
            assert np.all(counts > 0)
            sums = np.stack([data.values[assignment.labels == j].sum(axis=0) for j in range(k)])
            sumsqs = np.stack([(data.values[assignment.labels == j] ** 2).sum(axis=0) for j in range(k)])
            shares = derived_class_shares(counts, sums, sumsqs, data, k)
            total = message_length(data, assignment, model, 10).total
            assert shares.sum() + length_constant(data.n_obs, k, 10) == pytest.approx(total, rel=1e-10)

    def test_empty_class_share_uses_model_parameters(self, rng):
        data, _, _ = random_instance(rng, n=30, k=2)
        assignment = Assignment(np.zeros(30, dtype=int), 3)
        model = derive_model(data, assignment, rng)
        scatter = np.zeros((3, data.n_attrs))
        scatter[0] = ((data.values - model.mu[0]) ** 2).sum(axis=0)
        shares = class_shares(assignment.counts(), model.mu, model.sigma, scatter, data, 3)
        total = message_length(data, assignment, model, 3).total
        assert shares.sum() + length_constant(data.n_obs, 3, 3) == pytest.approx(total, rel=1e-10)

    def test_outside_priors_is_infinite(self):
        data = Dataset.from_values([0.0, 1.0, 2.0], range_mu=(-1, 5), range_sigma=2.0, eps=0.01)
        shares = class_shares([2, 1], np.array([[0.5], [9.0]]), np.array([[0.7], [0.01]]),
                               np.array([[0.5], [0.0]]), data, 2)
        assert math.isfinite(shares[0])
        assert shares[1] == math.inf


class TestNormalizedPosteriors:

    def test_worked_example(self):
        np.testing.assert_allclose(normalized_posteriors([200, 200.5]), [0.6225, 0.3775], atol=5e-4)

    def test_symmetric(self):
        np.testing.assert_allclose(normalized_posteriors([7.0, 7.0, 7.0]), [1 / 3] * 3, atol=1e-15)

    def test_spread(self):
        np.testing.assert_allclose(normalized_posteriors([100, 105, 110]),
                                   [0.993262, 0.006693, 0.000045], atol=1e-6)

    def test_normalized_and_shift_invariant(self, rng):
        for _ in range(100):
            lengths = rng.uniform(0, 5e4, size=int(rng.integers(1, 10)))
            p = normalized_posteriors(lengths)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(normalized_posteriors(lengths + rng.uniform(-1e3, 1e3)), p,
                                       rtol=1e-9, atol=1e-300)

    def test_errors(self):
        with pytest.raises(MixtureInputError):
            normalized_posteriors([])
        with pytest.raises(MixtureInputError):
            normalized_posteriors([1.0, math.inf])


def test_log_odds():
    assert log_odds(57952.0, 58031.3) == pytest.approx(79.3)


class TestRegionOdds:

    def test_neighbour_odds(self, univariate_sample):
        odds = region_odds(univariate_sample)
        assert 10 <= odds.nearest() <= 200
        assert odds.largest() > 1e3
        assert len(odds.available()) == 8

    def test_mean_axis_symmetry(self, univariate_sample):
        odds = region_odds(univariate_sample)
        assert odds.odds[(-1, 0)] == pytest.approx(odds.odds[(1, 0)], rel=1e-6)

    def test_neighbour_outside_priors(self):
        values = np.random.default_rng(2).normal(0, 1, 100)
        sample = Dataset.from_values(values, range_mu=(values.mean() - 0.01, 5.0), range_sigma=5.0)
        odds = region_odds(sample)
        assert odds.odds[(-1, 0)] is None
        assert odds.odds[(1, 0)] is not None

    def test_needs_univariate(self, small_2d):
        with pytest.raises(MixtureInputError):
            region_odds(small_2d)
