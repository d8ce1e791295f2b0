"""Tests for the synthetic data generators."""

import numpy as np
import pytest

import data_io
from errors import MixtureInputError
from models import MixtureModel
from synthgen import GeneratorSpec, class_sizes, generate, generator_model, parameter_error


class TestGenerate:

    def test_six_gauss_shape(self):
        generated = generate(GeneratorSpec('six-gauss', sigma=0.5, per_class=500, seed=7))
        assert generated.dataset.values.shape == (3000, 6)
        assert generated.labels.shape == (3000,)
        assert np.bincount(generated.labels).tolist() == [500] * 6

    def test_six_gauss_means(self):
        generated = generate(GeneratorSpec('six-gauss', sigma=0.5, per_class=500, seed=7))
        bound = 3 * 0.5 / np.sqrt(500)
        for i in range(6):
            rows = generated.dataset.values[generated.labels == i]
            assert rows[:, i].mean() == pytest.approx(1.0, abs=bound)
            others = np.delete(rows, i, axis=1)
            assert np.all(np.abs(others.mean(axis=0)) <= 1.5 * bound)

    def test_two_gauss_2d(self):
        generated = generate(GeneratorSpec('two-gauss-2d', per_class=500, seed=1))
        assert generated.dataset.values.shape == (1000, 2)
        np.testing.assert_allclose(generated.truth.mu, [[1.0, 0.0], [0.0, 1.0]])

    def test_univariate(self):
        generated = generate(GeneratorSpec('univariate', sigma=1.0, per_class=500, seed=3))
        values = generated.dataset.values[:, 0]
        assert values.shape == (500,)
        assert abs(values.mean()) < 3 / np.sqrt(500)

    def test_custom_uses_weights(self):
        custom = MixtureModel([0.25, 0.75], [[-2.0], [2.0]], [[0.5], [0.5]])
        generated = generate(GeneratorSpec('custom', per_class=100, seed=0, custom=custom))
        assert np.bincount(generated.labels).tolist() == [50, 150]
        np.testing.assert_array_equal(class_sizes(custom, 100), [50, 150])

    def test_same_seed_same_csv(self, tmp_path):
        spec = GeneratorSpec('six-gauss', per_class=50, seed=7)
        first = data_io.write_dataset(generate(spec).dataset, tmp_path / 'a.csv')
        second = data_io.write_dataset(generate(spec).dataset, tmp_path / 'b.csv')
        assert first.read_bytes() == second.read_bytes()

    def test_different_seeds_differ(self):
        a = generate(GeneratorSpec('univariate', per_class=20, seed=1)).dataset.values
        b = generate(GeneratorSpec('univariate', per_class=20, seed=2)).dataset.values
        assert not np.array_equal(a, b)

    def test_csv_round_trip(self, tmp_path):
        dataset = generate(GeneratorSpec('two-gauss-2d', per_class=100, seed=4)).dataset
        path = data_io.write_dataset(dataset, tmp_path / 'd.csv')
        again = data_io.read_dataset(path)
        np.testing.assert_array_equal(again.values, dataset.values)
        assert again.names == dataset.names

    @pytest.mark.parametrize('kwargs', [
        {'kind': 'three-gauss'},
        {'kind': 'six-gauss', 'per_class': 0},
        {'kind': 'six-gauss', 'sigma': 0.0},
        {'kind': 'custom'},
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(MixtureInputError):
            GeneratorSpec(**kwargs)


class TestParameterError:

    def test_truth_has_no_error(self):
        truth = generator_model(GeneratorSpec('six-gauss'))
        assert parameter_error(truth, truth.mu) == 0.0

    def test_order_does_not_matter(self):
        truth = generator_model(GeneratorSpec('six-gauss'))
        shuffled = truth.relabel([3, 5, 0, 1, 4, 2])
        assert parameter_error(shuffled, truth.mu) == pytest.approx(0.0)

    def test_offset(self):
        model = MixtureModel([0.5, 0.5], [[0.1, 0.0], [0.0, 1.1]], [[1.0, 1.0], [1.0, 1.0]])
        assert parameter_error(model, [[0.0, 1.0], [0.0, 0.0]]) == pytest.approx(0.05)

    def test_attribute_mismatch(self):
        model = MixtureModel([1.0], [[0.0, 0.0]], [[1.0, 1.0]])
        with pytest.raises(MixtureInputError):
            parameter_error(model, [[0.0]])
