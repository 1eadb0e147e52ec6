"""Tests for datasets, generators, CSV ingestion and M-tuple batch sampling."""

import math
import os
import tempfile
import unittest

import numpy as np

from mimo import data, models, _utils
from mimo.test import utils

# Upper 0.1% point of the chi-square distribution with 9 degrees of freedom, scipy.stats.chi2.ppf(0.999, 9) = 27.8772
# rounded down
CHI_SQUARE_9_CRITICAL = 27.877


class DataTest(unittest.TestCase):
    """Unit tests for public functions in 'mimo.data' module."""

    def test_dataset_validation(self):
        """Datasets should reject malformed arrays and labels."""
        task = models.Task.CLASSIFICATION
        with self.assertRaises(data.DataError):
            data.Dataset(np.zeros((3, 2)), np.eye(2)[[0, 1]], task)
        with self.assertRaises(data.DataError):
            data.Dataset(np.zeros((0, 2)), np.zeros((0, 2)), task)
        with self.assertRaises(data.DataError):
            data.Dataset([[math.nan, 0.0]], [[1.0, 0.0]], task)
        with self.assertRaises(data.DataError):
            data.Dataset([[0.0], [1.0]], [[1.0, 0.0], [0.5, 0.5]], task)
        regression = data.Dataset([[0.0], [1.0]], [2.0, 3.0], models.Task.REGRESSION)
        self.assertEqual(regression.labels.shape, (2, 1))
        self.assertEqual(len(regression), 2)
        with self.assertRaises(data.DataError):
            regression.class_indices()

    def test_dataset_take_and_subsample(self):
        """Selecting rows should keep order and subsampling should be deterministic."""
        dataset = utils.tiny_blobs(n=40)
        picked = dataset.take([3, 1])
        np.testing.assert_array_equal(picked.features, dataset.features[[3, 1]])
        self.assertIs(dataset.subsample(40), dataset)
        first = dataset.subsample(10, seed=3)
        second = dataset.subsample(10, seed=3)
        self.assertEqual(first.n, 10)
        np.testing.assert_array_equal(first.features, second.features)
        self.assertEqual(dataset.with_split(data.Split.TRAIN).split, data.Split.TRAIN)

    def test_noisy_regression_closed_form(self):
        """Without noise the target should follow the closed form."""
        targets = data.noisy_regression_target(np.array([0.0, 0.25]), np.zeros(2))
        self.assertEqual(targets[0], 0.0)
        self.assertAlmostEqual(targets[1], 0.55, delta=1e-12)

    def test_noisy_regression_generator(self):
        """The regression generator should be deterministic and respect its range."""
        first = data.gen_noisy_regression(64, 7)
        second = data.gen_noisy_regression(64, 7)
        np.testing.assert_array_equal(first.features, second.features)
        np.testing.assert_array_equal(first.labels, second.labels)
        self.assertEqual(first.task, models.Task.REGRESSION)
        self.assertTrue(np.all((first.features >= 0.0) & (first.features <= 0.5)))
        self.assertEqual(data.gen_noisy_regression(3000, 8, (-0.2, 0.7), split=data.Split.TEST).n, 3000)
        clean = data.gen_noisy_regression(20, 9, noise_sd=0.0)
        np.testing.assert_allclose(clean.labels[:, 0],
                                   data.noisy_regression_target(clean.features[:, 0], np.zeros(20)), atol=0)
        with self.assertRaises(data.DataError):
            data.gen_noisy_regression(10, 0, (0.5, 0.5))
        with self.assertRaises(data.DataError):
            data.gen_noisy_regression(10, 0, noise_sd=-1.0)

    def test_blobs_balanced(self):
        """Blob classes should differ in size by at most one."""
        dataset = data.gen_blobs(103, 4, 3, 3.0, 1)
        counts = np.bincount(dataset.class_indices(), minlength=4)
        self.assertLessEqual(counts.max() - counts.min(), 1)
        self.assertEqual(dataset.input_dim, 3)
        single = data.gen_blobs(5, 5, 2, 3.0, 2)
        np.testing.assert_array_equal(np.sort(single.class_indices()), np.arange(5))
        with self.assertRaises(data.DataError):
            data.gen_blobs(10, 1, 2, 3.0, 0)

    def test_blobs_deterministic(self):
        """The same seed should give the same blobs."""
        first = data.gen_blobs(50, 3, 2, 2.0, 4)
        second = data.gen_blobs(50, 3, 2, 2.0, 4)
        np.testing.assert_array_equal(first.features, second.features)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_blobs_separable(self):
        """Widely separated blobs should be classified almost perfectly by their nearest center."""
        dataset = data.gen_blobs(400, 4, 2, 50.0, 5)
        centers = data.blob_centers(4, 2, 50.0)
        distances = np.linalg.norm(dataset.features[:, None, :] - centers[None, :, :], axis=2)
        self.assertGreaterEqual(np.mean(np.argmin(distances, axis=1) == dataset.class_indices()), 0.99)
        line = data.blob_centers(3, 1, 2.0)
        np.testing.assert_allclose(line[:, 0], [-2.0, 0.0, 2.0])

    def test_load_csv(self):
        """A three-row file should load in row order with one-hot labels."""
        dataset = data.load_csv(utils.get_test_data_file("three_rows.csv"), ["x0", "x1"], "label",
                                models.Task.CLASSIFICATION)
        self.assertEqual(dataset.n, 3)
        np.testing.assert_array_equal(dataset.features, [[0.5, 1.5], [-1.25, 3.0], [2e-3, -4.0]])
        np.testing.assert_array_equal(dataset.labels, np.eye(3)[[2, 0, 1]])
        wider = data.load_csv(utils.get_test_data_file("three_rows.csv"), ["x1"], "label",
                              models.Task.CLASSIFICATION, classes=5)
        self.assertEqual(wider.output_dim, 5)
        regression = data.load_csv(utils.get_test_data_file("regression.csv"), ["x0"], "target",
                                   models.Task.REGRESSION)
        np.testing.assert_array_equal(regression.labels[:, 0], [0.1, 0.6, 0.45, 0.3])

    def test_load_csv_errors(self):
        """CSV problems should be reported with their row and column."""
        with self.assertRaises(data.DataError) as context:
            data.load_csv(utils.get_test_data_file("bad_cell.csv"), ["x0", "x1"], "label", models.Task.CLASSIFICATION)
        self.assertEqual(context.exception.row, 2)
        self.assertEqual(context.exception.column, "x1")
        self.assertIn("row 2", str(context.exception))
        with self.assertRaises(data.DataError) as context:
            data.load_csv(utils.get_test_data_file("three_rows.csv"), ["x0", "x2"], "label",
                          models.Task.CLASSIFICATION)
        self.assertEqual(context.exception.column, "x2")
        with self.assertRaises(data.DataError):
            data.load_csv(utils.get_test_data_file("empty.csv"), ["x0"], "label", models.Task.CLASSIFICATION)
        with self.assertRaises(data.DataError):
            data.load_csv(utils.get_test_data_file("header_only.csv"), ["x0"], "label", models.Task.CLASSIFICATION)
        with self.assertRaises(data.DataError) as context:
            data.load_csv(utils.get_test_data_file("regression.csv"), ["x0"], "target", models.Task.CLASSIFICATION)
        self.assertEqual(context.exception.row, 1)
        with self.assertRaises(data.DataError):
            data.load_csv(utils.get_test_data_file("three_rows.csv"), ["x0"], "label", models.Task.CLASSIFICATION,
                          classes=2)

    def test_csv_round_trip(self):
        """Writing a dataset to CSV and reading it back should give identical values."""
        dataset = utils.tiny_blobs(n=25)
        regression = data.gen_noisy_regression(25, 3)
        with tempfile.TemporaryDirectory() as directory:
            filename = os.path.join(directory, "blobs.csv")
            dataset.to_csv(filename)
            reloaded = data.load_csv(filename, ["x0", "x1"], "label", models.Task.CLASSIFICATION,
                                     classes=dataset.output_dim)
            filename = os.path.join(directory, "regression.csv")
            regression.to_csv(filename, label_column="y")
            reloaded_regression = data.load_csv(filename, ["x0"], "y", models.Task.REGRESSION)
        np.testing.assert_array_equal(reloaded.features, dataset.features)
        np.testing.assert_array_equal(reloaded.labels, dataset.labels)
        np.testing.assert_array_equal(reloaded_regression.features, regression.features)
        np.testing.assert_array_equal(reloaded_regression.labels, regression.labels)

    def test_data_config(self):
        """Data sections should validate, convert and produce fixed train and test sets."""
        config = data.DataConfig.from_dict({"generator": "blobs", "n_train": 30, "n_test": 20, "classes": 3})
        self.assertEqual(config.task, models.Task.CLASSIFICATION)
        self.assertEqual(config.outputs, 3)
        self.assertEqual(data.DataConfig.from_dict(config.to_dict()), config)
        np.testing.assert_array_equal(config.train_set().features, config.train_set().features)
        self.assertFalse(np.array_equal(config.train_set().features, config.train_set(replicate=1).features))
        self.assertFalse(np.array_equal(config.train_set(replicate=1).features,
                                        config.train_set(replicate=2).features))
        self.assertEqual(config.test_set().split, data.Split.TEST)
        with self.assertRaisesRegex(_utils.ConfigError, "data.classes"):
            data.DataConfig.from_dict({"generator": "blobs", "classes": 1})
        with self.assertRaisesRegex(_utils.ConfigError, "data.x_range"):
            data.DataConfig.from_dict({"x_range": [0.5, 0.1]})
        with self.assertRaisesRegex(_utils.ConfigError, "data.generator"):
            data.DataConfig.from_dict({"generator": "cifar"})
        with self.assertRaisesRegex(_utils.ConfigError, "data.train_path"):
            data.DataConfig.from_dict({"generator": "csv", "feature_columns": ["x0"]})
        with self.assertRaisesRegex(_utils.ConfigError, "data.shuffle"):
            data.DataConfig.from_dict({"shuffle": True})

    def test_data_config_csv(self):
        """CSV data sections should read files and bootstrap replicates."""
        config = data.DataConfig.from_dict({"generator": "csv",
                                            "train_path": utils.get_test_data_file("regression.csv"),
                                            "feature_columns": ["x0"], "label_column": "target",
                                            "task": "regression"})
        self.assertEqual(config.train_set().n, 4)
        resampled = config.train_set(replicate=0)
        self.assertEqual(resampled.n, 4)
        self.assertTrue(set(resampled.features[:, 0]) <= {0.0, 0.25, 0.5, 0.125})
        with self.assertLogs("mimo.data", level="WARNING"):
            self.assertEqual(config.test_set().split, data.Split.TEST)

    def test_sampling_config_validation(self):
        """Sampling sections should reject out-of-range values, naming the field."""
        with self.assertRaisesRegex(_utils.ConfigError, "sampling.input_repetition_probability"):
            data.SamplingConfig.from_dict({"input_repetition_probability": 1.3})
        with self.assertRaisesRegex(_utils.ConfigError, "sampling.batch_repetitions"):
            data.SamplingConfig.from_dict({"batch_repetitions": 0})
        with self.assertRaisesRegex(_utils.ConfigError, "sampling.batch_size"):
            data.SamplingConfig(batch_size=0).validate()
        config = data.SamplingConfig(16, 3, 0.5, 2, 9)
        self.assertEqual(data.SamplingConfig.from_dict(config.to_dict()), config)

    def test_batch_shapes(self):
        """All slots of a batch should have identical row counts."""
        dataset = utils.tiny_blobs(n=30)
        batch = data.sample_mimo_batch(dataset, data.SamplingConfig(8, 3, 0.3, 2, 0), np.random.default_rng(0))
        self.assertEqual(batch.ensemble_size, 3)
        self.assertEqual(batch.rows, 16)
        for m in range(3):
            self.assertEqual(batch.features[m].shape, (16, 2))
            self.assertEqual(batch.labels[m].shape, (16, 3))
            np.testing.assert_array_equal(batch.features[m], dataset.features[batch.indices[m]])
            np.testing.assert_array_equal(batch.labels[m], dataset.labels[batch.indices[m]])

    def test_full_repetition(self):
        """With repetition probability 1 every slot should copy slot 0."""
        dataset = utils.tiny_blobs(n=30)
        batch = data.sample_mimo_batch(dataset, data.SamplingConfig(20, 4, 1.0, 1, 0), np.random.default_rng(1))
        for m in range(1, 4):
            np.testing.assert_array_equal(batch.indices[m], batch.indices[0])
            np.testing.assert_array_equal(batch.features[m], batch.features[0])
            np.testing.assert_array_equal(batch.labels[m], batch.labels[0])

    def test_single_slot_uniform(self):
        """With M=1 and no repetition the batch should be a plain uniform draw."""
        dataset = utils.tiny_blobs(n=30)
        rng = np.random.default_rng(2)
        batch = data.sample_mimo_batch(dataset, data.SamplingConfig(12, 1, 0.0, 1, 0), rng)
        np.testing.assert_array_equal(batch.indices[0], np.random.default_rng(2).integers(0, 30, size=12))

    def test_repetition_fraction(self):
        """The fraction of rows where slot 1 equals slot 0 should be rho + (1 - rho) / N."""
        n = 1000
        dataset = data.Dataset(np.arange(n, dtype=np.float64).reshape(-1, 1), np.zeros((n, 1)),
                               models.Task.REGRESSION)
        sampler = data.MimoSampler(dataset, data.SamplingConfig(1000, 2, 0.6, 1, 3))
        matches = sum(int(np.sum(batch.indices[1] == batch.indices[0]))
                      for batch in (sampler.sample() for _ in range(100)))
        self.assertAlmostEqual(matches / 100000, 0.6 + 0.4 / n, delta=0.01)

    def test_marginal_preserved(self):
        """Every slot's marginal over dataset rows should stay uniform for any repetition probability."""
        n = 10
        dataset = data.Dataset(np.arange(n, dtype=np.float64).reshape(-1, 1), np.zeros((n, 1)),
                               models.Task.REGRESSION)
        for rho in (0.0, 0.6, 1.0):
            sampler = data.MimoSampler(dataset, data.SamplingConfig(1000, 3, rho, 1, 11))
            counts = np.zeros((3, n))
            for _ in range(100):
                batch = sampler.sample()
                for m in range(3):
                    counts[m] += np.bincount(batch.indices[m], minlength=n)
            expected = counts.sum(axis=1, keepdims=True) / n
            chi_square = ((counts - expected) ** 2 / expected).sum(axis=1)
            for m in range(3):
                with self.subTest(rho=rho, slot=m):
                    self.assertLess(chi_square[m], CHI_SQUARE_9_CRITICAL)

    def test_batch_repetition_multiplicity(self):
        """Batch repetition should repeat each drawn row contiguously exactly r times."""
        dataset = utils.tiny_blobs(n=30)
        single = data.sample_mimo_batch(dataset, data.SamplingConfig(10, 2, 0.4, 1, 0), np.random.default_rng(5))
        repeated = data.sample_mimo_batch(dataset, data.SamplingConfig(10, 2, 0.4, 3, 0), np.random.default_rng(5))
        np.testing.assert_array_equal(repeated.indices, np.repeat(single.indices, 3, axis=1))
        for m in range(2):
            np.testing.assert_array_equal(np.bincount(repeated.indices[m], minlength=30),
                                          3 * np.bincount(single.indices[m], minlength=30))

    def test_sampler_deterministic(self):
        """Samplers with the same seed should produce the same batches; clones should differ."""
        dataset = utils.tiny_blobs(n=30)
        config = data.SamplingConfig(8, 2, 0.2, 1, 4)
        first = data.MimoSampler(dataset, config)
        second = data.MimoSampler(dataset, config)
        for _ in range(5):
            np.testing.assert_array_equal(first.sample().indices, second.sample().indices)
        self.assertEqual(first.state(), second.state())
        clone = first.clone(1)
        self.assertNotEqual(clone.config.seed, config.seed)
        self.assertEqual(clone.config.seed, first.clone(1).config.seed)

    def test_data_error_pickles(self):
        """Data errors should keep their location through pickling."""
        error = data.DataError("bad value", row=3, column="x1")
        _, args = error.__reduce__()
        copy = data.DataError(*args)
        self.assertEqual(str(copy), str(error))
        self.assertEqual(str(error), "bad value (row 3, column 'x1')")


if __name__ == '__main__':
    unittest.main()
