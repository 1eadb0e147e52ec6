"""Tests for the diversity, invariance, separation, bias-variance, metric and sparsity analyses."""

import dataclasses
import itertools
import math
import unittest

import numpy as np

from mimo import analysis, data, models, training
from mimo.test import utils


def _blobs_setup(ensemble_size=2, steps=10):
    """A small, fast classification setup."""
    return training.TrainingSetup(
        utils.blobs_config(),
        models.NetworkConfig(ensemble_size, 2, (6,), 3, models.Task.CLASSIFICATION),
        utils.sampling_config(ensemble_size),
        training.OptimizerConfig(learning_rate=0.05, steps=steps))


def _regression_setup(ensemble_size=1, steps=20):
    """A small, fast regression setup."""
    return training.TrainingSetup(
        data.DataConfig(n_train=16, n_test=50),
        models.NetworkConfig(ensemble_size, 1, (8,), 1, models.Task.REGRESSION),
        utils.sampling_config(ensemble_size),
        training.OptimizerConfig(learning_rate=0.05, steps=steps))


def _duplicate_heads(net):
    """Copy head 0's output weights to every head."""
    width = net.config.output_dim
    weights = np.array(net["head.weight"])
    bias = np.array(net["head.bias"])
    for m in range(1, net.config.heads):
        weights[:, m * width:(m + 1) * width] = weights[:, :width]
        bias[m * width:(m + 1) * width] = bias[:width]
    return net.replace({"head.weight": weights, "head.bias": bias})


def _ignore_companions(net):
    """Zero the first-layer rows of every slot but slot 0."""
    weights = np.array(net["dense_0.weight"])
    weights[net.config.input_dim:, :] = 0.0
    return net.replace({"dense_0.weight": weights})


class AnalysisTest(unittest.TestCase):
    """Unit tests for public functions in 'mimo.analysis' module."""
    # pylint: disable=too-many-public-methods

    def test_disagreement(self):
        """Disagreement should indicate differing argmax classes."""
        self.assertEqual(analysis.disagreement([0.3, 0.7], [0.3, 0.7]), 0.0)
        self.assertEqual(analysis.disagreement([0.9, 0.1], [0.2, 0.8]), 1.0)
        self.assertEqual(analysis.disagreement([0.55, 0.45], [0.9, 0.1]), 0.0)
        self.assertEqual(analysis.disagreement([[0.9, 0.1], [0.9, 0.1]], [[0.2, 0.8], [0.6, 0.4]]), 0.5)
        with self.assertRaises(analysis.AnalysisError):
            analysis.disagreement([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_kl_divergence(self):
        """KL divergence should follow its closed forms and treat 0 log 0 as 0."""
        self.assertEqual(analysis.kl_divergence([0.25, 0.75], [0.25, 0.75]), 0.0)
        self.assertAlmostEqual(analysis.kl_divergence([1.0, 0.0], [0.5, 0.5]), math.log(2.0), delta=1e-12)
        self.assertTrue(math.isfinite(analysis.kl_divergence([0.5, 0.5], [1.0, 0.0])))

    def test_kl_nonnegative(self):
        """KL divergence should be nonnegative on random distribution pairs."""
        rng = np.random.default_rng(0)
        first = utils.random_probabilities(rng, 10000, 4)
        second = utils.random_probabilities(rng, 10000, 4)
        for p, q in zip(first, second):
            self.assertGreaterEqual(analysis.kl_divergence(p, q), 0.0)

    def test_cosine_similarity(self):
        """Cosine similarity should follow its closed forms and reject zero vectors."""
        self.assertAlmostEqual(analysis.cosine_similarity([0.2, 0.8], [0.2, 0.8]), 1.0, delta=1e-12)
        self.assertEqual(analysis.cosine_similarity([1.0, 0.0], [0.0, 1.0]), 0.0)
        self.assertAlmostEqual(analysis.cosine_similarity([0.5, 0.5], [1.0, 0.0]), 1.0 / math.sqrt(2.0), delta=1e-12)
        with self.assertRaises(analysis.AnalysisError):
            analysis.cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_self_similarity(self):
        """Every distribution should be at distance 0/0 and similarity 1 from itself."""
        rng = np.random.default_rng(1)
        for p in utils.random_probabilities(rng, 10000, 5):
            self.assertEqual(analysis.disagreement(p, p), 0.0)
            self.assertEqual(analysis.kl_divergence(p, p), 0.0)
            self.assertAlmostEqual(analysis.cosine_similarity(p, p), 1.0, delta=1e-12)

    def test_similarity_rejects_regression(self):
        """Similarity measures only apply to class probabilities."""
        prediction = models.PredictiveDistribution(models.Task.REGRESSION, [[0.3]])
        with self.assertRaises(analysis.AnalysisError):
            analysis.kl_divergence(prediction, prediction)

    def test_pairwise_diversity_duplicate_heads(self):
        """A network whose heads share weights should show no diversity."""
        net = _duplicate_heads(utils.small_network(ensemble_size=3))
        report = analysis.pairwise_diversity(net, utils.tiny_blobs())
        self.assertEqual(report.means[analysis.Metric.DISAGREEMENT], 0.0)
        self.assertAlmostEqual(report.means[analysis.Metric.KL], 0.0, delta=1e-12)
        self.assertAlmostEqual(report.means[analysis.Metric.COSINE], 1.0, delta=1e-12)

    def test_pairwise_diversity_matrices(self):
        """Diversity matrices should be symmetric with a neutral diagonal."""
        report = analysis.pairwise_diversity(utils.small_network(ensemble_size=3), utils.tiny_blobs())
        self.assertEqual(report.heads, 3)
        self.assertEqual(report.examples, 30)
        for metric, matrix in report.matrices.items():
            np.testing.assert_array_equal(matrix, matrix.T)
            np.testing.assert_array_equal(np.diag(matrix), [1.0 if metric == analysis.Metric.COSINE else 0.0] * 3)
        self.assertGreater(report.means[analysis.Metric.KL], 0.0)
        self.assertTrue(0.0 <= report.means[analysis.Metric.DISAGREEMENT] <= 1.0)
        frame = report.to_frame()
        self.assertEqual(list(frame.columns), ["metric", "head_a", "head_b", "value"])
        self.assertEqual(len(frame), 9)
        single = analysis.pairwise_diversity(utils.small_network(ensemble_size=3), utils.tiny_blobs(), "kl")
        self.assertEqual(list(single.means), [analysis.Metric.KL])

    def test_pairwise_diversity_requirements(self):
        """Diversity needs at least two classification heads."""
        with self.assertRaises(analysis.AnalysisError):
            analysis.pairwise_diversity(utils.small_network(ensemble_size=1), utils.tiny_blobs())
        with self.assertRaises(analysis.AnalysisError):
            analysis.pairwise_diversity(utils.small_network(ensemble_size=2), utils.tiny_blobs(), "entropy")
        net = utils.small_network(ensemble_size=2, task=models.Task.REGRESSION, output_dim=1, input_dim=1)
        with self.assertRaises(analysis.AnalysisError):
            analysis.pairwise_diversity(net, data.gen_noisy_regression(10, 0))

    def test_invariance_structural(self):
        """A head that ignores its companions should be perfectly invariant."""
        net = _ignore_companions(utils.small_network(ensemble_size=3))
        report = analysis.invariance(net, [utils.tiny_blobs(split=data.Split.TRAIN), utils.tiny_blobs(seed=1)])
        self.assertEqual(set(report.values), {"train", "test"})
        for measures in report.values.values():
            self.assertEqual(measures[analysis.Metric.DISAGREEMENT], 0.0)
            self.assertAlmostEqual(measures[analysis.Metric.KL], 0.0, delta=1e-12)
            self.assertAlmostEqual(measures[analysis.Metric.COSINE], 1.0, delta=1e-12)
        self.assertEqual(report.resamples, 8)
        self.assertEqual(len(report.to_frame()), 6)

    def test_invariance_untrained(self):
        """At random initialization head 0 should depend on its companions."""
        report = analysis.invariance(utils.small_network(ensemble_size=3), utils.tiny_blobs(n=100), resamples=4)
        values = report.values["test"]
        self.assertGreater(values[analysis.Metric.KL], 0.0)
        self.assertGreater(values[analysis.Metric.DISAGREEMENT], 0.0)
        self.assertLess(values[analysis.Metric.COSINE], 1.0)

    def test_invariance_deterministic(self):
        """Invariance should depend only on the seed."""
        net = utils.small_network(ensemble_size=2)
        first = analysis.invariance(net, utils.tiny_blobs(), seed=3)
        second = analysis.invariance(net, utils.tiny_blobs(), seed=3)
        self.assertEqual(first.values, second.values)

    def test_invariance_requirements(self):
        """Invariance needs separate input slots and at least two heads."""
        with self.assertRaises(analysis.AnalysisError):
            analysis.invariance(utils.small_network(ensemble_size=1), utils.tiny_blobs())
        with self.assertRaises(analysis.AnalysisError):
            analysis.invariance(utils.small_network(models.Architecture.NAIVE_MULTIHEAD), utils.tiny_blobs())
        with self.assertRaises(analysis.AnalysisError):
            analysis.invariance(utils.small_network(), utils.tiny_blobs(), resamples=0)
        report = analysis.invariance(utils.small_network(models.Architecture.DEEP_ENSEMBLE), utils.tiny_blobs())
        self.assertEqual(report.values["test"][analysis.Metric.DISAGREEMENT], 0.0)

    def test_conditional_variances_brute_force(self):
        """The estimator should match exhaustive enumeration on a four-point dataset."""
        dataset = utils.tiny_blobs(n=4)
        net = utils.small_network(ensemble_size=2, hidden_widths=(5, 4), init_seed=8)
        report = analysis.conditional_variances(net, dataset)
        self.assertTrue(report.exhaustive)
        self.assertEqual(report.fixings, 4)
        x = dataset.features
        expected = np.zeros((9, 2))
        for m in range(2):
            for j in range(4):
                values = []
                for i in range(4):
                    pair = [x[[i]], x[[j]]] if m == 0 else [x[[j]], x[[i]]]
                    values.append(models.record_preactivations(net, pair).matrix()[0])
                values = np.array(values)
                expected[:, m] += np.mean((values - values.mean(axis=0)) ** 2, axis=0) / 4
        np.testing.assert_allclose(report.variances, expected, rtol=0, atol=1e-12)

    def test_conditional_variances_single_slot_unit(self):
        """A unit reading only slot 0 should have no variance with respect to slot 1."""
        config = models.NetworkConfig(2, 1, (1,), 2, models.Task.CLASSIFICATION, models.Architecture.MIMO)
        net = models.Network(config, {"dense_0.weight": [[2.0], [0.0]], "dense_0.bias": [0.3],
                                      "head.weight": [[1.0, -1.0, 0.5, 0.5]], "head.bias": [0.0] * 4})
        x = np.array([[0.0], [1.0], [3.0], [-2.0]])
        dataset = data.Dataset(x, np.eye(2)[[0, 1, 0, 1]], models.Task.CLASSIFICATION)
        report = analysis.conditional_variances(net, dataset)
        self.assertAlmostEqual(report.variances[0, 0], np.var(2.0 * x[:, 0] + 0.3), delta=1e-12)
        self.assertAlmostEqual(report.variances[0, 1], 0.0, delta=1e-20)
        self.assertEqual(report.dominant[0], 0)
        self.assertAlmostEqual(report.dominance_share[0], 1.0, delta=1e-12)
        self.assertEqual(report.dominant_fraction(), 1.0)

    def test_conditional_variances_constant_units(self):
        """Units without input weights should have zero variances and no dominance share."""
        net = utils.small_network(ensemble_size=2)
        net = net.replace({"dense_0.weight": np.zeros((4, 5)), "dense_0.bias": np.arange(5.0)})
        report = analysis.conditional_variances(net, utils.tiny_blobs(n=6))
        np.testing.assert_array_equal(report.variances[:5], np.zeros((5, 2)))
        self.assertTrue(np.all(np.isnan(report.dominance_share[:5])))
        frame = report.to_frame()
        self.assertEqual(list(frame.columns), ["layer", "unit", "variance_0", "variance_1", "dominant",
                                               "dominance_share"])
        self.assertEqual(len(frame), 9)
        self.assertEqual(report.to_dict()["units"], 9)

    def test_conditional_variances_share_bounds(self):
        """Dominance shares should lie in [1/M, 1]."""
        net = utils.small_network(ensemble_size=3, hidden_widths=(6, 5))
        report = analysis.conditional_variances(net, utils.tiny_blobs(n=50), outer=8, inner=20)
        self.assertFalse(report.exhaustive)
        self.assertEqual(report.fixings, 8)
        self.assertEqual(report.variances.shape, (11, 3))
        self.assertTrue(np.all(report.variances >= 0.0))
        share = report.dominance_share[~np.isnan(report.dominance_share)]
        self.assertTrue(np.all(share >= 1.0 / 3.0 - 1e-12))
        self.assertTrue(np.all(share <= 1.0 + 1e-12))

    def test_conditional_variances_requirements(self):
        """Conditional variances need a mimo network, two heads and sample counts of at least 2."""
        dataset = utils.tiny_blobs()
        for net in (utils.small_network(ensemble_size=1), utils.small_network(models.Architecture.NAIVE_MULTIHEAD),
                    utils.small_network(models.Architecture.DEEP_ENSEMBLE)):
            with self.assertRaises(analysis.AnalysisError):
                analysis.conditional_variances(net, dataset)
        with self.assertRaises(analysis.AnalysisError):
            analysis.conditional_variances(utils.small_network(), dataset, outer=1)
        with self.assertRaises(analysis.AnalysisError):
            analysis.conditional_variances(utils.small_network(), dataset, inner=1)

    def test_decompose_constant_predictor(self):
        """A constant zero predictor against unit targets is all bias."""
        terms = analysis.decompose(np.zeros((3, 5)), np.ones(5))
        self.assertEqual(terms.error, 1.0)
        self.assertEqual(terms.bias_squared, 1.0)
        self.assertEqual(terms.variance, 0.0)
        self.assertEqual(terms.replicates, 3)

    def test_decompose_identity(self):
        """Error should equal squared bias plus variance on random predictions."""
        rng = np.random.default_rng(2)
        for shape in ((4, 30), (7, 20, 2)):
            predictions = rng.normal(size=shape)
            targets = rng.normal(size=shape[1:])
            terms = analysis.decompose(predictions, targets)
            self.assertLessEqual(terms.identity_gap, 1e-8 * max(1.0, terms.error))
            self.assertGreater(terms.variance, 0.0)
            self.assertTrue(math.isfinite(terms.error_se))
        self.assertTrue(math.isnan(analysis.decompose(np.zeros((1, 3)), np.zeros(3)).error_se))
        with self.assertRaises(analysis.AnalysisError):
            analysis.decompose(np.zeros((2, 3)), np.zeros(4))

    def test_bias_variance(self):
        """Replicates should be decomposed per ensemble size with the identity holding."""
        report = analysis.bias_variance(_regression_setup(), 2, base_seed=1, ensemble_sizes=[1, 2])
        self.assertEqual(list(report.rows), [1, 2])
        for terms in report.rows.values():
            self.assertEqual(terms.replicates, 2)
            self.assertLessEqual(terms.identity_gap, 1e-8 * max(1.0, terms.error))
            self.assertGreater(terms.variance, 0.0)
        frame = report.to_frame()
        self.assertEqual(list(frame.columns), ["ensemble_size", "replicates", "error", "bias_squared", "variance",
                                               "error_se", "identity_gap"])

    def test_bias_variance_identical_replicates(self):
        """Replicates forced to the same seed should have no variance."""
        report = analysis.bias_variance(_regression_setup(), 3, base_seed=4, vary_seeds=False)
        self.assertAlmostEqual(report.rows[1].variance, 0.0, delta=1e-20)

    def test_bias_variance_requirements(self):
        """The decomposition needs a regression task and at least two replicates."""
        with self.assertRaises(analysis.AnalysisError):
            analysis.bias_variance(_regression_setup(), 1)
        with self.assertRaises(analysis.AnalysisError):
            analysis.bias_variance(_blobs_setup(), 2)

    def test_bias_variance_replicate_failure(self):
        """A diverging replicate should be reported by index."""
        setup = _regression_setup()
        setup = dataclasses.replace(setup, optimizer=dataclasses.replace(setup.optimizer, learning_rate=1e8,
                                                                         steps=200))
        with self.assertRaises(analysis.ReplicateError) as context:
            analysis.bias_variance(setup, 2)
        self.assertEqual(context.exception.replicate, 0)

    def test_accuracy_and_nll(self):
        """Accuracy and NLL should follow their closed forms."""
        self.assertEqual(analysis.accuracy(np.eye(3), np.eye(3)), 1.0)
        self.assertEqual(analysis.nll(np.eye(3), np.eye(3)), 0.0)
        self.assertEqual(analysis.expected_calibration_error(np.eye(3), np.eye(3)), 0.0)
        for classes in (2, 5, 10):
            uniform = np.full((7, classes), 1.0 / classes)
            self.assertAlmostEqual(analysis.nll(uniform, np.arange(7) % classes), math.log(classes), delta=1e-12)
        self.assertEqual(analysis.accuracy([[0.5, 0.5]], np.array([0])), 1.0)
        self.assertAlmostEqual(analysis.nll([[1.0, 0.0]], np.array([1])), -math.log(1e-12), delta=1e-9)
        with self.assertRaises(analysis.AnalysisError):
            analysis.accuracy(np.eye(3), np.eye(2))

    def test_ece_single_bin(self):
        """Confidence 0.8 with 60% accuracy in one bin should give an ECE of 0.2."""
        predictions = np.tile([0.8, 0.2], (10, 1))
        labels = np.array([0] * 6 + [1] * 4)
        self.assertAlmostEqual(analysis.expected_calibration_error(predictions, labels), 0.2, delta=1e-12)
        self.assertAlmostEqual(analysis.expected_calibration_error(predictions, labels, bins=1), 0.2, delta=1e-12)
        with self.assertRaises(analysis.AnalysisError):
            analysis.expected_calibration_error(predictions, labels, bins=0)

    def test_ece_calibrated(self):
        """A calibrated prediction set should have an ECE within the binning resolution."""
        bins = 15
        classes = 10
        rows = []
        labels = []
        for b in range(2, bins):
            confidence = (b + 0.5) / bins
            row = np.full(classes, (1.0 - confidence) / (classes - 1))
            row[0] = confidence
            correct = round(100 * confidence)
            rows.extend([row] * 100)
            labels.extend([0] * correct + [1] * (100 - correct))
        ece = analysis.expected_calibration_error(np.array(rows), np.array(labels), bins)
        self.assertLessEqual(ece, 1.0 / (2 * bins))

    def test_metrics_report(self):
        """Metric reports should cover every split and member averages."""
        net = utils.small_network(ensemble_size=3)
        report = analysis.metrics(net, [utils.tiny_blobs(split=data.Split.TRAIN), utils.tiny_blobs(seed=1)])
        test = report.for_split("test")
        self.assertTrue(0.0 <= test.accuracy <= 1.0)
        self.assertTrue(0.0 <= test.ece <= 1.0)
        self.assertTrue(math.isnan(test.mse))
        self.assertLessEqual(test.nll, test.member_nll)
        self.assertEqual(report.forward_passes, 1)
        self.assertEqual(report.parameter_count, net.parameter_count)
        frame = report.to_frame()
        for column in ("split", "accuracy", "nll", "ece", "member_accuracy", "parameter_count", "forward_passes"):
            self.assertIn(column, frame.columns)
        self.assertEqual(len(frame), 2)
        deep = analysis.metrics(utils.small_network(models.Architecture.DEEP_ENSEMBLE, 3), utils.tiny_blobs())
        self.assertEqual(deep.forward_passes, 3)
        with self.assertRaises(analysis.AnalysisError):
            deep.for_split("train")

    def test_metrics_regression(self):
        """Regression reports should carry squared errors only."""
        net = utils.small_network(ensemble_size=2, task=models.Task.REGRESSION, input_dim=1, output_dim=1)
        dataset = data.gen_noisy_regression(20, 0, split=data.Split.TEST)
        row = analysis.metrics(net, dataset).for_split(data.Split.TEST)
        self.assertTrue(math.isnan(row.accuracy))
        self.assertLessEqual(row.mse, row.member_mse)
        heads = models.forward_tiled(net, dataset.features)
        expected = np.mean((np.mean([head.values[:, 0] for head in heads], axis=0) - dataset.labels[:, 0]) ** 2)
        self.assertAlmostEqual(row.mse, expected, delta=1e-12)

    def test_nonzero_fraction(self):
        """Coordinates count as nonzero above the threshold."""
        self.assertAlmostEqual(analysis.nonzero_fraction([0.0, 2e-4, -5e-5]), 1.0 / 3.0, delta=1e-15)
        self.assertEqual(analysis.nonzero_fraction(np.zeros(10)), 0.0)
        self.assertEqual(analysis.nonzero_fraction([]), 0.0)

    def test_sparsity(self):
        """Sparsity should count weights only."""
        net = utils.small_network(ensemble_size=2)
        report = analysis.sparsity(net, dataset=utils.tiny_blobs(), coefficient=0.1)
        self.assertEqual(report.weights, sum(net[name].size for name in net.weight_names))
        self.assertGreaterEqual(report.nonzero_fraction, 0.99)
        self.assertTrue(0.0 <= report.accuracy <= 1.0)
        self.assertEqual(report.coefficient, 0.1)
        zero = net.replace({name: np.zeros(net[name].shape) for name in net.names})
        self.assertEqual(analysis.sparsity(zero).nonzero_fraction, 0.0)
        self.assertTrue(math.isnan(analysis.sparsity(zero).accuracy))
        self.assertEqual(len(report.to_frame()), 1)

    def test_regularization_sweep(self):
        """Every coefficient and ensemble size should get a row of replicate averages."""
        setup = _blobs_setup()
        frame = analysis.regularization_sweep(setup, "l1", [0.0, 0.01], [1, 2], 1)
        self.assertEqual(len(frame), 4)
        self.assertEqual(list(frame["coefficient"]), [0.0, 0.0, 0.01, 0.01])
        self.assertEqual(list(frame["ensemble_size"]), [1, 2, 1, 2])
        for column in ("penalty", "replicates", "accuracy", "nll", "nonzero_fraction", "final_loss"):
            self.assertIn(column, frame.columns)
        for size, row in zip((1, 2), frame.head(2).itertuples()):
            plain = analysis.summarize_trial(analysis.with_ensemble_size(setup, size), 0,
                                             analysis.fixed_test_set(setup))
            self.assertEqual(row.accuracy, plain["accuracy"])
            self.assertEqual(row.nll, plain["nll"])
        with self.assertRaises(analysis.AnalysisError):
            analysis.regularization_sweep(setup, "l2", [-1.0], [1], 1)
        with self.assertRaises(analysis.AnalysisError):
            analysis.regularization_sweep(setup, "l2", [], [1], 1)
        with self.assertRaises(ValueError):
            analysis.regularization_sweep(setup, "l0", [0.0], [1], 1)

    def test_replicate_error_pickles(self):
        """Replicate errors should keep their index through pickling."""
        error = analysis.ReplicateError(4, "diverged")
        cls, args = error.__reduce__()
        self.assertEqual(cls(*args).replicate, 4)
        self.assertEqual(str(error), "replicate 4 failed: diverged")

    def test_brute_force_helper_consistency(self):
        """Exhaustive fixings should enumerate every companion tuple exactly once."""
        dataset = utils.tiny_blobs(n=3)
        net = utils.small_network(ensemble_size=3)
        report = analysis.conditional_variances(net, dataset, outer=9)
        self.assertTrue(report.exhaustive)
        self.assertEqual(report.fixings, len(list(itertools.product(range(3), repeat=2))))


if __name__ == '__main__':
    unittest.main()
