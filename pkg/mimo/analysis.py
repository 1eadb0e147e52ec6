# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Quantitative analyses of trained ensembles: diversity and invariance of the subnetworks, conditional-variance
separation of hidden units, the bias-variance decomposition, accuracy/NLL/calibration, and weight sparsity."""

import dataclasses
import enum
import itertools
import logging
import math
import typing

import numpy as np
import pandas as pd

from mimo import data, models, tensor, training, _utils


_LOGGER = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
DEFAULT_BINS = 15
SPARSITY_THRESHOLD = 1e-4
DEFAULT_RESAMPLES = 8
DEFAULT_OUTER_SAMPLES = 32
DOMINANCE_THRESHOLD = 0.9

_Predictions = typing.Union[models.PredictiveDistribution, np.ndarray, typing.Sequence[float]]
_Datasets = typing.Union[data.Dataset, typing.Sequence[data.Dataset]]


class Metric(enum.Enum):
    """Similarity measures between two predictive distributions."""
    DISAGREEMENT = "disagreement"
    KL = "kl"
    COSINE = "cosine"


class Penalty(enum.Enum):
    """The regularizer varied by a regularization sweep."""
    L1 = "l1"
    L2 = "l2"


# Pairwise measures

def _probabilities(predictions: _Predictions) -> np.ndarray:
    if isinstance(predictions, models.PredictiveDistribution):
        if predictions.task != models.Task.CLASSIFICATION:
            raise AnalysisError("similarity measures are only defined for classification predictions")
        return predictions.values
    array = np.asarray(predictions, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    if array.ndim != 2:
        raise AnalysisError(f"predictions must be 1-D or 2-D, got shape {array.shape}")
    return array


def _pair(first: _Predictions, second: _Predictions) -> tuple[np.ndarray, np.ndarray]:
    left, right = _probabilities(first), _probabilities(second)
    if left.shape != right.shape:
        raise AnalysisError(f"cannot compare predictions of shapes {left.shape} and {right.shape}")
    return left, right


def _row_disagreement(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return (np.argmax(left, axis=1) != np.argmax(right, axis=1)).astype(np.float64)


def _row_kl(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    terms = np.where(left > 0.0, left * (np.log(np.maximum(left, PROBABILITY_FLOOR)) -
                                         np.log(np.maximum(right, PROBABILITY_FLOOR))), 0.0)
    return np.maximum(terms.sum(axis=1), 0.0)


def _row_cosine(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(left, axis=1) * np.linalg.norm(right, axis=1)
    if np.any(norms == 0.0):
        raise AnalysisError("cosine similarity is undefined for zero vectors")
    return np.clip((left * right).sum(axis=1) / norms, -1.0, 1.0)


_ROW_MEASURES: dict[Metric, typing.Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    Metric.DISAGREEMENT: _row_disagreement,
    Metric.KL: _row_kl,
    Metric.COSINE: _row_cosine,
}


def disagreement(first: _Predictions, second: _Predictions) -> float:
    """Whether the predicted classes differ: 1 if the argmax classes differ, 0 otherwise (averaged over rows when
    given several examples)."""
    return float(np.mean(_row_disagreement(*_pair(first, second))))


def kl_divergence(first: _Predictions, second: _Predictions) -> float:
    """``sum p1 (log p1 - log p2)`` with probabilities floored at 1e-12 and ``0 log 0 = 0`` (averaged over rows)."""
    return float(np.mean(_row_kl(*_pair(first, second))))


def cosine_similarity(first: _Predictions, second: _Predictions) -> float:
    """``<p1, p2> / (|p1| |p2|)`` (averaged over rows).

    :raises AnalysisError: if either vector is zero
    """
    return float(np.mean(_row_cosine(*_pair(first, second))))


def _metric_list(metric: typing.Union[Metric, str, None]) -> list[Metric]:
    if metric is None:
        return list(Metric)
    try:
        return [Metric(metric)]
    except ValueError as exc:
        raise AnalysisError(f"unknown metric {metric!r}") from exc


def _require_classification(net: models.Network, what: str) -> None:
    if net.config.task != models.Task.CLASSIFICATION:
        raise AnalysisError(f"{what} is only defined for classification networks")


def _require_ensemble(net: models.Network, what: str) -> None:
    if net.config.ensemble_size < 2:
        raise AnalysisError(f"{what} requires an ensemble size of at least 2, got {net.config.ensemble_size}")


# Diversity

@dataclasses.dataclass(frozen=True)
class DiversityReport:
    """Mean pairwise similarity of the heads under tiled evaluation.  ``matrices[metric][i, j]`` is the value for heads
    ``i`` and ``j``; KL matrices are symmetrized, while ``means`` averages KL over ordered pairs."""
    heads: int
    examples: int
    means: dict[Metric, float]
    matrices: dict[Metric, np.ndarray]

    def to_frame(self) -> pd.DataFrame:
        """One row per metric and unordered head pair, with columns ``metric, head_a, head_b, value``."""
        rows = []
        for metric, matrix in self.matrices.items():
            for i, j in itertools.combinations(range(self.heads), 2):
                rows.append({"metric": metric.value, "head_a": i, "head_b": j, "value": matrix[i, j]})
        return pd.DataFrame(rows, columns=["metric", "head_a", "head_b", "value"])

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable({
            "heads": self.heads,
            "examples": self.examples,
            "mean": {metric.value: value for metric, value in self.means.items()},
            "matrix": {metric.value: matrix for metric, matrix in self.matrices.items()},
        })


def pairwise_diversity(net: models.Network, dataset: data.Dataset,
                       metric: typing.Union[Metric, str, None] = None) -> DiversityReport:
    """Average a similarity measure over all head pairs and all examples.

    :param net: a classification network with at least two heads
    :param dataset: the examples, evaluated tiled
    :param metric: the measure to compute; all measures when ``None``
    :return: the diversity report
    :raises AnalysisError: if the network has fewer than two heads
    """
    _require_ensemble(net, "pairwise diversity")
    _require_classification(net, "pairwise diversity")
    heads = [head.values for head in training.evaluate(net, dataset).heads]
    count = len(heads)
    means = {}
    matrices = {}
    for measure in _metric_list(metric):
        ordered = np.zeros((count, count))
        for i, j in itertools.permutations(range(count), 2):
            ordered[i, j] = np.mean(_ROW_MEASURES[measure](heads[i], heads[j]))
        off_diagonal = ~np.eye(count, dtype=bool)
        means[measure] = float(ordered[off_diagonal].mean())
        matrix = (ordered + ordered.T) / 2.0
        np.fill_diagonal(matrix, 1.0 if measure == Metric.COSINE else 0.0)
        matrices[measure] = matrix
    return DiversityReport(count, dataset.n, means, matrices)


# Invariance

@dataclasses.dataclass(frozen=True)
class InvarianceReport:
    """Similarity of head 0's predictions under two independent draws of the companion inputs, per split."""
    resamples: int
    values: dict[str, dict[Metric, float]]

    def to_frame(self) -> pd.DataFrame:
        """One row per split and metric, with columns ``split, metric, value``."""
        rows = [{"split": split, "metric": metric.value, "value": value}
                for split, measures in self.values.items() for metric, value in measures.items()]
        return pd.DataFrame(rows, columns=["split", "metric", "value"])

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable({
            "resamples": self.resamples,
            "values": {split: {metric.value: value for metric, value in measures.items()}
                       for split, measures in self.values.items()},
        })


def _as_datasets(datasets: _Datasets) -> list[data.Dataset]:
    if isinstance(datasets, data.Dataset):
        return [datasets]
    return list(datasets)


def invariance(net: models.Network, datasets: _Datasets, metric: typing.Union[Metric, str, None] = None,
               resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> InvarianceReport:
    """Measure how much head 0 depends on the inputs of the other slots.

    For every example ``x`` in slot 0, the companions of slots 1 to M-1 are drawn twice, independently and uniformly
    from the same dataset, and head 0's two predictions are compared.  The measure is averaged over examples and
    ``resamples`` draws.

    :param net: a classification network with separate input slots (mimo or deep ensemble) and at least two heads
    :param datasets: the dataset (or datasets, one per split) to evaluate
    :param metric: the measure to compute; all measures when ``None``
    :param resamples: the number of companion draws per example
    :param seed: the seed of the companion draws
    :return: the invariance report, keyed by split
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    _require_ensemble(net, "invariance")
    _require_classification(net, "invariance")
    if net.config.input_slots != net.config.ensemble_size:
        raise AnalysisError(f"invariance requires separate input slots, "
                            f"{net.config.architecture.value} networks share one input")
    if resamples < 1:
        raise AnalysisError(f"need at least one resample, got {resamples}")
    measures = _metric_list(metric)
    rng = np.random.default_rng(seed)
    companions = net.config.ensemble_size - 1
    values = {}
    for dataset in _as_datasets(datasets):
        x = dataset.features
        totals = dict.fromkeys(measures, 0.0)
        for _ in range(resamples):
            first = _head_zero(net, x, rng.integers(0, dataset.n, size=(companions, dataset.n)))
            second = _head_zero(net, x, rng.integers(0, dataset.n, size=(companions, dataset.n)))
            for measure in measures:
                totals[measure] += float(np.mean(_ROW_MEASURES[measure](first, second)))
        values[dataset.split.value] = {measure: total / resamples for measure, total in totals.items()}
    return InvarianceReport(resamples, values)


def _head_zero(net: models.Network, x: np.ndarray, companions: np.ndarray) -> np.ndarray:
    inputs = [x] + [x[rows] for rows in companions]
    return models.forward_mimo(net, inputs)[0].values


# Conditional variances

@dataclasses.dataclass(frozen=True)
class ConditionalVarianceReport:
    """Per hidden unit, the variance of its pre-activation as each input slot sweeps the data with the other slots
    fixed, averaged over fixings.  ``variances`` has shape ``(units, M)``."""
    units: list[tuple[int, int]]
    variances: np.ndarray
    fixings: int
    exhaustive: bool

    @property
    def dominant(self) -> np.ndarray:
        """Get the slot with the largest conditional variance for every unit."""
        return np.argmax(self.variances, axis=1)

    @property
    def dominance_share(self) -> np.ndarray:
        """Get the largest conditional variance divided by their sum for every unit (NaN where all are zero)."""
        totals = self.variances.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0.0, self.variances.max(axis=1) / totals, np.nan)

    def dominant_fraction(self, threshold: float = DOMINANCE_THRESHOLD) -> float:
        """Get the fraction of units whose dominance share is at least ``threshold``."""
        share = self.dominance_share
        return float(np.mean(np.nan_to_num(share, nan=-1.0) >= threshold)) if len(share) else 0.0

    def to_frame(self) -> pd.DataFrame:
        """One row per unit, with columns ``layer, unit, variance_0 ... variance_{M-1}, dominant, dominance_share``."""
        frame = pd.DataFrame(self.units, columns=["layer", "unit"])
        for m in range(self.variances.shape[1]):
            frame[f"variance_{m}"] = self.variances[:, m]
        frame["dominant"] = self.dominant
        frame["dominance_share"] = self.dominance_share
        return frame

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable({
            "units": len(self.units),
            "fixings": self.fixings,
            "exhaustive": self.exhaustive,
            "dominant_fraction": self.dominant_fraction(),
            "dominance_threshold": DOMINANCE_THRESHOLD,
            "variances": self.variances,
        })


def conditional_variances(net: models.Network, dataset: data.Dataset, outer: int = DEFAULT_OUTER_SAMPLES,
                          inner: typing.Optional[int] = None, seed: int = 0) -> ConditionalVarianceReport:
    """Estimate ``Var(a_i | other slots) = E_others[Var_slot m(a_i)]`` for every hidden unit and slot.

    The other slots are fixed to ``outer`` random tuples of dataset examples, or to every tuple when there are at most
    ``outer`` of them.  Slot ``m`` then sweeps ``inner`` examples (the whole dataset when ``None``).

    :param net: a mimo network with at least two heads
    :param dataset: the examples to sweep
    :param outer: the number of fixings of the other slots
    :param inner: the number of examples swept by the varying slot
    :param seed: the seed of the sampled fixings
    :return: the report, with units in :meth:`ActivationRecord.units` order
    :raises AnalysisError: if the network is not a mimo network or a sample count is below 2
    """
    # pylint: disable=too-many-locals
    config = net.config
    if config.architecture != models.Architecture.MIMO:
        raise AnalysisError(f"conditional variances require a mimo network, got {config.architecture.value}")
    _require_ensemble(net, "conditional variances")
    if outer < 2 or (inner is not None and inner < 2):
        raise AnalysisError(f"sample counts must be at least 2, got outer={outer} and inner={inner}")
    if dataset.n < 2:
        raise AnalysisError("conditional variances need at least 2 examples")
    rng = np.random.default_rng(seed)
    x = dataset.features
    slots = config.ensemble_size
    exhaustive = dataset.n ** (slots - 1) <= outer
    units: list[tuple[int, int]] = []
    columns = []
    fixing_count = 0
    for m in range(slots):
        if inner is None or inner >= dataset.n:
            sweep = x
        else:
            sweep = x[np.sort(rng.choice(dataset.n, size=inner, replace=False))]
        if exhaustive:
            fixings = np.array(list(itertools.product(range(dataset.n), repeat=slots - 1)), dtype=np.int64)
        else:
            fixings = rng.integers(0, dataset.n, size=(outer, slots - 1))
        total = None
        for fixing in fixings:
            companions = iter(fixing)
            inputs = [sweep if slot == m else np.repeat(x[[next(companions)]], sweep.shape[0], axis=0)
                      for slot in range(slots)]
            record = models.record_preactivations(net, inputs)
            variance = record.matrix().var(axis=0)
            total = variance if total is None else total + variance
            units = record.units()
        columns.append(typing.cast(np.ndarray, total) / len(fixings))
        fixing_count = len(fixings)
    _LOGGER.debug("conditional variances of %d units over %d fixings per slot", len(units), fixing_count)
    return ConditionalVarianceReport(units, np.stack(columns, axis=1), fixing_count, exhaustive)


# Bias-variance decomposition

@dataclasses.dataclass(frozen=True)
class BiasVarianceTerms:
    """Expected test error and its decomposition ``error = bias_squared + variance``."""
    replicates: int
    error: float
    bias_squared: float
    variance: float
    error_se: float

    @property
    def identity_gap(self) -> float:
        """Get ``|error - bias_squared - variance|``."""
        return abs(self.error - self.bias_squared - self.variance)


def decompose(predictions: np.ndarray, targets: np.ndarray) -> BiasVarianceTerms:
    """Decompose the mean squared error of replicate predictions against fixed targets.

    With ``f_bar`` the mean prediction over replicates, ``bias_squared`` is the test mean of ``|f_bar - y|^2`` and
    ``variance`` the test mean of the replicate mean of ``|f_r - f_bar|^2``.

    :param predictions: ``(replicates, examples)`` or ``(replicates, examples, outputs)`` predictions
    :param targets: ``(examples,)`` or ``(examples, outputs)`` targets
    :return: the terms; ``error_se`` is the standard error of the per-replicate errors (NaN for one replicate)
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.ndim == 2:
        predictions = predictions[:, :, np.newaxis]
    if targets.ndim == 1:
        targets = targets[:, np.newaxis]
    if predictions.ndim != 3 or predictions.shape[0] < 1 or predictions.shape[1:] != targets.shape:
        raise AnalysisError(f"predictions of shape {predictions.shape} do not match targets of shape {targets.shape}")
    replicates = predictions.shape[0]
    squared = ((predictions - targets) ** 2).sum(axis=2)
    mean_prediction = predictions.mean(axis=0)
    bias_squared = float(((mean_prediction - targets) ** 2).sum(axis=1).mean())
    variance = float(((predictions - mean_prediction) ** 2).sum(axis=2).mean())
    error_se = float(squared.mean(axis=1).std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else math.nan
    return BiasVarianceTerms(replicates, float(squared.mean()), bias_squared, variance, error_se)


@dataclasses.dataclass(frozen=True)
class BiasVarianceReport:
    """Bias-variance terms per ensemble size."""
    rows: dict[int, BiasVarianceTerms]

    def to_frame(self) -> pd.DataFrame:
        """One row per ensemble size, with columns ``ensemble_size, replicates, error, bias_squared, variance,
        error_se, identity_gap``."""
        return pd.DataFrame([{"ensemble_size": size, "replicates": terms.replicates, "error": terms.error,
                              "bias_squared": terms.bias_squared, "variance": terms.variance,
                              "error_se": terms.error_se, "identity_gap": terms.identity_gap}
                             for size, terms in self.rows.items()])

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable({"rows": self.to_frame().to_dict(orient="records")})


def with_ensemble_size(setup: training.TrainingSetup, size: int) -> training.TrainingSetup:
    """Get a setup with the network and sampler ensemble size replaced."""
    return dataclasses.replace(setup, network=dataclasses.replace(setup.network, ensemble_size=size),
                               sampling=dataclasses.replace(setup.sampling, ensemble_size=size))


def bias_variance(setup: training.TrainingSetup, replicates: int, base_seed: int = 0,
                  ensemble_sizes: typing.Optional[typing.Sequence[int]] = None, workers: int = 1,
                  vary_seeds: bool = True) -> BiasVarianceReport:
    """Train ``replicates`` models per ensemble size on independently resampled training sets and decompose their
    ensemble test error against the fixed test set.

    :param setup: the regression setup
    :param replicates: the number of replicates R
    :param base_seed: the seed replicate keys are derived from
    :param ensemble_sizes: the ensemble sizes to evaluate, defaulting to the setup's
    :param workers: the number of worker processes
    :param vary_seeds: use the same key for every replicate when ``False``
    :return: the report
    :raises AnalysisError: if the task is not regression or ``replicates < 2``
    :raises ReplicateError: if a replicate fails to train
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    if setup.network.task != models.Task.REGRESSION:
        raise AnalysisError("the bias-variance decomposition requires a regression task")
    if replicates < 2:
        raise AnalysisError(f"the variance term needs at least 2 replicates, got {replicates}")
    sizes = [setup.network.ensemble_size] if ensemble_sizes is None else list(ensemble_sizes)
    test_set = setup.dataset.test_set()
    keys = [_utils.derive_seed(base_seed, r) if vary_seeds else base_seed for r in range(replicates)]
    rows = {}
    for size in sizes:
        sized = with_ensemble_size(setup, size)
        sized.validate()
        predictions = _utils.run_ordered(_predict_replicate, [(sized, r, key, test_set) for r, key in enumerate(keys)],
                                         workers)
        terms = decompose(np.stack(predictions), test_set.labels)
        _LOGGER.info("M=%d: error %.6g = bias^2 %.6g + variance %.6g", size, terms.error, terms.bias_squared,
                     terms.variance)
        rows[size] = terms
    return BiasVarianceReport(rows)


def _predict_replicate(task: tuple[training.TrainingSetup, int, int, data.Dataset]) -> np.ndarray:
    setup, replicate, key, test_set = task
    try:
        result = setup.run(replicate=key)
    except (training.TrainingError, tensor.NumericOverflowError) as exc:
        raise ReplicateError(replicate, str(exc)) from exc
    return training.evaluate(result.network, test_set).ensemble.values


# Standard metrics

def _class_indices(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 1:
        return labels.astype(np.int64)
    return np.argmax(labels, axis=1)


def _checked(predictions: _Predictions, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probabilities = _probabilities(predictions)
    indices = _class_indices(labels)
    if indices.shape[0] != probabilities.shape[0]:
        raise AnalysisError(f"{probabilities.shape[0]} predictions for {indices.shape[0]} labels")
    if indices.size and (indices.min() < 0 or indices.max() >= probabilities.shape[1]):
        raise AnalysisError("class index out of range of the predictions")
    return probabilities, indices


def accuracy(predictions: _Predictions, labels: np.ndarray) -> float:
    """The fraction of examples whose argmax class (lowest index on ties) is the label.

    :param predictions: class probabilities, one row per example
    :param labels: one-hot rows or class indices
    """
    probabilities, indices = _checked(predictions, labels)
    return float(np.mean(np.argmax(probabilities, axis=1) == indices))


def nll(predictions: _Predictions, labels: np.ndarray) -> float:
    """The mean negative log-probability of the true class, with probabilities floored at 1e-12."""
    probabilities, indices = _checked(predictions, labels)
    true_class = probabilities[np.arange(len(indices)), indices]
    return float(np.mean(-np.log(np.maximum(true_class, PROBABILITY_FLOOR))))


def expected_calibration_error(predictions: _Predictions, labels: np.ndarray, bins: int = DEFAULT_BINS) -> float:
    """``sum_b (n_b / n) |accuracy_b - confidence_b|`` over equal-width bins of the top-class probability.

    Bin ``b`` holds confidences in ``(b / bins, (b + 1) / bins]``; a confidence of exactly 0 falls in the first bin.
    """
    if bins < 1:
        raise AnalysisError(f"need at least one bin, got {bins}")
    probabilities, indices = _checked(predictions, labels)
    confidence = probabilities.max(axis=1)
    correct = (np.argmax(probabilities, axis=1) == indices).astype(np.float64)
    assignment = np.clip(np.ceil(confidence * bins).astype(np.int64) - 1, 0, bins - 1)
    total = 0.0
    for b in range(bins):
        members = assignment == b
        count = int(members.sum())
        if count:
            total += count / len(confidence) * abs(correct[members].mean() - confidence[members].mean())
    return float(total)


def mean_squared_error(predictions: _Predictions, targets: np.ndarray) -> float:
    """The mean over examples of the squared error summed over outputs."""
    values = predictions.values if isinstance(predictions, models.PredictiveDistribution) else predictions
    values = np.asarray(values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(values.shape)
    return float(((values - targets) ** 2).sum(axis=1).mean())


@dataclasses.dataclass(frozen=True)
class SplitMetrics:
    """Metrics of the ensemble and the mean over members on one split.  Classification metrics are NaN for
    regression and the squared error is NaN for classification."""
    # pylint: disable=too-many-instance-attributes
    split: str
    examples: int
    accuracy: float
    nll: float
    ece: float
    mse: float
    member_accuracy: float
    member_nll: float
    member_mse: float


@dataclasses.dataclass(frozen=True)
class MetricsReport:
    """Standard metrics per split, with the cost of an ensemble prediction."""
    task: models.Task
    parameter_count: int
    forward_passes: int
    bins: int
    splits: list[SplitMetrics]

    def for_split(self, split: typing.Union[data.Split, str]) -> SplitMetrics:
        """Get the metrics of one split."""
        name = data.Split(split).value
        for row in self.splits:
            if row.split == name:
                return row
        raise AnalysisError(f"no metrics for split '{name}'")

    def to_frame(self) -> pd.DataFrame:
        """One row per split, with the :class:`SplitMetrics` columns plus ``parameter_count, forward_passes``."""
        frame = pd.DataFrame([dataclasses.asdict(row) for row in self.splits])
        frame["parameter_count"] = self.parameter_count
        frame["forward_passes"] = self.forward_passes
        return frame

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable({
            "task": self.task.value,
            "parameter_count": self.parameter_count,
            "forward_passes": self.forward_passes,
            "bins": self.bins,
            "splits": {row.split: dataclasses.asdict(row) for row in self.splits},
        })


def metrics(net: models.Network, datasets: _Datasets, bins: int = DEFAULT_BINS) -> MetricsReport:
    """Compute accuracy, NLL and calibration (classification) or squared error (regression) of the tiled ensemble
    and of its members.

    :param net: the network
    :param datasets: the dataset (or datasets, one per split) to evaluate
    :param bins: the number of calibration bins
    :return: the report
    """
    task = net.config.task
    rows = []
    for dataset in _as_datasets(datasets):
        evaluation = training.evaluate(net, dataset)
        nan = math.nan
        if task == models.Task.CLASSIFICATION:
            labels = dataset.labels
            rows.append(SplitMetrics(
                dataset.split.value, dataset.n,
                accuracy(evaluation.ensemble, labels), nll(evaluation.ensemble, labels),
                expected_calibration_error(evaluation.ensemble, labels, bins), nan,
                float(np.mean([accuracy(head, labels) for head in evaluation.heads])),
                float(np.mean([nll(head, labels) for head in evaluation.heads])), nan))
        else:
            rows.append(SplitMetrics(
                dataset.split.value, dataset.n, nan, nan, nan,
                mean_squared_error(evaluation.ensemble, dataset.labels), nan, nan,
                float(np.mean([mean_squared_error(head, dataset.labels) for head in evaluation.heads]))))
    passes = net.config.ensemble_size if net.config.architecture == models.Architecture.DEEP_ENSEMBLE else 1
    return MetricsReport(task, net.parameter_count, passes, bins, rows)


# Sparsity

def nonzero_fraction(values: np.ndarray, threshold: float = SPARSITY_THRESHOLD) -> float:
    """The fraction of coordinates whose absolute value exceeds ``threshold``."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size == 0:
        return 0.0
    return float(np.mean(np.abs(values) > threshold))


@dataclasses.dataclass(frozen=True)
class SparsityReport:
    """The share of weights (biases excluded) above the sparsity threshold, with the metrics of the network."""
    coefficient: typing.Optional[float]
    threshold: float
    weights: int
    nonzero: int
    nonzero_fraction: float
    accuracy: float
    nll: float

    def to_frame(self) -> pd.DataFrame:
        """A single row with the report's fields as columns."""
        return pd.DataFrame([dataclasses.asdict(self)])

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return _utils.to_jsonable(dataclasses.asdict(self))


def sparsity(net: models.Network, threshold: float = SPARSITY_THRESHOLD, dataset: typing.Optional[data.Dataset] = None,
             coefficient: typing.Optional[float] = None) -> SparsityReport:
    """Count the weights whose absolute value exceeds ``threshold``.

    :param net: the network
    :param threshold: the sparsity threshold
    :param dataset: when given (classification only), also report accuracy and NLL on it
    :param coefficient: the regularization coefficient the network was trained with, for the record
    :return: the report
    """
    weights = net.flat(net.weight_names)
    fraction = nonzero_fraction(weights, threshold)
    acc = loss = math.nan
    if dataset is not None and net.config.task == models.Task.CLASSIFICATION:
        ensemble = training.evaluate(net, dataset).ensemble
        acc, loss = accuracy(ensemble, dataset.labels), nll(ensemble, dataset.labels)
    return SparsityReport(coefficient, threshold, int(weights.size), int(np.sum(np.abs(weights) > threshold)),
                          fraction, acc, loss)


# Sweeps

def summarize_trial(setup: training.TrainingSetup, replicate: int, test_set: data.Dataset) -> dict[str, float]:
    """Train one replicate of a setup and summarize it on the test set.

    :return: the ensemble and member metrics, the nonzero weight fraction and the final training loss
    """
    result = setup.run(replicate=replicate)
    row = metrics(result.network, test_set).splits[0]
    summary = {key: value for key, value in dataclasses.asdict(row).items() if key not in ("split", "examples")}
    summary["nonzero_fraction"] = nonzero_fraction(result.network.flat(result.network.weight_names))
    summary["final_loss"] = float(result.loss_curve[-1]) if len(result.loss_curve) else math.nan
    return summary


def _summarize_task(task: tuple[training.TrainingSetup, int, data.Dataset]) -> dict[str, float]:
    setup, replicate, test_set = task
    try:
        return summarize_trial(setup, replicate, test_set)
    except (training.TrainingError, tensor.NumericOverflowError) as exc:
        raise ReplicateError(replicate, str(exc)) from exc


def fixed_test_set(setup: training.TrainingSetup) -> data.Dataset:
    """Get the fixed test set of a setup."""
    classes = setup.network.output_dim if setup.network.task == models.Task.CLASSIFICATION else None
    return setup.dataset.test_set(classes=classes)


def regularization_sweep(setup: training.TrainingSetup, penalty: typing.Union[Penalty, str],
                         coefficients: typing.Sequence[float], ensemble_sizes: typing.Sequence[int], replicates: int,
                         workers: int = 1) -> pd.DataFrame:
    """Train every combination of penalty coefficient, ensemble size and replicate, with the other penalty at zero.

    :param setup: the base setup
    :param penalty: which penalty to vary
    :param coefficients: the penalty coefficients, all nonnegative
    :param ensemble_sizes: the ensemble sizes
    :param replicates: the number of replicates per cell
    :param workers: the number of worker processes
    :return: per-cell averages, one row per ``(coefficient, ensemble_size)`` in input order, with columns
        ``penalty, coefficient, ensemble_size, replicates`` followed by the :func:`summarize_trial` values
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    penalty = Penalty(penalty)
    if not coefficients or not ensemble_sizes:
        raise AnalysisError("a sweep needs at least one coefficient and one ensemble size")
    if any(not coefficient >= 0.0 for coefficient in coefficients):
        raise AnalysisError(f"penalty coefficients must be nonnegative, got {list(coefficients)}")
    if replicates < 1:
        raise AnalysisError(f"need at least one replicate, got {replicates}")
    test_set = fixed_test_set(setup)
    cells = []
    tasks = []
    for coefficient, size in itertools.product(coefficients, ensemble_sizes):
        optimizer = dataclasses.replace(setup.optimizer, **{"l1": 0.0, "l2": 0.0, penalty.value: float(coefficient)})
        cell = dataclasses.replace(with_ensemble_size(setup, size), optimizer=optimizer)
        cell.validate()
        cells.append((float(coefficient), size))
        tasks.extend((cell, r, test_set) for r in range(replicates))
    summaries = _utils.run_ordered(_summarize_task, tasks, workers)
    rows = []
    for index, (coefficient, size) in enumerate(cells):
        block = pd.DataFrame(summaries[index * replicates:(index + 1) * replicates])
        row = {"penalty": penalty.value, "coefficient": coefficient, "ensemble_size": size, "replicates": replicates}
        row.update(block.mean(axis=0).to_dict())
        rows.append(row)
    return pd.DataFrame(rows)


# Exceptions

class AnalysisError(_utils.MimoError):
    """An exception that is raised when an analysis is requested for a network or data it does not apply to."""


class ReplicateError(_utils.MimoError):
    """An exception that is raised when one replicate of a multi-replicate analysis fails."""

    def __init__(self, replicate: int, message: str) -> None:
        super().__init__(f"replicate {replicate} failed: {message}")
        self.replicate = replicate
        self.message = message

    def __reduce__(self):
        return type(self), (self.replicate, self.message)
