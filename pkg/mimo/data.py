# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Synthetic and CSV datasets, and sampling of M-tuple training batches with input and batch repetition."""

import dataclasses
import enum
import logging
import math
import typing

import numpy as np
import pandas as pd

from mimo import models, _utils


_LOGGER = logging.getLogger(__name__)

DEFAULT_NOISE_SD = 0.02
DEFAULT_TRAIN_RANGE = (0.0, 0.5)
DEFAULT_TEST_RANGE = (-0.2, 0.7)


class Split(enum.Enum):
    """Which part of an experiment a dataset is used for."""
    TRAIN = "train"
    TEST = "test"


class Dataset:
    """Labeled examples: an ``(N, input_dim)`` feature array and an ``(N, output_dim)`` label array (one-hot rows for
    classification)."""

    def __init__(self, features: np.ndarray, labels: np.ndarray, task: models.Task,
                 split: Split = Split.TRAIN) -> None:
        """Create a dataset.

        :param features: the feature array
        :param labels: the label array; one-hot rows for classification
        :param task: whether labels are classes or regression targets
        :param split: whether this is training or test data
        :raises DataError: if the arrays are malformed, contain NaN, or classification labels are not one-hot
        """
        self._task = models.Task(task)
        self._split = Split(split)
        features = np.array(features, dtype=np.float64, copy=True)
        labels = np.array(labels, dtype=np.float64, copy=True)
        if labels.ndim == 1:
            labels = labels.reshape(-1, 1)
        if features.ndim != 2 or labels.ndim != 2:
            raise DataError(f"features and labels must be 2-D, got {features.shape} and {labels.shape}")
        if features.shape[0] < 1 or features.shape[0] != labels.shape[0]:
            raise DataError(f"features and labels must have the same nonzero number of rows, "
                            f"got {features.shape[0]} and {labels.shape[0]}")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(labels)):
            raise DataError("datasets may not contain NaN or infinite values")
        if self._task == models.Task.CLASSIFICATION:
            one_hot = np.all((labels == 0.0) | (labels == 1.0), axis=1) & (labels.sum(axis=1) == 1.0)
            if not np.all(one_hot):
                raise DataError("classification labels must be one-hot rows", row=int(np.argmin(one_hot)))
        features.setflags(write=False)
        labels.setflags(write=False)
        self._features = features
        self._labels = labels

    def __repr__(self) -> str:
        return (f"{_utils.type_name(type(self))}(n={self.n}, input_dim={self.input_dim}, "
                f"output_dim={self.output_dim}, task={self._task.value!r}, split={self._split.value!r})")

    def __len__(self) -> int:
        return self.n

    @property
    def features(self) -> np.ndarray:
        """Get the (read-only) feature array."""
        return self._features

    @property
    def labels(self) -> np.ndarray:
        """Get the (read-only) label array."""
        return self._labels

    @property
    def task(self) -> models.Task:
        """Get the task of the labels."""
        return self._task

    @property
    def split(self) -> Split:
        """Get the split tag."""
        return self._split

    @property
    def n(self) -> int:
        """Get the number of examples."""
        return self._features.shape[0]

    @property
    def input_dim(self) -> int:
        """Get the number of features per example."""
        return self._features.shape[1]

    @property
    def output_dim(self) -> int:
        """Get the number of label columns (classes for classification)."""
        return self._labels.shape[1]

    def class_indices(self) -> np.ndarray:
        """Get the class index of every example of a classification dataset."""
        if self._task != models.Task.CLASSIFICATION:
            raise DataError("class indices are only defined for classification datasets")
        return np.argmax(self._labels, axis=1)

    def take(self, indices: typing.Sequence[int]) -> "Dataset":
        """Create a dataset from a selection of rows.

        :param indices: the row indices to keep, in order
        :return: the new dataset
        """
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self._features[indices], self._labels[indices], self._task, self._split)

    def subsample(self, limit: int, seed: int = 0) -> "Dataset":
        """Keep at most ``limit`` rows chosen without replacement (original order preserved).

        :param limit: the maximum number of rows to keep
        :param seed: the seed choosing the rows
        :return: this dataset if it is small enough, otherwise the subsample
        """
        if self.n <= limit:
            return self
        rng = np.random.default_rng(seed)
        return self.take(np.sort(rng.choice(self.n, size=limit, replace=False)))

    def with_split(self, split: Split) -> "Dataset":
        """Get the same examples tagged with another split."""
        return Dataset(self._features, self._labels, self._task, split)

    def to_frame(self, label_column: str = "label") -> pd.DataFrame:
        """Convert to a table with feature columns ``x0, x1, ...`` and one label column.  Classification labels are
        written as class indices, regression labels as ``label`` (or ``label0, label1, ...``)."""
        columns: dict[str, np.ndarray] = {f"x{i}": self._features[:, i] for i in range(self.input_dim)}
        if self._task == models.Task.CLASSIFICATION:
            columns[label_column] = self.class_indices()
        elif self.output_dim == 1:
            columns[label_column] = self._labels[:, 0]
        else:
            for i in range(self.output_dim):
                columns[f"{label_column}{i}"] = self._labels[:, i]
        return pd.DataFrame(columns)

    def to_csv(self, filename: str, label_column: str = "label") -> None:
        """Write to a CSV file readable by :func:`load_csv`.

        :param filename: the file to write
        :param label_column: the name of the label column
        """
        _utils.write_csv(self.to_frame(label_column), filename)


# Generators

def noisy_regression_target(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """The noisy one-dimensional regression function ``x + 0.3 sin(2 pi (x + e)) + 0.3 sin(4 pi (x + e)) + e``.

    :param x: the inputs
    :param noise: the noise term ``e`` for every input
    :return: the targets
    """
    shifted = x + noise
    return x + 0.3 * np.sin(2.0 * np.pi * shifted) + 0.3 * np.sin(4.0 * np.pi * shifted) + noise


def gen_noisy_regression(n: int, seed: int, x_range: tuple[float, float] = DEFAULT_TRAIN_RANGE,
                         noise_sd: float = DEFAULT_NOISE_SD, split: Split = Split.TRAIN) -> Dataset:
    """Sample the noisy regression problem with inputs drawn uniformly from ``x_range``.

    :param n: the number of examples
    :param seed: the seed of the sample
    :param x_range: the ``(low, high)`` interval inputs are drawn from
    :param noise_sd: the standard deviation of the Gaussian noise term
    :param split: the split tag of the result
    :return: a regression dataset with one feature and one target
    :raises DataError: if the range is empty, ``n < 1`` or ``noise_sd < 0``
    """
    low, high = (float(v) for v in x_range)
    if not low < high:
        raise DataError(f"regression input range [{low}, {high}] is empty")
    if n < 1:
        raise DataError(f"need at least one example, got {n}")
    if noise_sd < 0.0:
        raise DataError(f"noise standard deviation must be nonnegative, got {noise_sd}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(low, high, size=n)
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0.0 else np.zeros(n)
    y = noisy_regression_target(x, noise)
    return Dataset(x.reshape(-1, 1), y.reshape(-1, 1), models.Task.REGRESSION, split)


def blob_centers(classes: int, input_dim: int, separation: float) -> np.ndarray:
    """Deterministic cluster centers: evenly spaced on a circle of radius ``separation`` in the first two feature
    dimensions (on a line for one-dimensional inputs).

    :return: a ``(classes, input_dim)`` array
    """
    centers = np.zeros((classes, input_dim))
    if input_dim == 1:
        centers[:, 0] = separation * (np.arange(classes) - (classes - 1) / 2.0)
    else:
        angles = 2.0 * np.pi * np.arange(classes) / classes
        centers[:, 0] = separation * np.cos(angles)
        centers[:, 1] = separation * np.sin(angles)
    return centers


def gen_blobs(n: int, classes: int, input_dim: int, separation: float, seed: int,
              split: Split = Split.TRAIN, spread: float = 1.0) -> Dataset:
    """Sample balanced Gaussian clusters around :func:`blob_centers`.

    :param n: the number of examples; class sizes differ by at most one
    :param classes: the number of classes
    :param input_dim: the number of features
    :param separation: the distance of the centers from the origin
    :param seed: the seed of the sample
    :param split: the split tag of the result
    :param spread: the standard deviation of every cluster
    :return: a classification dataset
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    if classes < 2:
        raise DataError(f"blobs need at least 2 classes, got {classes}")
    if n < 1 or input_dim < 1:
        raise DataError(f"need positive example count and input dimension, got {n} and {input_dim}")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % classes)
    features = blob_centers(classes, input_dim, separation)[labels] + rng.normal(0.0, spread, size=(n, input_dim))
    return Dataset(features, np.eye(classes)[labels], models.Task.CLASSIFICATION, split)


def load_csv(filename: str, feature_columns: typing.Sequence[str], label_column: str, task: models.Task,
             classes: typing.Optional[int] = None, split: Split = Split.TRAIN) -> Dataset:
    """Read a dataset from a comma-separated file with a header row.

    :param filename: the file to read
    :param feature_columns: the names of the feature columns, in order
    :param label_column: the name of the label column (class indices for classification)
    :param task: the task of the label column
    :param classes: the number of classes; defaults to one more than the largest class index
    :param split: the split tag of the result
    :return: the dataset, with row order preserved
    :raises DataError: naming the row and column of the first problem
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    task = models.Task(task)
    try:
        frame = pd.read_csv(filename, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"'{filename}' is empty") from exc
    if frame.shape[0] == 0:
        raise DataError(f"'{filename}' has a header but no rows")
    columns = list(feature_columns) + [label_column]
    for column in columns:
        if column not in frame.columns:
            raise DataError(f"'{filename}' has no column '{column}'", column=column)
    numeric = {}
    for column in columns:
        cells = frame[column].str.strip()
        bad = ~np.isfinite(pd.to_numeric(cells, errors="coerce").to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.argmax(bad))
            raise DataError(f"'{filename}': value {frame[column].iloc[row]!r} is not a finite number",
                            row=row + 1, column=column)
        # parse with Python's correctly rounded conversion so written values round-trip exactly
        numeric[column] = cells.to_numpy(dtype=object).astype(np.float64)
    features = np.column_stack([numeric[column] for column in feature_columns]) if feature_columns else None
    if features is None:
        raise DataError("at least one feature column is required")
    target = numeric[label_column]
    if task == models.Task.CLASSIFICATION:
        bad = (target != np.round(target)) | (target < 0)
        if bad.any():
            row = int(np.argmax(bad))
            raise DataError(f"'{filename}': class index {target[row]!r} is not a nonnegative integer",
                            row=row + 1, column=label_column)
        indices = target.astype(np.int64)
        count = int(indices.max()) + 1 if classes is None else classes
        if indices.max() >= count:
            row = int(np.argmax(indices >= count))
            raise DataError(f"'{filename}': class index {indices[row]} exceeds {count} classes",
                            row=row + 1, column=label_column)
        labels = np.eye(max(count, 2))[indices]
    else:
        labels = target.reshape(-1, 1)
    _LOGGER.debug("read %d rows from %s", features.shape[0], filename)
    return Dataset(features, labels, task, split)


# Data configuration

class Generator(enum.Enum):
    """Where the examples of an experiment come from."""
    NOISY_REGRESSION = "noisy_regression"
    BLOBS = "blobs"
    CSV = "csv"


@dataclasses.dataclass(frozen=True)
class DataConfig:
    """The ``data`` section of an experiment: a generator and its parameters, or CSV files."""
    # pylint: disable=too-many-instance-attributes
    generator: Generator = Generator.NOISY_REGRESSION
    n_train: int = 64
    n_test: int = 3000
    seed: int = 0
    noise_sd: float = DEFAULT_NOISE_SD
    x_range: tuple[float, float] = DEFAULT_TRAIN_RANGE
    test_range: tuple[float, float] = DEFAULT_TEST_RANGE
    classes: int = 4
    input_dim: int = 2
    separation: float = 3.0
    spread: float = 1.0
    train_path: typing.Optional[str] = None
    test_path: typing.Optional[str] = None
    feature_columns: tuple[str, ...] = ()
    label_column: str = "label"
    task: models.Task = models.Task.REGRESSION

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "generator", Generator(self.generator))
        except ValueError as exc:
            raise _utils.ConfigError("data.generator", f"must be one of {[g.value for g in Generator]}") from exc
        try:
            object.__setattr__(self, "task", models.Task(self.task))
        except ValueError as exc:
            raise _utils.ConfigError("data.task", f"must be one of {[t.value for t in models.Task]}") from exc
        for name in ("x_range", "test_range", "feature_columns"):
            value = getattr(self, name)
            if isinstance(value, (list, tuple)):
                object.__setattr__(self, name, tuple(value))
        if self.generator == Generator.BLOBS:
            object.__setattr__(self, "task", models.Task.CLASSIFICATION)
        elif self.generator == Generator.NOISY_REGRESSION:
            object.__setattr__(self, "task", models.Task.REGRESSION)

    def validate(self, path: str = "data") -> None:
        """Check the fields relevant to the generator.

        :param path: dotted path of this section, used in error messages
        :raises ConfigError: naming the first invalid field
        """
        _utils.check_config(isinstance(self.n_train, int) and self.n_train >= 1, f"{path}.n_train",
                            f"must be a positive integer, got {self.n_train!r}")
        _utils.check_config(isinstance(self.n_test, int) and self.n_test >= 1, f"{path}.n_test",
                            f"must be a positive integer, got {self.n_test!r}")
        _utils.check_config(isinstance(self.seed, int), f"{path}.seed", f"must be an integer, got {self.seed!r}")
        if self.generator == Generator.NOISY_REGRESSION:
            for name in ("x_range", "test_range"):
                value = getattr(self, name)
                _utils.check_config(isinstance(value, tuple) and len(value) == 2 and value[0] < value[1],
                                    f"{path}.{name}", f"must be an increasing [low, high] pair, got {value!r}")
            _utils.check_config(_is_number(self.noise_sd) and self.noise_sd >= 0.0, f"{path}.noise_sd",
                                f"must be a nonnegative number, got {self.noise_sd!r}")
        elif self.generator == Generator.BLOBS:
            _utils.check_config(isinstance(self.classes, int) and self.classes >= 2, f"{path}.classes",
                                f"must be an integer of at least 2, got {self.classes!r}")
            _utils.check_config(isinstance(self.input_dim, int) and self.input_dim >= 1, f"{path}.input_dim",
                                f"must be a positive integer, got {self.input_dim!r}")
            _utils.check_config(_is_number(self.separation) and self.separation >= 0.0, f"{path}.separation",
                                f"must be a nonnegative number, got {self.separation!r}")
            _utils.check_config(_is_number(self.spread) and self.spread > 0.0, f"{path}.spread",
                                f"must be a positive number, got {self.spread!r}")
        else:
            _utils.check_config(isinstance(self.train_path, str) and bool(self.train_path), f"{path}.train_path",
                                "is required for CSV data")
            _utils.check_config(self.test_path is None or isinstance(self.test_path, str), f"{path}.test_path",
                                "must be a file name")
            _utils.check_config(len(self.feature_columns) >= 1, f"{path}.feature_columns",
                                "must name at least one column")

    @property
    def input_features(self) -> typing.Optional[int]:
        """Get the number of features the generator produces (``None`` for CSV data)."""
        if self.generator == Generator.NOISY_REGRESSION:
            return 1
        if self.generator == Generator.BLOBS:
            return self.input_dim
        return len(self.feature_columns)

    @property
    def outputs(self) -> typing.Optional[int]:
        """Get the label width the generator produces (``None`` when only known after reading CSV data)."""
        if self.generator == Generator.NOISY_REGRESSION:
            return 1
        if self.generator == Generator.BLOBS:
            return self.classes
        return 1 if self.task == models.Task.REGRESSION else None

    def train_set(self, replicate: typing.Optional[int] = None) -> Dataset:
        """Create (or read) the training set.

        :param replicate: when given, draw an independently resampled training set for that replicate
        :return: the training dataset
        """
        seed = _utils.derive_seed(self.seed, 0) if replicate is None else _utils.derive_seed(self.seed, 0, replicate)
        if self.generator == Generator.NOISY_REGRESSION:
            return gen_noisy_regression(self.n_train, seed, self.x_range, self.noise_sd, Split.TRAIN)
        if self.generator == Generator.BLOBS:
            return gen_blobs(self.n_train, self.classes, self.input_dim, self.separation, seed, Split.TRAIN,
                             self.spread)
        dataset = load_csv(typing.cast(str, self.train_path), self.feature_columns, self.label_column, self.task,
                           split=Split.TRAIN)
        if replicate is None:
            return dataset
        rng = np.random.default_rng(seed)
        return dataset.take(rng.integers(0, dataset.n, size=dataset.n))

    def test_set(self, classes: typing.Optional[int] = None) -> Dataset:
        """Create (or read) the fixed test set.

        :param classes: the number of classes of CSV classification data (taken from the training set)
        :return: the test dataset
        """
        seed = _utils.derive_seed(self.seed, 1)
        if self.generator == Generator.NOISY_REGRESSION:
            return gen_noisy_regression(self.n_test, seed, self.test_range, self.noise_sd, Split.TEST)
        if self.generator == Generator.BLOBS:
            return gen_blobs(self.n_test, self.classes, self.input_dim, self.separation, seed, Split.TEST,
                             self.spread)
        if self.test_path is None:
            _LOGGER.warning("no test_path given; evaluating on the training file")
        return load_csv(self.test_path or typing.cast(str, self.train_path), self.feature_columns, self.label_column,
                        self.task, classes=classes, split=Split.TEST)

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        result: dict[str, typing.Any] = {}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if isinstance(value, enum.Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            result[field.name] = value
        return result

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any], path: str = "data") -> "DataConfig":
        """Create a validated configuration from a dictionary, rejecting unknown keys.

        :param data: the dictionary
        :param path: dotted path of this section, used in error messages
        :return: the configuration
        """
        _utils.reject_unknown_keys(data, [f.name for f in dataclasses.fields(cls)], path)
        config = cls(**data)
        config.validate(path)
        return config


def _is_number(value: typing.Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


# Sampling

@dataclasses.dataclass(frozen=True)
class SamplingConfig:
    """How M-tuple training batches are drawn."""
    batch_size: int = 32
    ensemble_size: int = 1
    input_repetition_probability: float = 0.0
    batch_repetitions: int = 1
    seed: int = 0

    def validate(self, path: str = "sampling") -> None:
        """Check the invariants of this configuration.

        :param path: dotted path of this section, used in error messages
        :raises ConfigError: naming the first invalid field
        """
        _utils.check_config(isinstance(self.batch_size, int) and self.batch_size >= 1, f"{path}.batch_size",
                            f"must be a positive integer, got {self.batch_size!r}")
        _utils.check_config(isinstance(self.ensemble_size, int) and self.ensemble_size >= 1, f"{path}.ensemble_size",
                            f"must be a positive integer, got {self.ensemble_size!r}")
        rho = self.input_repetition_probability
        _utils.check_config(_is_number(rho) and 0.0 <= rho <= 1.0, f"{path}.input_repetition_probability",
                            f"must be in [0, 1], got {rho!r}")
        _utils.check_config(isinstance(self.batch_repetitions, int) and self.batch_repetitions >= 1,
                            f"{path}.batch_repetitions", f"must be a positive integer, got {self.batch_repetitions!r}")
        _utils.check_config(isinstance(self.seed, int), f"{path}.seed", f"must be an integer, got {self.seed!r}")

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any], path: str = "sampling") -> "SamplingConfig":
        """Create a validated configuration from a dictionary, rejecting unknown keys.

        :param data: the dictionary
        :param path: dotted path of this section, used in error messages
        :return: the configuration
        """
        _utils.reject_unknown_keys(data, [f.name for f in dataclasses.fields(cls)], path)
        config = cls(**data)
        config.validate(path)
        return config


@dataclasses.dataclass(frozen=True)
class MimoBatch:
    """One training step's worth of data: M feature arrays and M label arrays with identical row counts.
    ``indices[m]`` holds the dataset rows drawn for slot ``m``."""
    features: tuple[np.ndarray, ...]
    labels: tuple[np.ndarray, ...]
    indices: np.ndarray

    @property
    def ensemble_size(self) -> int:
        """Get the number of slots M."""
        return len(self.features)

    @property
    def rows(self) -> int:
        """Get the number of rows in every slot."""
        return self.features[0].shape[0]


def sample_mimo_batch(dataset: Dataset, config: SamplingConfig, rng: np.random.Generator) -> MimoBatch:
    """Draw one M-tuple batch.

    Slot 0 draws ``batch_size`` rows uniformly with replacement.  For every other slot, each row copies slot 0's
    example with probability ``input_repetition_probability`` and is otherwise an independent uniform draw.  Every
    row is then repeated ``batch_repetitions`` times, contiguously.

    :param dataset: the training data
    :param config: the sampling configuration
    :param rng: the random generator to draw from (advanced in place)
    :return: the batch
    """
    config.validate()
    if dataset.n < 1:
        raise DataError("cannot sample from an empty dataset")
    base = rng.integers(0, dataset.n, size=config.batch_size)
    slots = [base]
    for _ in range(1, config.ensemble_size):
        repeat = rng.random(config.batch_size) < config.input_repetition_probability
        fresh = rng.integers(0, dataset.n, size=config.batch_size)
        slots.append(np.where(repeat, base, fresh))
    indices = np.repeat(np.stack(slots), config.batch_repetitions, axis=1)
    return MimoBatch(tuple(np.array(dataset.features[row]) for row in indices),
                     tuple(np.array(dataset.labels[row]) for row in indices), indices)


class MimoSampler:
    """A stream of M-tuple batches that owns its random state.  Samplers are not shared between threads; use
    :meth:`clone` to derive independent streams for parallel replicates."""

    def __init__(self, dataset: Dataset, config: SamplingConfig) -> None:
        config.validate()
        self._dataset = dataset
        self._config = config
        self._rng = np.random.default_rng(config.seed)

    def __repr__(self) -> str:
        return f"{_utils.type_name(type(self))}({self._dataset!r}, {self._config!r})"

    @property
    def config(self) -> SamplingConfig:
        """Get the sampling configuration."""
        return self._config

    def sample(self) -> MimoBatch:
        """Draw the next batch."""
        return sample_mimo_batch(self._dataset, self._config, self._rng)

    def state(self) -> dict[str, typing.Any]:
        """Get a JSON-compatible descriptor of the random state."""
        return _utils.to_jsonable(self._rng.bit_generator.state)

    def clone(self, key: int) -> "MimoSampler":
        """Create a sampler over the same data with a seed derived from this sampler's seed and ``key``."""
        return MimoSampler(self._dataset, dataclasses.replace(self._config,
                                                              seed=_utils.derive_seed(self._config.seed, key)))


# Exceptions

class DataError(_utils.MimoError):
    """An exception that is raised when data is malformed.  ``row`` (1-based data row) and ``column`` locate the
    problem when known."""

    def __init__(self, message: str, row: typing.Optional[int] = None, column: typing.Optional[str] = None) -> None:
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.message = message
        self.row = row
        self.column = column

    def __reduce__(self):
        return type(self), (self.message, self.row, self.column)
