"""Helpers shared by the unit tests."""


import inspect
import json
import os
import typing

import numpy as np

from mimo import data, models


def get_test_data_file(name: str) -> str:
    """Determine the filename of a test data file.  It is possible for the data files to be separated from the
    ``mimo.test.files`` package, for instance when testing an installed wheel; to look in an alternate location, set
    the ``TEST_FILES_DIR`` environment variable.

    :param name: the basename of the test file
    :return: the full filename of the test file
    """
    test_dir, _ = os.path.split(inspect.stack()[1].filename)
    files_dir = os.getenv("TEST_FILES_DIR", os.path.join(test_dir, "files"))
    return os.path.join(files_dir, name)


def slow_tests_enabled() -> bool:
    """Whether the long-running trend checks should run (``MIMO_SLOW_TESTS=1``)."""
    return os.getenv("MIMO_SLOW_TESTS", "") == "1"


def small_network(architecture: models.Architecture = models.Architecture.MIMO, ensemble_size: int = 2,
                  task: models.Task = models.Task.CLASSIFICATION, input_dim: int = 2, output_dim: int = 3,
                  hidden_widths: tuple[int, ...] = (5, 4), init_seed: int = 0) -> models.Network:
    """Build a small randomly initialized network."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    return models.build_network(models.NetworkConfig(ensemble_size, input_dim, hidden_widths, output_dim, task,
                                                     architecture, init_seed))


def tiny_blobs(n: int = 30, classes: int = 3, input_dim: int = 2, seed: int = 0,
               split: data.Split = data.Split.TEST) -> data.Dataset:
    """A small well separated classification dataset."""
    return data.gen_blobs(n, classes, input_dim, 4.0, seed, split)


def random_probabilities(rng: np.random.Generator, rows: int, classes: int) -> np.ndarray:
    """Rows of strictly positive probabilities."""
    values = rng.random((rows, classes)) + 1e-3
    return values / values.sum(axis=1, keepdims=True)


def blobs_config(n_train: int = 40, n_test: int = 30, classes: int = 3, seed: int = 2) -> data.DataConfig:
    """A small blob data configuration with two features."""
    return data.DataConfig(generator=data.Generator.BLOBS, n_train=n_train, n_test=n_test, classes=classes, seed=seed)


def sampling_config(ensemble_size: int, batch_size: int = 8, input_repetition_probability: float = 0.0) \
        -> data.SamplingConfig:
    """Batch settings for a small training run."""
    return data.SamplingConfig(batch_size=batch_size, ensemble_size=ensemble_size,
                               input_repetition_probability=input_repetition_probability)


def experiment_document(ensemble_size: int = 3, steps: int = 12, **overrides: typing.Any) -> dict[str, typing.Any]:
    """A small blob classification experiment document; top-level keys in ``overrides`` replace whole sections."""
    document: dict[str, typing.Any] = {
        "data": {"generator": "blobs", "n_train": 40, "n_test": 30, "classes": 3, "seed": 2},
        "network": {"ensemble_size": ensemble_size, "hidden_widths": [6]},
        "sampling": {"batch_size": 8},
        "optimizer": {"learning_rate": 0.05, "steps": steps},
        "analysis": {"max_examples": 20, "resolution": 3, "outer_samples": 4, "inner_samples": 10, "resamples": 2},
    }
    document.update(overrides)
    return document


def regression_document(**overrides: typing.Any) -> dict[str, typing.Any]:
    """A small noisy regression experiment document."""
    document: dict[str, typing.Any] = {
        "data": {"generator": "noisy_regression", "n_train": 16, "n_test": 40},
        "network": {"ensemble_size": 1, "hidden_widths": [8]},
        "sampling": {"batch_size": 8},
        "optimizer": {"learning_rate": 0.05, "steps": 20},
        "bias_variance": {"ensemble_sizes": [1, 2], "replicates": 2},
    }
    document.update(overrides)
    return document


def write_document(document: typing.Mapping[str, typing.Any], directory: str, name: str = "experiment.json") -> str:
    """Write an experiment document into a directory and return its filename."""
    filename = os.path.join(directory, name)
    with open(filename, "w", encoding="utf-8") as file:
        json.dump(document, file)
    return filename
