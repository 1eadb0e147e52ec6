# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Configuration-driven experiments: parsing of experiment documents, run manifests, and the runners behind the
command line interface."""

import dataclasses
import datetime
import enum
import hashlib
import json
import logging
import os
import typing

import numpy as np
import pandas as pd

from mimo import analysis, data, landscape, models, tensor, training, _utils
from mimo.version import __version__


_LOGGER = logging.getLogger(__name__)

OUTPUT_ROOT_VARIABLE = "MIMO_OUTPUT_ROOT"
DEFAULT_OUTPUT_DIR = "mimo-output"
CHECKPOINT_FILE = "checkpoint.mimo"
TRAJECTORY_FILE = "trajectory.npz"
LOSS_CURVE_FILE = "loss_curve.csv"

_UNHASHED_FIELDS = ("output_dir", "workers")


class AnalysisKind(enum.Enum):
    """The analyses available to ``mimo analyze``."""
    DIVERSITY = "diversity"
    INVARIANCE = "invariance"
    SEPARATION = "separation"
    METRICS = "metrics"
    SPARSITY = "sparsity"


class SweepAxis(enum.Enum):
    """The setting varied by ``mimo sweep``."""
    ENSEMBLE_SIZE = "M"
    INPUT_REPETITION = "rho"
    BATCH_REPETITIONS = "batch_repetitions"
    L1 = "l1"
    L2 = "l2"
    WIDTH = "width"


def _section(cls: type, value: typing.Any, path: str) -> typing.Any:
    """Create one of the simple configuration sections below from a dictionary."""
    _utils.reject_unknown_keys(value, [f.name for f in dataclasses.fields(cls)], path)
    try:
        section = cls(**value)
    except (TypeError, ValueError) as exc:
        raise _utils.ConfigError(path, str(exc)) from exc
    section.validate(path)
    return section


def _positive_int(value: typing.Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


@dataclasses.dataclass(frozen=True)
class AnalysisConfig:
    """The ``analysis`` section: estimator settings shared by the analyses, and which analyses ``mimo train`` runs
    on the trained network."""
    # pylint: disable=too-many-instance-attributes
    bins: int = analysis.DEFAULT_BINS
    resamples: int = analysis.DEFAULT_RESAMPLES
    outer_samples: int = analysis.DEFAULT_OUTER_SAMPLES
    inner_samples: typing.Optional[int] = None
    sparsity_threshold: float = analysis.SPARSITY_THRESHOLD
    resolution: int = landscape.DEFAULT_RESOLUTION
    margin: float = landscape.DEFAULT_MARGIN
    max_examples: int = landscape.DEFAULT_MAX_EXAMPLES
    after_train: tuple[AnalysisKind, ...] = ()

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "after_train", tuple(AnalysisKind(kind) for kind in self.after_train))
        except (TypeError, ValueError) as exc:
            raise _utils.ConfigError("analysis.after_train",
                                     f"must list analyses from {[k.value for k in AnalysisKind]}") from exc

    def validate(self, path: str = "analysis") -> None:
        """Check the estimator settings."""
        for name in ("bins", "resamples", "resolution", "max_examples"):
            _utils.check_config(_positive_int(getattr(self, name)), f"{path}.{name}",
                                f"must be a positive integer, got {getattr(self, name)!r}")
        _utils.check_config(_positive_int(self.outer_samples) and self.outer_samples >= 2, f"{path}.outer_samples",
                            f"must be an integer of at least 2, got {self.outer_samples!r}")
        _utils.check_config(self.inner_samples is None or (_positive_int(self.inner_samples) and
                                                           self.inner_samples >= 2),
                            f"{path}.inner_samples", f"must be null or an integer of at least 2, "
                                                     f"got {self.inner_samples!r}")
        _utils.check_config(self.resolution >= 2, f"{path}.resolution", "must be at least 2")
        _utils.check_config(isinstance(self.sparsity_threshold, (int, float)) and self.sparsity_threshold >= 0.0,
                            f"{path}.sparsity_threshold", "must be a nonnegative number")
        _utils.check_config(isinstance(self.margin, (int, float)) and self.margin >= 0.0, f"{path}.margin",
                            "must be a nonnegative number")

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        result = dataclasses.asdict(self)
        result["after_train"] = [kind.value for kind in self.after_train]
        return result


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """The ``sweep`` section: the axis, its values and the replicates per value.  A penalty axis may also name
    ensemble sizes, which sweeps every combination of coefficient and ensemble size."""
    axis: SweepAxis = SweepAxis.ENSEMBLE_SIZE
    values: tuple[float, ...] = ()
    replicates: int = 1
    ensemble_sizes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "axis", SweepAxis(self.axis))
        except ValueError as exc:
            raise _utils.ConfigError("sweep.axis", f"must be one of {[a.value for a in SweepAxis]}") from exc
        for name in ("values", "ensemble_sizes"):
            if isinstance(getattr(self, name), list):
                object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self, path: str = "sweep") -> None:
        """Check the replicate count, that the values are distinct numbers and that ensemble sizes are only given for a
        penalty axis (emptiness is checked when sweeping)."""
        _utils.check_config(_positive_int(self.replicates), f"{path}.replicates",
                            f"must be a positive integer, got {self.replicates!r}")
        _utils.check_config(isinstance(self.values, tuple) and all(
            isinstance(value, (int, float)) and not isinstance(value, bool) for value in self.values),
                            f"{path}.values", "must be a list of numbers")
        _utils.check_config(len(set(self.values)) == len(self.values), f"{path}.values",
                            f"must not repeat a value, got {list(self.values)}")
        _utils.check_config(isinstance(self.ensemble_sizes, tuple) and all(
            _positive_int(size) for size in self.ensemble_sizes), f"{path}.ensemble_sizes",
                            "must be a list of positive integers")
        _utils.check_config(not self.ensemble_sizes or self.axis in (SweepAxis.L1, SweepAxis.L2),
                            f"{path}.ensemble_sizes", f"only applies to the l1 and l2 axes, not {self.axis.value!r}")

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return {"axis": self.axis.value, "values": list(self.values), "replicates": self.replicates,
                "ensemble_sizes": list(self.ensemble_sizes)}


@dataclasses.dataclass(frozen=True)
class BiasVarianceConfig:
    """The ``bias_variance`` section."""
    ensemble_sizes: tuple[int, ...] = (1, 2, 3)
    replicates: int = 20
    vary_seeds: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.ensemble_sizes, list):
            object.__setattr__(self, "ensemble_sizes", tuple(self.ensemble_sizes))

    def validate(self, path: str = "bias_variance") -> None:
        """Check the ensemble sizes (the replicate count is checked by the analysis)."""
        _utils.check_config(isinstance(self.ensemble_sizes, tuple) and len(self.ensemble_sizes) >= 1 and
                            all(_positive_int(size) for size in self.ensemble_sizes), f"{path}.ensemble_sizes",
                            "must be a nonempty list of positive integers")
        _utils.check_config(isinstance(self.replicates, int) and not isinstance(self.replicates, bool),
                            f"{path}.replicates", f"must be an integer, got {self.replicates!r}")
        _utils.check_config(isinstance(self.vary_seeds, bool), f"{path}.vary_seeds", "must be true or false")

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return {"ensemble_sizes": list(self.ensemble_sizes), "replicates": self.replicates,
                "vary_seeds": self.vary_seeds}


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """A complete experiment document."""
    # pylint: disable=too-many-instance-attributes
    data: data.DataConfig
    network: models.NetworkConfig
    sampling: data.SamplingConfig
    optimizer: training.OptimizerConfig
    analysis: AnalysisConfig = AnalysisConfig()
    sweep: SweepConfig = SweepConfig()
    bias_variance: BiasVarianceConfig = BiasVarianceConfig()
    seed: int = 0
    output_dir: str = DEFAULT_OUTPUT_DIR
    workers: int = 1

    @property
    def setup(self) -> training.TrainingSetup:
        """Get the training setup of this experiment."""
        return training.TrainingSetup(self.data, self.network, self.sampling, self.optimizer)

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary with every default filled in."""
        return {
            "data": self.data.to_dict(),
            "network": self.network.to_dict(),
            "sampling": self.sampling.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "analysis": self.analysis.to_dict(),
            "sweep": self.sweep.to_dict(),
            "bias_variance": self.bias_variance.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def config_hash(self) -> str:
        """Get the git-style SHA-1 of the canonical JSON of every field that affects results (the output directory,
        the worker count and the logging interval are excluded)."""
        document = {key: value for key, value in self.to_dict().items() if key not in _UNHASHED_FIELDS}
        document["optimizer"] = {key: value for key, value in document["optimizer"].items() if key != "log_every"}
        encoded = json.dumps(_utils.to_jsonable(document), sort_keys=True, separators=(",", ":")).encode("utf-8")
        digest = hashlib.sha1(b"blob %d\0" % len(encoded))
        digest.update(encoded)
        return digest.hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Get the same experiment with every seed (data, initialization, sampling and replicate seeds) set to
        ``seed``."""
        return dataclasses.replace(self, seed=seed, data=dataclasses.replace(self.data, seed=seed),
                                   network=dataclasses.replace(self.network, init_seed=seed),
                                   sampling=dataclasses.replace(self.sampling, seed=seed))

    @classmethod
    def from_dict(cls, document: typing.Mapping[str, typing.Any]) -> "ExperimentConfig":
        """Create a fully validated experiment from a parsed document.

        Omitted ``network.input_dim``, ``network.output_dim`` and ``network.task`` are taken from the data section
        and an omitted ``sampling.ensemble_size`` from the network section.

        :param document: the parsed JSON document
        :return: the experiment configuration
        :raises ConfigError: naming the first invalid field
        """
        _utils.reject_unknown_keys(document, [f.name for f in dataclasses.fields(cls)], "")
        for name in ("data", "network", "sampling", "optimizer"):
            _utils.check_config(name in document, name, "section is required")
        data_config = data.DataConfig.from_dict(document["data"])
        network_section = dict(_mapping(document["network"], "network"))
        network_section.setdefault("task", data_config.task.value)
        if data_config.input_features is not None:
            network_section.setdefault("input_dim", data_config.input_features)
        if data_config.outputs is not None:
            network_section.setdefault("output_dim", data_config.outputs)
        network = models.NetworkConfig.from_dict(network_section)
        sampling_section = dict(_mapping(document["sampling"], "sampling"))
        sampling_section.setdefault("ensemble_size", network.ensemble_size)
        config = cls(
            data=data_config,
            network=network,
            sampling=data.SamplingConfig.from_dict(sampling_section),
            optimizer=training.OptimizerConfig.from_dict(document["optimizer"]),
            analysis=_section(AnalysisConfig, document.get("analysis", {}), "analysis"),
            sweep=_section(SweepConfig, document.get("sweep", {}), "sweep"),
            bias_variance=_section(BiasVarianceConfig, document.get("bias_variance", {}), "bias_variance"),
            seed=document.get("seed", 0),
            output_dir=document.get("output_dir", DEFAULT_OUTPUT_DIR),
            workers=document.get("workers", 1))
        _utils.check_config(isinstance(config.seed, int) and not isinstance(config.seed, bool), "seed",
                            f"must be an integer, got {config.seed!r}")
        _utils.check_config(isinstance(config.output_dir, str) and bool(config.output_dir), "output_dir",
                            "must be a nonempty string")
        _utils.check_config(_positive_int(config.workers), "workers",
                            f"must be a positive integer, got {config.workers!r}")
        config.setup.validate()
        return config

    @classmethod
    def load(cls, filename: str) -> "ExperimentConfig":
        """Read and validate an experiment document from a JSON file.

        :raises ConfigError: if the file is not valid JSON or fails validation
        :raises OSError: if the file cannot be read
        """
        with open(filename, encoding="utf-8") as file:
            try:
                document = json.load(file)
            except json.JSONDecodeError as exc:
                raise _utils.ConfigError(filename, f"invalid JSON: {exc}") from exc
        return cls.from_dict(document)


def _mapping(value: typing.Any, path: str) -> typing.Mapping[str, typing.Any]:
    _utils.check_config(isinstance(value, typing.Mapping), path, f"must be an object, got {type(value).__name__}")
    return value


# Manifests

def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclasses.dataclass
class RunManifest:
    """The record of one command run: what was run, with which configuration and seeds, and what it produced.
    ``files`` are relative to the output directory."""
    command: str
    config: dict[str, typing.Any]
    config_hash: str
    started: str = dataclasses.field(default_factory=_now)
    finished: typing.Optional[str] = None
    seeds: list[int] = dataclasses.field(default_factory=list)
    files: list[str] = dataclasses.field(default_factory=list)
    library_version: str = __version__

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return dataclasses.asdict(self)

    @classmethod
    def read(cls, filename: str) -> typing.Optional["RunManifest"]:
        """Read a manifest, or return ``None`` if it does not exist or is unreadable."""
        try:
            with open(filename, encoding="utf-8") as file:
                return cls(**json.load(file))
        except (OSError, ValueError, TypeError):
            return None


# Runners

class Experiment:
    """Runs the commands of one experiment, writing every output into its output directory."""

    def __init__(self, config: ExperimentConfig, output_dir: typing.Optional[str] = None) -> None:
        """Create an experiment runner.

        :param config: the experiment configuration
        :param output_dir: overrides the configured output directory; relative directories resolve against
            ``$MIMO_OUTPUT_ROOT`` when it is set
        """
        self._config = config
        directory = output_dir if output_dir is not None else config.output_dir
        root = os.environ.get(OUTPUT_ROOT_VARIABLE)
        if root and not os.path.isabs(directory):
            directory = os.path.join(root, directory)
        self._output_dir = os.path.abspath(directory)

    def __repr__(self) -> str:
        return f"{_utils.type_name(type(self))}(output_dir={self._output_dir!r})"

    @property
    def config(self) -> ExperimentConfig:
        """Get the experiment configuration."""
        return self._config

    @property
    def output_dir(self) -> str:
        """Get the absolute output directory."""
        return self._output_dir

    def path(self, name: str) -> str:
        """Get the absolute path of an output file."""
        return os.path.join(self._output_dir, name)

    def _start(self, command: str) -> RunManifest:
        os.makedirs(self._output_dir, exist_ok=True)
        return RunManifest(command, self._config.to_dict(), self._config.config_hash())

    def _manifest_file(self, command: str) -> str:
        return self.path(f"manifest-{command}.json")

    def _up_to_date(self, command: str) -> typing.Optional[RunManifest]:
        previous = RunManifest.read(self._manifest_file(command))
        if previous is None or previous.finished is None or previous.config_hash != self._config.config_hash():
            return None
        if not all(os.path.exists(self.path(name)) for name in previous.files):
            return None
        _LOGGER.info("%s outputs in %s are up to date", command, self._output_dir)
        return previous

    def _finish(self, manifest: RunManifest) -> RunManifest:
        manifest.finished = _now()
        _utils.write_json(manifest.to_dict(), self._manifest_file(manifest.command))
        return manifest

    def _write_report(self, manifest: RunManifest, stem: str, report: typing.Any) -> None:
        _utils.write_json(report.to_dict(), self.path(f"{stem}.json"))
        _utils.write_csv(report.to_frame(), self.path(f"{stem}.csv"))
        manifest.files.extend([f"{stem}.json", f"{stem}.csv"])

    def train(self) -> RunManifest:
        """Train the configured network and write the checkpoint, the loss curve and the trajectory log (when
        snapshots are enabled), followed by the ``analysis.after_train`` reports.

        :return: the manifest of the run
        """
        previous = self._up_to_date("train")
        if previous is not None:
            return previous
        manifest = self._start("train")
        config = self._config
        manifest.seeds = [config.data.seed, config.network.init_seed, config.sampling.seed]
        result = config.setup.run()
        training.save_checkpoint(result.network, self.path(CHECKPOINT_FILE), result.steps, result.sampler_state)
        manifest.files.append(CHECKPOINT_FILE)
        steps = np.arange(result.steps)
        curve = pd.DataFrame({"step": steps, "loss": result.loss_curve,
                              "learning_rate": [config.optimizer.learning_rate_at(int(s)) for s in steps]})
        _utils.write_csv(curve, self.path(LOSS_CURVE_FILE))
        manifest.files.append(LOSS_CURVE_FILE)
        if len(result.trajectory):
            result.trajectory.save(self.path(TRAJECTORY_FILE))
            manifest.files.append(TRAJECTORY_FILE)
        for kind in config.analysis.after_train:
            self._write_report(manifest, kind.value, self._analysis_report(kind, result.network))
        return self._finish(manifest)

    def _checkpoint(self, checkpoint: typing.Optional[str]) -> str:
        return checkpoint if checkpoint is not None else self.path(CHECKPOINT_FILE)

    def _analysis_report(self, kind: AnalysisKind, net: models.Network) -> typing.Any:
        # pylint: disable=too-many-return-statements
        config = self._config
        settings = config.analysis
        test_set = analysis.fixed_test_set(config.setup)
        if kind == AnalysisKind.DIVERSITY:
            return analysis.pairwise_diversity(net, test_set)
        if kind == AnalysisKind.METRICS:
            return analysis.metrics(net, [config.data.train_set(), test_set], settings.bins)
        if kind == AnalysisKind.SPARSITY:
            coefficient = config.optimizer.l1 if config.optimizer.l1 > 0.0 else config.optimizer.l2
            return analysis.sparsity(net, settings.sparsity_threshold,
                                     test_set if net.config.task == models.Task.CLASSIFICATION else None,
                                     coefficient)
        train_set = config.data.train_set().subsample(settings.max_examples, config.seed)
        if kind == AnalysisKind.INVARIANCE:
            return analysis.invariance(net, [train_set, test_set.subsample(settings.max_examples, config.seed)],
                                       resamples=settings.resamples, seed=config.seed)
        return analysis.conditional_variances(net, train_set, settings.outer_samples, settings.inner_samples,
                                              config.seed)

    def analyze(self, kind: typing.Union[AnalysisKind, str], checkpoint: typing.Optional[str] = None) -> RunManifest:
        """Run one analysis on a checkpoint and write ``<kind>.json`` and ``<kind>.csv``.

        :param kind: the analysis to run
        :param checkpoint: the checkpoint file, defaulting to the one ``train`` writes
        :return: the manifest of the run
        """
        kind = AnalysisKind(kind)
        net = training.load_checkpoint(self._checkpoint(checkpoint)).network
        manifest = self._start(f"analyze-{kind.value}")
        manifest.seeds = [self._config.seed]
        self._write_report(manifest, kind.value, self._analysis_report(kind, net))
        return self._finish(manifest)

    def sweep(self) -> RunManifest:
        """Train every value of the sweep axis for every replicate and write ``sweep-<axis>.csv``: one row per cell
        followed by mean and standard deviation rows per value.  Completed cells are kept in a progress file, so an
        interrupted sweep resumes where it stopped.

        When the section names ensemble sizes, the penalty axis is instead swept against them and
        ``sweep-<axis>-M.csv`` holds one row of replicate averages per coefficient and ensemble size.

        :return: the manifest of the run
        :raises ConfigError: if there are no values or a value does not apply to the configuration
        """
        previous = self._up_to_date("sweep")
        if previous is not None:
            return previous
        config = self._config
        sweep = config.sweep
        _utils.check_config(len(sweep.values) >= 1, "sweep.values", "must not be empty")
        setups = [self._sweep_setup(value) for value in sweep.values]
        manifest = self._start("sweep")
        if sweep.ensemble_sizes:
            return self._regularization_sweep(manifest)
        stem = f"sweep-{sweep.axis.value}"
        progress_file = self.path(f"{stem}.progress.json")
        done = self._read_progress(progress_file)
        keys = [_utils.derive_seed(config.seed, r) for r in range(sweep.replicates)]
        manifest.seeds = keys
        cells = [(i, r) for i in range(len(setups)) for r in range(sweep.replicates)]
        pending = [cell for cell in cells if _cell_key(*cell) not in done]
        if len(pending) < len(cells):
            _LOGGER.info("resuming sweep: %d of %d cells already done", len(cells) - len(pending), len(cells))
        test_sets = [analysis.fixed_test_set(setup) for setup in setups]
        for start in range(0, len(pending), config.workers):
            batch = pending[start:start + config.workers]
            tasks = [(setups[i], f"{sweep.axis.value}={sweep.values[i]!r}", r, keys[r], test_sets[i])
                     for i, r in batch]
            for (i, r), summary in zip(batch, _utils.run_ordered(_sweep_cell, tasks, config.workers)):
                _LOGGER.info("sweep %s=%r replicate %d: %s", sweep.axis.value, sweep.values[i], r, summary)
                done[_cell_key(i, r)] = summary
            _utils.write_json({"config_hash": config.config_hash(), "cells": done}, progress_file)
        if not pending:
            _utils.write_json({"config_hash": config.config_hash(), "cells": done}, progress_file)
        manifest.files.append(os.path.basename(progress_file))

        rows = []
        for i, value in enumerate(sweep.values):
            block = [{"axis": sweep.axis.value, "value": value, "row": "cell", "replicate": r,
                      **done[_cell_key(i, r)]} for r in range(sweep.replicates)]
            rows.extend(block)
            numbers = pd.DataFrame(block).drop(columns=["axis", "value", "row", "replicate"])
            for statistic, summary in (("mean", numbers.mean()), ("std", numbers.std())):
                rows.append({"axis": sweep.axis.value, "value": value, "row": statistic, "replicate": None,
                             **summary.to_dict()})
        _utils.write_csv(pd.DataFrame(rows), self.path(f"{stem}.csv"))
        manifest.files.append(f"{stem}.csv")
        return self._finish(manifest)

    def _read_progress(self, filename: str) -> dict[str, dict[str, float]]:
        try:
            with open(filename, encoding="utf-8") as file:
                progress = json.load(file)
        except (OSError, ValueError):
            return {}
        if progress.get("config_hash") != self._config.config_hash():
            _LOGGER.warning("ignoring progress file %s written for another configuration", filename)
            return {}
        return {key: {name: np.nan if value is None else value for name, value in summary.items()}
                for key, summary in progress.get("cells", {}).items()}

    def _regularization_sweep(self, manifest: RunManifest) -> RunManifest:
        sweep = self._config.sweep
        manifest.seeds = list(range(sweep.replicates))
        table = analysis.regularization_sweep(self._config.setup, sweep.axis.value, sweep.values, sweep.ensemble_sizes,
                                              sweep.replicates, self._config.workers)
        filename = f"sweep-{sweep.axis.value}-M.csv"
        _utils.write_csv(table, self.path(filename))
        manifest.files.append(filename)
        return self._finish(manifest)

    def _sweep_setup(self, value: float) -> training.TrainingSetup:
        axis = self._config.sweep.axis
        setup = self._config.setup
        path = f"sweep.values[{self._config.sweep.values.index(value)}]"
        if axis in (SweepAxis.ENSEMBLE_SIZE, SweepAxis.BATCH_REPETITIONS):
            _utils.check_config(float(value).is_integer() and value >= 1, path,
                                f"{axis.value} values must be positive integers, got {value!r}")
        if axis == SweepAxis.ENSEMBLE_SIZE:
            setup = analysis.with_ensemble_size(setup, int(value))
        elif axis == SweepAxis.INPUT_REPETITION:
            setup = dataclasses.replace(setup, sampling=dataclasses.replace(
                setup.sampling, input_repetition_probability=float(value)))
        elif axis == SweepAxis.BATCH_REPETITIONS:
            setup = dataclasses.replace(setup, sampling=dataclasses.replace(setup.sampling,
                                                                           batch_repetitions=int(value)))
        elif axis == SweepAxis.WIDTH:
            _utils.check_config(value > 0, path, f"width multipliers must be positive, got {value!r}")
            widths = tuple(max(1, int(round(width * value))) for width in setup.network.hidden_widths)
            setup = dataclasses.replace(setup, network=dataclasses.replace(setup.network, hidden_widths=widths))
        else:
            setup = dataclasses.replace(setup, optimizer=dataclasses.replace(
                setup.optimizer, **{"l1": 0.0, "l2": 0.0, axis.value: float(value)}))
        try:
            setup.validate()
        except _utils.ConfigError as exc:
            raise _utils.ConfigError(path, f"{axis.value}={value!r} does not apply: {exc}") from exc
        return setup

    def bias_variance(self) -> RunManifest:
        """Run the bias-variance decomposition for every configured ensemble size and write
        ``bias_variance.json`` and ``bias_variance.csv``.

        :return: the manifest of the run
        """
        config = self._config
        settings = config.bias_variance
        manifest = self._start("bias-variance")
        manifest.seeds = [_utils.derive_seed(config.seed, r) if settings.vary_seeds else config.seed
                          for r in range(max(settings.replicates, 0))]
        report = analysis.bias_variance(config.setup, settings.replicates, config.seed, settings.ensemble_sizes,
                                        config.workers, settings.vary_seeds)
        self._write_report(manifest, "bias_variance", report)
        return self._finish(manifest)

    def landscape(self, checkpoint: typing.Optional[str] = None,
                  resolution: typing.Optional[int] = None) -> RunManifest:
        """Compute the plane section of a three-subnetwork checkpoint and write ``landscape.json`` (anchors and
        origin), ``landscape_grid.csv`` and ``landscape_anchors.csv``; when a trajectory log is stored next to the
        checkpoint, also write ``trajectory_projection.csv``.

        :param checkpoint: the checkpoint file, defaulting to the one ``train`` writes
        :param resolution: overrides ``analysis.resolution``
        :return: the manifest of the run
        """
        config = self._config
        settings = config.analysis
        filename = self._checkpoint(checkpoint)
        net = training.load_checkpoint(filename).network
        manifest = self._start("landscape")
        manifest.seeds = [config.seed]
        report = landscape.plane_section(net, analysis.fixed_test_set(config.setup),
                                         resolution if resolution is not None else settings.resolution,
                                         settings.margin, settings.max_examples, config.workers, config.seed)
        _utils.write_json(report.to_dict(), self.path("landscape.json"))
        _utils.write_csv(report.cells, self.path("landscape_grid.csv"))
        _utils.write_csv(report.anchors, self.path("landscape_anchors.csv"))
        manifest.files.extend(["landscape.json", "landscape_grid.csv", "landscape_anchors.csv"])
        trajectory_file = os.path.join(os.path.dirname(os.path.abspath(filename)), TRAJECTORY_FILE)
        if os.path.exists(trajectory_file):
            projection = landscape.project_trajectories(training.TrajectoryLog.load(trajectory_file))
            _utils.write_csv(projection.to_frame(), self.path("trajectory_projection.csv"))
            manifest.files.append("trajectory_projection.csv")
        return self._finish(manifest)


def _cell_key(value_index: int, replicate: int) -> str:
    return f"{value_index}/{replicate}"


def _sweep_cell(task: tuple[training.TrainingSetup, str, int, int, data.Dataset]) -> dict[str, float]:
    setup, label, replicate, key, test_set = task
    try:
        return analysis.summarize_trial(setup, key, test_set)
    except (training.TrainingError, tensor.NumericOverflowError) as exc:
        raise analysis.ReplicateError(replicate, f"sweep cell {label}: {exc}") from exc
