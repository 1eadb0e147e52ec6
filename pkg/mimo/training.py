# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Training and evaluation of multi-input multi-output networks: the summed per-head loss, stochastic gradient descent
with a piecewise-constant schedule and L1/L2 penalties, checkpoints, and prediction trajectories."""

import dataclasses
import json
import logging
import math
import typing

import numpy as np
from packaging import version as pkg_version

from mimo import data, models, tensor, _utils
from mimo.version import __version__


_LOGGER = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MIMO"
CHECKPOINT_VERSION = 1
_HEADER_LENGTH_BYTES = 4
_PAYLOAD_DTYPE = np.dtype("<f8")

DEFAULT_DECAY = 0.1
SNAPSHOT_EXAMPLES = 500


@dataclasses.dataclass(frozen=True)
class OptimizerConfig:
    """Plain stochastic gradient descent settings.

    ``schedule`` lists ``(step, multiplier)`` pairs with strictly increasing steps; the learning rate at step ``t`` is
    ``learning_rate`` times the product of every multiplier whose step is at most ``t``.  When ``schedule`` is
    ``None``, the rate drops by 0.1 at half and again at three quarters of ``steps``.
    """
    # pylint: disable=too-many-instance-attributes
    learning_rate: float = 0.1
    steps: int = 1000
    schedule: typing.Optional[tuple[tuple[int, float], ...]] = None
    l1: float = 0.0
    l2: float = 0.0
    snapshot_every: int = 0
    log_every: int = 100

    def __post_init__(self) -> None:
        if self.schedule is not None:
            try:
                object.__setattr__(self, "schedule", tuple((point[0], point[1]) for point in self.schedule))
            except (TypeError, IndexError, KeyError) as exc:
                raise _utils.ConfigError("optimizer.schedule", "must be a list of [step, multiplier] pairs") from exc

    def validate(self, path: str = "optimizer") -> None:
        """Check the invariants of this configuration.

        :param path: dotted path of this section, used in error messages
        :raises ConfigError: naming the first invalid field
        """
        _utils.check_config(_is_real(self.learning_rate) and self.learning_rate > 0.0, f"{path}.learning_rate",
                            f"must be a positive number, got {self.learning_rate!r}")
        _utils.check_config(_is_int(self.steps) and self.steps >= 0, f"{path}.steps",
                            f"must be a nonnegative integer, got {self.steps!r}")
        _utils.check_config(_is_real(self.l1) and self.l1 >= 0.0, f"{path}.l1",
                            f"must be a nonnegative number, got {self.l1!r}")
        _utils.check_config(_is_real(self.l2) and self.l2 >= 0.0, f"{path}.l2",
                            f"must be a nonnegative number, got {self.l2!r}")
        _utils.check_config(_is_int(self.snapshot_every) and self.snapshot_every >= 0, f"{path}.snapshot_every",
                            f"must be a nonnegative integer, got {self.snapshot_every!r}")
        _utils.check_config(_is_int(self.log_every) and self.log_every >= 1, f"{path}.log_every",
                            f"must be a positive integer, got {self.log_every!r}")
        if self.schedule is not None:
            previous = -1
            for i, (step, multiplier) in enumerate(self.schedule):
                _utils.check_config(_is_int(step) and step > previous, f"{path}.schedule[{i}]",
                                    "steps must be nonnegative integers in strictly increasing order")
                _utils.check_config(_is_real(multiplier) and multiplier > 0.0, f"{path}.schedule[{i}]",
                                    f"multiplier must be a positive number, got {multiplier!r}")
                previous = step

    def decay_points(self) -> list[tuple[int, float]]:
        """Get the effective ``(step, multiplier)`` schedule."""
        if self.schedule is not None:
            return list(self.schedule)
        points = sorted({self.steps // 2, (3 * self.steps) // 4} - {0})
        return [(point, DEFAULT_DECAY) for point in points]

    def learning_rate_at(self, step: int) -> float:
        """Get the learning rate used for the update at ``step`` (0-based)."""
        rate = float(self.learning_rate)
        for point, multiplier in self.decay_points():
            if point <= step:
                rate *= multiplier
        return rate

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        result = dataclasses.asdict(self)
        result["schedule"] = None if self.schedule is None else [list(point) for point in self.schedule]
        return result

    @classmethod
    def from_dict(cls, data_: typing.Mapping[str, typing.Any], path: str = "optimizer") -> "OptimizerConfig":
        """Create a validated configuration from a dictionary, rejecting unknown keys.

        :param data_: the dictionary
        :param path: dotted path of this section, used in error messages
        :return: the configuration
        """
        _utils.reject_unknown_keys(data_, [f.name for f in dataclasses.fields(cls)], path)
        config = cls(**data_)
        config.validate(path)
        return config


def _is_int(value: typing.Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _is_real(value: typing.Any) -> bool:
    return isinstance(value, (int, float, np.number)) and not isinstance(value, bool) and math.isfinite(value)


# Loss

@dataclasses.dataclass(frozen=True)
class LossGraph:
    """A graph holding the full training loss of one batch."""
    graph: tensor.Graph
    loss: int
    head_losses: list[int]
    parameters: dict[str, int]

    @property
    def value(self) -> float:
        """Get the value of the total loss."""
        return self.graph.value(self.loss).item()

    def head_values(self) -> list[float]:
        """Get the data term of every head."""
        return [self.graph.value(node).item() for node in self.head_losses]

    def gradients(self) -> dict[str, np.ndarray]:
        """Backpropagate the total loss and return the gradient of every parameter, keyed by name."""
        grads = self.graph.backpropagate(self.loss)
        return {name: grads[node].data for name, node in self.parameters.items()}


def compute_loss(net: models.Network, batch: data.MimoBatch, l1: float = 0.0, l2: float = 0.0) -> LossGraph:
    """Build the training loss of a batch: the sum over heads of the batch-mean negative log-likelihood (classification)
    or squared error summed over outputs (regression) of head ``m`` against the labels of slot ``m``, plus
    ``l2 * ||theta||^2 + l1 * ||theta||_1`` over every parameter.

    Architectures with a single input slot read slot 0 and train every head on slot 0's labels.

    :param net: the network
    :param batch: the batch; its slot count must equal the network's ensemble size
    :param l1: the L1 penalty coefficient
    :param l2: the L2 penalty coefficient
    :return: the loss graph, ready for backpropagation
    :raises NonFiniteLossError: if a head's loss (or the shared forward pass) is not finite
    """
    config = net.config
    if batch.ensemble_size != config.heads:
        raise TrainingError(f"batch has {batch.ensemble_size} slots, network has {config.heads} heads")
    graph = tensor.Graph()
    slots = range(config.input_slots)
    try:
        inputs = [graph.constant(batch.features[m]) for m in slots]
        nodes = models.build_forward(graph, net, inputs, trainable=True)
    except tensor.NumericOverflowError as exc:
        raise NonFiniteLossError(None) from exc
    scale = 1.0 / batch.rows
    head_losses = []
    for m, head in enumerate(nodes.heads):
        labels = batch.labels[m if config.input_slots == config.heads else 0]
        try:
            target = graph.constant(labels)
            if config.task == models.Task.CLASSIFICATION:
                term = graph.scale(graph.sum(graph.multiply(target, graph.log_softmax(head))), -scale)
            else:
                term = graph.scale(graph.sum(graph.square(graph.subtract(head, target))), scale)
        except tensor.NumericOverflowError as exc:
            raise NonFiniteLossError(m) from exc
        head_losses.append(term)
    try:
        total = head_losses[0]
        for term in head_losses[1:]:
            total = graph.add(total, term)
        parameters = graph.parameter_ids
        if l2 > 0.0:
            total = graph.add(total, graph.scale(_penalty(graph, parameters.values(), graph.square), l2))
        if l1 > 0.0:
            total = graph.add(total, graph.scale(_penalty(graph, parameters.values(), graph.abs), l1))
    except tensor.NumericOverflowError as exc:
        raise NonFiniteLossError(None) from exc
    return LossGraph(graph, total, head_losses, parameters)


def _penalty(graph: tensor.Graph, nodes: typing.Iterable[int], transform: typing.Callable[[int], int]) -> int:
    total = None
    for node in nodes:
        term = graph.sum(transform(node))
        total = term if total is None else graph.add(total, term)
    if total is None:
        return graph.constant(0.0)
    return total


# Trajectories

class TrajectoryLog:
    """Snapshots of every head's predictions on a fixed evaluation set.  Each snapshot has shape
    ``(heads, examples, outputs)``."""

    def __init__(self) -> None:
        self._steps: list[int] = []
        self._snapshots: list[np.ndarray] = []

    def __repr__(self) -> str:
        return f"<{_utils.type_name(type(self))} snapshots={len(self._steps)}>"

    def __len__(self) -> int:
        return len(self._steps)

    def append(self, step: int, predictions: np.ndarray) -> None:
        """Record the predictions at a step.

        :param step: the number of updates applied so far
        :param predictions: the ``(heads, examples, outputs)`` prediction array
        :raises TrainingError: if the shape differs from earlier snapshots
        """
        predictions = np.array(predictions, dtype=np.float64, copy=True)
        if predictions.ndim != 3:
            raise TrainingError(f"snapshots must be 3-D, got shape {predictions.shape}")
        if self._snapshots and predictions.shape != self._snapshots[0].shape:
            raise TrainingError(f"snapshot shape {predictions.shape} differs from {self._snapshots[0].shape}")
        self._steps.append(int(step))
        self._snapshots.append(predictions)

    @property
    def steps(self) -> np.ndarray:
        """Get the step index of every snapshot."""
        return np.array(self._steps, dtype=np.int64)

    @property
    def snapshots(self) -> np.ndarray:
        """Get all snapshots as one ``(snapshots, heads, examples, outputs)`` array."""
        if not self._snapshots:
            return np.zeros((0, 0, 0, 0))
        return np.stack(self._snapshots)

    @property
    def heads(self) -> int:
        """Get the number of heads recorded (0 for an empty log)."""
        return self._snapshots[0].shape[0] if self._snapshots else 0

    def save(self, filename: str) -> None:
        """Write the log to an ``.npz`` file."""
        with _utils.atomic_write(filename, "wb") as file:
            np.savez(file, steps=self.steps, snapshots=self.snapshots)

    @classmethod
    def load(cls, filename: str) -> "TrajectoryLog":
        """Read a log written by :meth:`save`."""
        log = cls()
        with np.load(filename) as archive:
            steps = archive["steps"]
            snapshots = archive["snapshots"]
        for step, snapshot in zip(steps, snapshots):
            log.append(int(step), snapshot)
        return log


# Training

@dataclasses.dataclass(frozen=True)
class TrainingResult:
    """The outcome of :func:`train`."""
    network: models.Network
    loss_curve: np.ndarray
    trajectory: TrajectoryLog
    sampler_state: dict[str, typing.Any]

    @property
    def steps(self) -> int:
        """Get the number of updates applied."""
        return len(self.loss_curve)


def _check_data_fits(net: models.Network, dataset: data.Dataset) -> None:
    config = net.config
    if dataset.task != config.task:
        raise TrainingError(f"{dataset.task.value} data cannot train a {config.task.value} network")
    if dataset.input_dim != config.input_dim or dataset.output_dim != config.output_dim:
        raise TrainingError(f"data has {dataset.input_dim} features and {dataset.output_dim} label columns, "
                            f"network expects {config.input_dim} and {config.output_dim}")


def train(net: models.Network, dataset: data.Dataset, sampling: data.SamplingConfig, optimizer: OptimizerConfig,
          snapshot_data: typing.Optional[data.Dataset] = None) -> TrainingResult:
    """Run ``optimizer.steps`` stochastic gradient descent updates ``theta <- theta - lr * grad L(theta)``.

    The loss of every step is recorded before its update.  When ``optimizer.snapshot_every`` is positive and
    ``snapshot_data`` is given, the per-head predictions on ``snapshot_data`` are recorded before the first update and
    after every ``snapshot_every`` updates.

    :param net: the initial network
    :param dataset: the training data
    :param sampling: how batches are drawn; its ensemble size must match the network
    :param optimizer: the optimizer settings
    :param snapshot_data: the fixed evaluation set of the trajectory log
    :return: the trained network, the loss curve, the trajectory log, and the final sampler state
    :raises DivergenceError: if the loss or the parameters become non-finite
    """
    sampling.validate()
    optimizer.validate()
    if sampling.ensemble_size != net.config.ensemble_size:
        raise _utils.ConfigError("sampling.ensemble_size", f"is {sampling.ensemble_size}, but the network has "
                                                           f"ensemble size {net.config.ensemble_size}")
    _check_data_fits(net, dataset)
    sampler = data.MimoSampler(dataset, sampling)
    trajectory = TrajectoryLog()
    record = optimizer.snapshot_every > 0 and snapshot_data is not None

    def snapshot(step: int, current: models.Network) -> None:
        if record:
            heads = models.forward_tiled(current, typing.cast(data.Dataset, snapshot_data).features)
            trajectory.append(step, np.stack([head.values for head in heads]))

    parameters = {name: np.array(value) for name, value in net.parameters.items()}
    current = net
    losses = []
    last_loss = math.nan
    snapshot(0, current)
    for step in range(optimizer.steps):
        try:
            loss_graph = compute_loss(current, sampler.sample(), optimizer.l1, optimizer.l2)
        except NonFiniteLossError as exc:
            raise DivergenceError(step, last_loss) from exc
        loss = loss_graph.value
        gradients = loss_graph.gradients()
        rate = optimizer.learning_rate_at(step)
        with np.errstate(over="ignore", invalid="ignore"):
            for name, gradient in gradients.items():
                parameters[name] = parameters[name] - rate * gradient
        if not all(np.all(np.isfinite(value)) for value in parameters.values()):
            raise DivergenceError(step, loss)
        current = models.Network(net.config, parameters)
        losses.append(loss)
        last_loss = loss
        if (step + 1) % optimizer.log_every == 0:
            _LOGGER.debug("step %d/%d: loss %.6g, learning rate %g", step + 1, optimizer.steps, loss, rate)
        if record and (step + 1) % optimizer.snapshot_every == 0:
            snapshot(step + 1, current)
    if losses:
        _LOGGER.info("trained %s network (M=%d) for %d steps, final loss %.6g", net.config.architecture.value,
                     net.config.ensemble_size, len(losses), losses[-1])
    return TrainingResult(current, np.array(losses, dtype=np.float64), trajectory, sampler.state())


# Evaluation

@dataclasses.dataclass(frozen=True)
class Evaluation:
    """Tiled predictions of a network: the ensemble mean and every head."""
    ensemble: models.PredictiveDistribution
    heads: list[models.PredictiveDistribution]


def evaluate(net: models.Network, dataset: data.Dataset) -> Evaluation:
    """Evaluate a network by repeating every example in all input slots and averaging the heads.

    :param net: the network
    :param dataset: the examples to predict
    :return: the ensemble prediction and the per-head predictions
    """
    _check_data_fits(net, dataset)
    heads = models.forward_tiled(net, dataset.features)
    return Evaluation(models.ensemble_predict(heads), heads)


# Setups

@dataclasses.dataclass(frozen=True)
class TrainingSetup:
    """Everything needed to train one model from scratch: data, network, sampling and optimizer settings."""
    dataset: data.DataConfig
    network: models.NetworkConfig
    sampling: data.SamplingConfig
    optimizer: OptimizerConfig

    def validate(self) -> None:
        """Validate every section and check that they agree with each other.

        :raises ConfigError: naming the first inconsistent field
        """
        self.dataset.validate()
        self.network.validate()
        self.sampling.validate()
        self.optimizer.validate()
        _utils.check_config(self.sampling.ensemble_size == self.network.ensemble_size, "sampling.ensemble_size",
                            f"is {self.sampling.ensemble_size}, but network.ensemble_size is "
                            f"{self.network.ensemble_size}")
        _utils.check_config(self.dataset.task == self.network.task, "network.task",
                            f"is {self.network.task.value}, but the data is {self.dataset.task.value}")
        features = self.dataset.input_features
        _utils.check_config(features is None or features == self.network.input_dim, "network.input_dim",
                            f"is {self.network.input_dim}, but the data has {features} features")
        outputs = self.dataset.outputs
        _utils.check_config(outputs is None or outputs == self.network.output_dim, "network.output_dim",
                            f"is {self.network.output_dim}, but the data has {outputs} label columns")

    def for_replicate(self, replicate: int) -> "TrainingSetup":
        """Derive the setup of an independent replicate: initialization and sampling seeds are derived from the
        configured seeds and the replicate index."""
        return dataclasses.replace(
            self,
            network=dataclasses.replace(self.network, init_seed=_utils.derive_seed(self.network.init_seed, replicate)),
            sampling=dataclasses.replace(self.sampling, seed=_utils.derive_seed(self.sampling.seed, replicate)))

    def run(self, replicate: typing.Optional[int] = None) -> TrainingResult:
        """Train a freshly initialized network.

        :param replicate: when given, resample the training set and derive seeds for that replicate
        :return: the training result
        """
        setup = self if replicate is None else self.for_replicate(replicate)
        train_set = setup.dataset.train_set(replicate)
        snapshot_data = None
        if setup.optimizer.snapshot_every > 0:
            snapshot_data = setup.dataset.test_set(classes=train_set.output_dim).subsample(SNAPSHOT_EXAMPLES)
        return train(models.build_network(setup.network), train_set, setup.sampling, setup.optimizer, snapshot_data)


# Checkpoints

@dataclasses.dataclass(frozen=True)
class Checkpoint:
    """The contents of a checkpoint file."""
    network: models.Network
    step: int = 0
    rng_state: typing.Optional[dict[str, typing.Any]] = None
    library_version: str = __version__


def save_checkpoint(net: models.Network, filename: str, step: int = 0,
                    rng_state: typing.Optional[dict[str, typing.Any]] = None) -> None:
    """Write a network to a checkpoint file.

    The file is the magic ``MIMO`` and a format version byte, a 4-byte little-endian header length, a UTF-8 JSON header
    describing the network configuration and parameter shapes, then every parameter as little-endian 64-bit floats in
    header order.

    :param net: the network to save
    :param filename: the file to write
    :param step: the number of training updates applied to the network
    :param rng_state: the sampler state descriptor
    """
    header = {
        "version": CHECKPOINT_VERSION,
        "library_version": __version__,
        "network": net.config.to_dict(),
        "parameters": [[name, list(net[name].shape)] for name in net.names],
        "dtype": "f64",
        "step": int(step),
        "rng_state": _utils.to_jsonable(rng_state),
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    with _utils.atomic_write(filename, "wb") as file:
        file.write(CHECKPOINT_MAGIC + bytes([CHECKPOINT_VERSION]))
        file.write(len(encoded).to_bytes(_HEADER_LENGTH_BYTES, "little"))
        file.write(encoded)
        for name in net.names:
            file.write(np.ascontiguousarray(net[name], dtype=_PAYLOAD_DTYPE).tobytes())
    _LOGGER.debug("wrote checkpoint %s (%d parameters)", filename, net.parameter_count)


def load_checkpoint(filename: str) -> Checkpoint:
    """Read a checkpoint file written by :func:`save_checkpoint`.

    :param filename: the file to read
    :return: the checkpoint; parameters are restored bit-exactly
    :raises BadMagicError: if the file does not start with the checkpoint magic
    :raises VersionMismatchError: if the format (or major library) version is not supported
    :raises TruncatedCheckpointError: if the file ends before its declared contents
    :raises ShapeMismatchError: if the declared parameters disagree with the embedded network configuration
    :raises CheckpointError: if the header is otherwise malformed
    """
    with open(filename, "rb") as file:
        contents = file.read()
    prefix = len(CHECKPOINT_MAGIC) + 1
    magic = contents[:len(CHECKPOINT_MAGIC)]
    if magic != CHECKPOINT_MAGIC[:len(magic)]:
        raise BadMagicError(f"'{filename}' is not a checkpoint file")
    if len(contents) < prefix + _HEADER_LENGTH_BYTES:
        raise TruncatedCheckpointError(f"'{filename}' ends inside the file preamble")
    if contents[len(CHECKPOINT_MAGIC)] != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"'{filename}' has format version {contents[len(CHECKPOINT_MAGIC)]}, "
                                   f"expected {CHECKPOINT_VERSION}")
    header_length = int.from_bytes(contents[prefix:prefix + _HEADER_LENGTH_BYTES], "little")
    offset = prefix + _HEADER_LENGTH_BYTES + header_length
    if len(contents) < offset:
        raise TruncatedCheckpointError(f"'{filename}' ends inside the header")
    header = _parse_header(filename, contents[prefix + _HEADER_LENGTH_BYTES:offset])

    try:
        config = models.NetworkConfig.from_dict(header["network"])
    except _utils.ConfigError as exc:
        raise CheckpointError(f"'{filename}' has an invalid network configuration: {exc}") from exc
    declared = [(str(name), tuple(int(d) for d in shape)) for name, shape in header["parameters"]]
    expected = config.parameter_shapes()
    if declared != expected:
        raise ShapeMismatchError(f"'{filename}' declares parameters {declared}, but its network configuration "
                                 f"implies {expected}")

    payload = contents[offset:]
    count = sum(math.prod(shape) for _, shape in declared)
    if len(payload) < count * _PAYLOAD_DTYPE.itemsize:
        raise TruncatedCheckpointError(f"'{filename}' holds {len(payload) // _PAYLOAD_DTYPE.itemsize} values, "
                                       f"its header declares {count}")
    if len(payload) > count * _PAYLOAD_DTYPE.itemsize:
        raise CheckpointError(f"'{filename}' has {len(payload) - count * _PAYLOAD_DTYPE.itemsize} trailing bytes")
    values = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE)
    parameters = {}
    position = 0
    for name, shape in declared:
        size = math.prod(shape)
        parameters[name] = values[position:position + size].astype(np.float64).reshape(shape)
        position += size
    return Checkpoint(models.Network(config, parameters), int(header.get("step", 0)), header.get("rng_state"),
                      str(header.get("library_version", "0")))


def _parse_header(filename: str, encoded: bytes) -> dict[str, typing.Any]:
    try:
        header = json.loads(encoded.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"'{filename}' has a malformed header: {exc}") from exc
    if not isinstance(header, dict):
        raise CheckpointError(f"'{filename}' has a malformed header")
    for key in ("version", "network", "parameters", "dtype"):
        if key not in header:
            raise CheckpointError(f"'{filename}' header is missing '{key}'")
    if header["version"] != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"'{filename}' header has version {header['version']!r}, "
                                   f"expected {CHECKPOINT_VERSION}")
    if header["dtype"] != "f64":
        raise CheckpointError(f"'{filename}' has unsupported dtype {header['dtype']!r}")
    written_by = header.get("library_version")
    if written_by is not None:
        try:
            newer = pkg_version.Version(str(written_by)).major > pkg_version.Version(__version__).major
        except pkg_version.InvalidVersion as exc:
            raise CheckpointError(f"'{filename}' has an invalid library version {written_by!r}") from exc
        if newer:
            raise VersionMismatchError(f"'{filename}' was written by mimo {written_by}, "
                                       f"which is newer than this version ({__version__})")
    return header


# Exceptions

class TrainingError(_utils.MimoError):
    """An exception that is raised when training cannot proceed."""


class NonFiniteLossError(TrainingError):
    """An exception that is raised when a loss is NaN or infinite.  ``head`` is the offending head, or ``None`` when
    the shared forward pass or the penalty overflowed."""

    def __init__(self, head: typing.Optional[int]) -> None:
        where = "the shared forward pass" if head is None else f"head {head}"
        super().__init__(f"non-finite loss in {where}")
        self.head = head

    def __reduce__(self):
        return type(self), (self.head,)


class DivergenceError(TrainingError):
    """An exception that is raised when training diverges."""

    def __init__(self, step: int, last_loss: float) -> None:
        super().__init__(f"training diverged at step {step} (last finite loss {last_loss:.6g})")
        self.step = step
        self.last_loss = last_loss

    def __reduce__(self):
        return type(self), (self.step, self.last_loss)


class CheckpointError(_utils.MimoError):
    """An exception that is raised when a checkpoint file cannot be read."""


class BadMagicError(CheckpointError):
    """An exception that is raised when a file does not start with the checkpoint magic."""


class VersionMismatchError(CheckpointError):
    """An exception that is raised when a checkpoint was written in an unsupported format version."""


class TruncatedCheckpointError(CheckpointError):
    """An exception that is raised when a checkpoint file ends before its declared contents."""


class ShapeMismatchError(CheckpointError):
    """An exception that is raised when declared parameter shapes disagree with the embedded configuration."""
