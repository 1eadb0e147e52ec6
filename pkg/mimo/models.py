# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Multi-input multi-output networks, naive multihead networks, standard networks and deep ensembles built on a
shared multilayer perceptron body."""

import dataclasses
import enum
import math
import typing

import numpy as np

from mimo import tensor, _utils


_Inputs = typing.Sequence[np.ndarray]
_ParameterShapes = list[tuple[str, tuple[int, ...]]]

PROBABILITY_TOLERANCE = 1e-9


class Task(enum.Enum):
    """The kind of prediction a network makes."""
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class Architecture(enum.Enum):
    """How the M ensemble members are laid out in parameter space."""
    MIMO = "mimo"
    NAIVE_MULTIHEAD = "naive_multihead"
    STANDARD = "standard"
    DEEP_ENSEMBLE = "deep_ensemble"


_SHARED_BODY = (Architecture.MIMO, Architecture.NAIVE_MULTIHEAD, Architecture.STANDARD)


@dataclasses.dataclass(frozen=True)
class NetworkConfig:
    """Everything needed to derive the parameter shapes and initial values of a network."""
    ensemble_size: int = 1
    input_dim: int = 1
    hidden_widths: tuple[int, ...] = (32, 128)
    output_dim: int = 1
    task: Task = Task.REGRESSION
    architecture: Architecture = Architecture.MIMO
    init_seed: int = 0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        except TypeError as exc:
            raise _utils.ConfigError("network.hidden_widths", "must be a list of positive integers") from exc
        try:
            object.__setattr__(self, "task", Task(self.task))
        except ValueError as exc:
            raise _utils.ConfigError("network.task", f"must be one of {[t.value for t in Task]}") from exc
        try:
            object.__setattr__(self, "architecture", Architecture(self.architecture))
        except ValueError as exc:
            raise _utils.ConfigError("network.architecture",
                                     f"must be one of {[a.value for a in Architecture]}") from exc

    def validate(self, path: str = "network") -> None:
        """Check the invariants of this configuration.

        :param path: dotted path of this section, used in error messages
        :raises ConfigError: naming the first invalid field
        """
        _utils.check_config(_is_int(self.ensemble_size) and self.ensemble_size >= 1, f"{path}.ensemble_size",
                            f"must be a positive integer, got {self.ensemble_size!r}")
        _utils.check_config(_is_int(self.input_dim) and self.input_dim >= 1, f"{path}.input_dim",
                            f"must be a positive integer, got {self.input_dim!r}")
        _utils.check_config(len(self.hidden_widths) >= 1 and all(_is_int(w) and w >= 1 for w in self.hidden_widths),
                            f"{path}.hidden_widths", f"must be a nonempty list of positive integers, "
                                                     f"got {list(self.hidden_widths)!r}")
        _utils.check_config(_is_int(self.output_dim) and self.output_dim >= 1, f"{path}.output_dim",
                            f"must be a positive integer, got {self.output_dim!r}")
        _utils.check_config(self.task != Task.CLASSIFICATION or self.output_dim >= 2, f"{path}.output_dim",
                            "classification needs at least 2 classes")
        _utils.check_config(self.architecture != Architecture.STANDARD or self.ensemble_size == 1,
                            f"{path}.ensemble_size", "a standard network has ensemble size 1")
        _utils.check_config(_is_int(self.init_seed), f"{path}.init_seed",
                            f"must be an integer, got {self.init_seed!r}")

    @property
    def input_slots(self) -> int:
        """Get the number of separate inputs the network reads."""
        if self.architecture in (Architecture.MIMO, Architecture.DEEP_ENSEMBLE):
            return self.ensemble_size
        return 1

    @property
    def heads(self) -> int:
        """Get the number of output heads (ensemble members)."""
        return self.ensemble_size

    def parameter_shapes(self) -> _ParameterShapes:
        """List the names and shapes of the parameters, in their canonical order.

        :return: ``(name, shape)`` pairs
        """
        if self.architecture == Architecture.DEEP_ENSEMBLE:
            member = _body_shapes(self.input_dim, self.hidden_widths, self.output_dim)
            return [(f"member_{m}/{name}", shape) for m in range(self.ensemble_size) for name, shape in member]
        return _body_shapes(self.input_dim * self.input_slots, self.hidden_widths, self.output_dim * self.heads)

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            "ensemble_size": self.ensemble_size,
            "input_dim": self.input_dim,
            "hidden_widths": list(self.hidden_widths),
            "output_dim": self.output_dim,
            "task": self.task.value,
            "architecture": self.architecture.value,
            "init_seed": self.init_seed,
        }

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any], path: str = "network") -> "NetworkConfig":
        """Create a validated configuration from a dictionary, rejecting unknown keys.

        :param data: the dictionary, as produced by :meth:`to_dict` or read from an experiment document
        :param path: dotted path of this section, used in error messages
        :return: the configuration
        """
        _utils.reject_unknown_keys(data, [f.name for f in dataclasses.fields(cls)], path)
        config = cls(**data)
        config.validate(path)
        return config


def _is_int(value: typing.Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _body_shapes(fan_in: int, hidden_widths: tuple[int, ...], outputs: int) -> _ParameterShapes:
    shapes: _ParameterShapes = []
    for i, width in enumerate(hidden_widths):
        shapes.append((f"dense_{i}.weight", (fan_in, width)))
        shapes.append((f"dense_{i}.bias", (width,)))
        fan_in = width
    shapes.append(("head.weight", (fan_in, outputs)))
    shapes.append(("head.bias", (outputs,)))
    return shapes


class Network:
    """A parameterized function with M input slots and M output heads.  Networks are immutable: training and slice
    installation create new networks."""
    _parameters: dict[str, np.ndarray]

    def __init__(self, config: NetworkConfig, parameters: typing.Mapping[str, np.ndarray]) -> None:
        """Create a network from a configuration and a full set of parameter values.

        :param config: the network configuration
        :param parameters: parameter values keyed by name; names and shapes must match ``config``
        :raises ModelError: if a parameter is missing, unexpected, or has the wrong shape
        """
        config.validate()
        self._config = config
        self._parameters = {}
        expected = config.parameter_shapes()
        unexpected = set(parameters) - {name for name, _ in expected}
        if unexpected:
            raise ModelError(f"unexpected parameters {sorted(unexpected)}")
        for name, shape in expected:
            if name not in parameters:
                raise ModelError(f"missing parameter '{name}'")
            value = np.array(parameters[name], dtype=np.float64, order="C", copy=True)
            if value.shape != shape:
                raise ModelError(f"parameter '{name}' has shape {value.shape}, expected {shape}")
            value.setflags(write=False)
            self._parameters[name] = value

    def __repr__(self) -> str:
        return f"{_utils.type_name(type(self))}({self._config!r})"

    @property
    def config(self) -> NetworkConfig:
        """Get the configuration of this network."""
        return self._config

    @property
    def names(self) -> list[str]:
        """Get the parameter names in canonical order."""
        return list(self._parameters)

    @property
    def parameters(self) -> dict[str, np.ndarray]:
        """Get the (read-only) parameter arrays keyed by name."""
        return dict(self._parameters)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._parameters[name]

    @property
    def weight_names(self) -> list[str]:
        """Get the names of the weight matrices (biases excluded)."""
        return [name for name in self._parameters if name.endswith(".weight")]

    @property
    def parameter_count(self) -> int:
        """Get the total number of parameter values."""
        return sum(value.size for value in self._parameters.values())

    def flat(self, names: typing.Optional[typing.Iterable[str]] = None) -> np.ndarray:
        """Concatenate parameters into one vector.

        :param names: the parameters to include, defaulting to all of them in canonical order
        :return: the flat vector
        """
        names = self.names if names is None else list(names)
        if not names:
            return np.zeros(0)
        return np.concatenate([self._parameters[name].reshape(-1) for name in names])

    def replace(self, updates: typing.Mapping[str, np.ndarray]) -> "Network":
        """Create a network with some parameters replaced.

        :param updates: new values keyed by parameter name
        :return: the new network
        """
        parameters = dict(self._parameters)
        for name, value in updates.items():
            if name not in parameters:
                raise ModelError(f"unexpected parameter '{name}'")
            parameters[name] = value
        return Network(self._config, parameters)

    def member(self, m: int) -> "Network":
        """Extract member ``m`` of a deep ensemble as a standard network.

        :param m: the member index
        :return: the standalone member network
        """
        if self._config.architecture != Architecture.DEEP_ENSEMBLE:
            raise ModelError("only deep ensembles have standalone members")
        if not 0 <= m < self._config.ensemble_size:
            raise ModelError(f"member {m} out of range for ensemble size {self._config.ensemble_size}")
        config = dataclasses.replace(self._config, ensemble_size=1, architecture=Architecture.STANDARD)
        prefix = f"member_{m}/"
        return Network(config, {name[len(prefix):]: value for name, value in self._parameters.items()
                                if name.startswith(prefix)})


class PredictiveDistribution:
    """Per-example predictions of one ensemble member (or of the ensemble): class probabilities for classification,
    mean predictions for regression.  Rows are examples."""

    def __init__(self, task: Task, values: np.ndarray) -> None:
        """Create a predictive distribution.

        :param task: the task the values belong to
        :param values: array of shape ``(examples, classes)`` or ``(examples, outputs)``
        :raises ModelError: if classification rows are not probability vectors
        """
        self._task = Task(task)
        array = np.array(values, dtype=np.float64, copy=True)
        if array.ndim == 1:
            array = array.reshape(1, -1)
        if array.ndim != 2:
            raise ModelError(f"predictions must be 2-D, got shape {array.shape}")
        if self._task == Task.CLASSIFICATION:
            if np.any(array < 0.0) or np.any(np.abs(array.sum(axis=1) - 1.0) > PROBABILITY_TOLERANCE):
                raise ModelError("classification predictions must be nonnegative and sum to 1")
        array.setflags(write=False)
        self._values = array

    def __repr__(self) -> str:
        return f"{_utils.type_name(type(self))}({self._task.value!r}, shape={self._values.shape})"

    def __len__(self) -> int:
        return self._values.shape[0]

    @property
    def task(self) -> Task:
        """Get the task of these predictions."""
        return self._task

    @property
    def values(self) -> np.ndarray:
        """Get the (read-only) prediction array."""
        return self._values

    def argmax(self) -> np.ndarray:
        """Get the predicted class of every example; ties resolve to the lowest class index."""
        return np.argmax(self._values, axis=1)


@dataclasses.dataclass(frozen=True)
class ActivationRecord:
    """Pre-activation values of every hidden unit for a batch of input tuples.  ``layers[i]`` has shape
    ``(examples, hidden_widths[i])``."""
    layers: tuple[np.ndarray, ...]

    @property
    def unit_count(self) -> int:
        """Get the number of hidden units recorded."""
        return sum(layer.shape[1] for layer in self.layers)

    def units(self) -> list[tuple[int, int]]:
        """Get the ``(layer, unit)`` index of every recorded unit, in column order of :meth:`matrix`."""
        return [(i, j) for i, layer in enumerate(self.layers) for j in range(layer.shape[1])]

    def matrix(self) -> np.ndarray:
        """Get all pre-activations as one ``(examples, units)`` array."""
        return np.concatenate(self.layers, axis=1)


# Construction

def build_network(config: NetworkConfig) -> Network:
    """Create a network with He-initialized weights and zero biases, deterministically derived from the init seed.

    :param config: the network configuration
    :return: the new network
    """
    config.validate()
    rng = np.random.default_rng(config.init_seed)
    parameters = {}
    for name, shape in config.parameter_shapes():
        if name.endswith(".weight"):
            parameters[name] = rng.normal(0.0, math.sqrt(2.0 / shape[0]), size=shape)
        else:
            parameters[name] = np.zeros(shape)
    return Network(config, parameters)


# Forward evaluation

@dataclasses.dataclass(frozen=True)
class ForwardNodes:
    """Node ids produced by :func:`build_forward`."""
    heads: list[int]
    preactivations: list[int]


def build_forward(graph: tensor.Graph, net: Network, inputs: typing.Sequence[int],
                  trainable: bool = False) -> ForwardNodes:
    """Add the forward computation of a network to a graph.

    :param graph: the graph to extend
    :param net: the network to evaluate
    :param inputs: one input node per input slot, each of shape ``(batch, input_dim)``
    :param trainable: add the network parameters as graph parameters (named as in the network) instead of constants
    :return: the pre-softmax head output nodes and the hidden pre-activation nodes
    """
    config = net.config
    if len(inputs) != config.input_slots:
        raise ModelError(f"{config.architecture.value} network expects {config.input_slots} inputs, got {len(inputs)}")

    def leaf(name: str) -> int:
        if trainable:
            return graph.parameter(name, net[name])
        return graph.constant(net[name])

    if config.architecture == Architecture.DEEP_ENSEMBLE:
        heads = []
        preactivations = []
        for m, node in enumerate(inputs):
            head, pre = _body(graph, config, [node], lambda name, m=m: leaf(f"member_{m}/{name}"))
            heads.append(head)
            preactivations.extend(pre)
        return ForwardNodes(heads, preactivations)

    output, preactivations = _body(graph, config, list(inputs), leaf)
    if config.heads == 1:
        return ForwardNodes([output], preactivations)
    width = config.output_dim
    heads = [graph.slice(output, m * width, (m + 1) * width) for m in range(config.heads)]
    return ForwardNodes(heads, preactivations)


def _body(graph: tensor.Graph, config: NetworkConfig, inputs: list[int],
          leaf: typing.Callable[[str], int]) -> tuple[int, list[int]]:
    hidden = inputs[0] if len(inputs) == 1 else graph.concat(*inputs)
    preactivations = []
    for i in range(len(config.hidden_widths)):
        pre = graph.add(graph.matmul(hidden, leaf(f"dense_{i}.weight")), leaf(f"dense_{i}.bias"))
        preactivations.append(pre)
        hidden = graph.relu(pre)
    output = graph.add(graph.matmul(hidden, leaf("head.weight")), leaf("head.bias"))
    return output, preactivations


def _check_inputs(net: Network, inputs: _Inputs) -> list[np.ndarray]:
    """Validate input arrays against a network, collapsing identical inputs for single-input architectures."""
    config = net.config
    arrays = [np.asarray(x, dtype=np.float64) for x in inputs]
    if not arrays:
        raise ModelError("at least one input is required")
    for m, array in enumerate(arrays):
        if array.ndim != 2 or array.shape[1] != config.input_dim:
            raise ModelError(f"input {m} must have shape (batch, {config.input_dim}), got {array.shape}")
    batch_sizes = {array.shape[0] for array in arrays}
    if len(batch_sizes) != 1:
        raise ModelError(f"all inputs must have the same batch size, got {[a.shape[0] for a in arrays]}")
    if config.input_slots == 1 and len(arrays) > 1:
        if len(arrays) != config.ensemble_size or any(not np.array_equal(arrays[0], a) for a in arrays[1:]):
            raise ModelError(f"{config.architecture.value} networks read a single shared input")
        arrays = arrays[:1]
    if len(arrays) != config.input_slots:
        raise ModelError(f"{config.architecture.value} network expects {config.input_slots} inputs, got {len(arrays)}")
    return arrays


def _run(net: Network, inputs: _Inputs) -> tuple[tensor.Graph, ForwardNodes]:
    graph = tensor.Graph()
    nodes = build_forward(graph, net, [graph.constant(x) for x in _check_inputs(net, inputs)])
    return graph, nodes


def head_distributions(graph: tensor.Graph, net: Network, heads: typing.Sequence[int]) -> list[PredictiveDistribution]:
    """Turn head output nodes of an evaluated graph into predictive distributions.

    :param graph: the evaluated graph
    :param net: the network the heads belong to
    :param heads: the pre-softmax head nodes
    :return: one distribution per head
    """
    task = net.config.task
    if task == Task.CLASSIFICATION:
        return [PredictiveDistribution(task, graph.value(graph.softmax(head)).data) for head in heads]
    return [PredictiveDistribution(task, graph.value(head).data) for head in heads]


def forward_mimo(net: Network, inputs: _Inputs) -> list[PredictiveDistribution]:
    """Evaluate every head of a network on one batch per input slot.

    :param net: the network to evaluate
    :param inputs: one ``(batch, input_dim)`` array per input slot (a single array for single-input architectures)
    :return: the M predictive distributions; classification heads are softmax-normalized independently
    :raises ModelError: if the inputs do not fit the network
    """
    graph, nodes = _run(net, inputs)
    return head_distributions(graph, net, nodes.heads)


def forward_tiled(net: Network, x: np.ndarray) -> list[PredictiveDistribution]:
    """Evaluate every head of a network with the same batch in every input slot.

    :param net: the network to evaluate
    :param x: the ``(batch, input_dim)`` input batch
    :return: the M predictive distributions
    """
    return forward_mimo(net, [x] * net.config.input_slots)


def ensemble_predict(members: typing.Sequence[PredictiveDistribution]) -> PredictiveDistribution:
    """Average the predictions of ensemble members.

    :param members: the member predictions, all of the same task and shape
    :return: the arithmetic mean of the members
    :raises ModelError: if there are no members or their shapes differ
    """
    if not members:
        raise ModelError("cannot ensemble an empty list of predictions")
    task = members[0].task
    shape = members[0].values.shape
    for member in members[1:]:
        if member.task != task or member.values.shape != shape:
            raise ModelError("ensemble members must share task and shape")
    return PredictiveDistribution(task, np.mean(np.stack([member.values for member in members]), axis=0))


def record_preactivations(net: Network, inputs: _Inputs) -> ActivationRecord:
    """Record the value before the nonlinearity of every hidden unit for each input tuple.

    :param net: a shared-body network
    :param inputs: one ``(batch, input_dim)`` array per input slot
    :return: the activation record
    :raises ModelError: for deep ensembles, which have no shared body
    """
    if net.config.architecture not in _SHARED_BODY:
        raise ModelError("pre-activations are only recorded for shared-body architectures")
    graph, nodes = _run(net, inputs)
    return ActivationRecord(tuple(np.array(graph.value(node).data) for node in nodes.preactivations))


# Exceptions

class ModelError(_utils.MimoError):
    """An exception that is raised when a network is used inconsistently with its configuration."""
