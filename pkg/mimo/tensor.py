# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Dense 64-bit tensors and a single-use computation graph with reverse-mode automatic differentiation."""

import dataclasses
import enum
import math
import typing

import numpy as np

from mimo import _utils


_ArrayLike = typing.Union["Tensor", np.ndarray, float, typing.Sequence[typing.Any]]
_Builder = typing.Callable[["Graph", list[int]], int]

DEFAULT_CHECK_STEP = 1e-6


class Tensor:
    """An immutable dense row-major array of 64-bit floating point values."""
    __slots__ = ("_data",)
    _data: np.ndarray

    def __init__(self, data: _ArrayLike) -> None:
        """Create a tensor holding a private copy of ``data``.

        :param data: a tensor, array or nested sequence of numbers
        :raises ShapeError: if any dimension is zero
        """
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=np.float64, order="C", copy=True)
        if any(dim < 1 for dim in array.shape):
            raise ShapeError(f"tensor dimensions must be positive, got shape {array.shape}")
        array.setflags(write=False)
        self._data = array

    @classmethod
    def _adopt(cls, array: np.ndarray) -> "Tensor":
        """Wrap an array this module has just computed and owns, without copying it."""
        tensor = cls.__new__(cls)
        array = np.require(array, dtype=np.float64, requirements="C")
        array.setflags(write=False)
        tensor._data = array
        return tensor

    @classmethod
    def zeros(cls, shape: typing.Sequence[int]) -> "Tensor":
        """Create a tensor of zeros.

        :param shape: the shape of the new tensor
        :return: the zero tensor
        """
        return cls._adopt(np.zeros(tuple(shape)))

    def __repr__(self) -> str:
        return f"{_utils.type_name(type(self))}({self._data.tolist()!r})"

    @property
    def shape(self) -> tuple[int, ...]:
        """Get the shape of this tensor."""
        return tuple(self._data.shape)

    @property
    def size(self) -> int:
        """Get the number of values in this tensor (the product of its shape)."""
        return int(self._data.size)

    @property
    def data(self) -> np.ndarray:
        """Get a read-only view of the values of this tensor."""
        return self._data

    def item(self) -> float:
        """Get the value of a tensor holding exactly one value."""
        if self._data.size != 1:
            raise ShapeError(f"item() requires a single value, tensor has shape {self.shape}")
        return float(self._data.reshape(-1)[0])


class Op(enum.Enum):
    """The operation kinds a graph node can evaluate."""
    MATMUL = "matmul"
    ADD = "add"
    SUBTRACT = "subtract"
    MULTIPLY = "multiply"
    CONCAT = "concat"
    SLICE = "slice"
    RELU = "relu"
    SOFTMAX = "softmax"
    LOG_SOFTMAX = "log_softmax"
    LOG = "log"
    SQUARE = "square"
    ABS = "abs"
    MEAN = "mean"
    SUM = "sum"


_BINARY_BROADCAST_OPS = (Op.ADD, Op.SUBTRACT, Op.MULTIPLY)
_UNARY_OPS = (Op.RELU, Op.SOFTMAX, Op.LOG_SOFTMAX, Op.LOG, Op.SQUARE, Op.ABS, Op.MEAN, Op.SUM)


@dataclasses.dataclass(frozen=True)
class _Node:
    kind: str
    op: typing.Optional[Op]
    inputs: tuple[int, ...]
    value: Tensor
    attrs: dict[str, int]


class Graph:
    """An append-only record of tensor operations, built fresh for every forward/backward pass.

    Leaves are added with :meth:`constant` and :meth:`parameter`; every other node is added by :meth:`evaluate` (or
    one of the named shortcuts such as :meth:`matmul`) and may only reference nodes added before it.
    """
    _nodes: list[_Node]
    _parameters: dict[str, int]
    _gradients: dict[int, np.ndarray]

    def __init__(self) -> None:
        self._nodes = []
        self._parameters = {}
        self._gradients = {}

    def __repr__(self) -> str:
        return f"<{_utils.type_name(type(self))} nodes={len(self._nodes)} parameters={len(self._parameters)}>"

    def __len__(self) -> int:
        return len(self._nodes)

    # Leaves

    def constant(self, value: _ArrayLike) -> int:
        """Add a constant leaf to the graph.

        :param value: the value of the constant
        :return: the id of the new node
        """
        return self._append(_Node("constant", None, (), _as_tensor(value), {}))

    def parameter(self, name: str, value: _ArrayLike) -> int:
        """Add a named parameter leaf; gradients are computed for every parameter.

        :param name: a name that is unique within this graph
        :param value: the current value of the parameter
        :return: the id of the new node
        """
        if name in self._parameters:
            raise TensorError(f"parameter '{name}' is already defined in this graph")
        node_id = self._append(_Node("parameter", None, (), _as_tensor(value), {}))
        self._parameters[name] = node_id
        return node_id

    @property
    def parameter_ids(self) -> dict[str, int]:
        """Get the ids of the parameter nodes, keyed by parameter name, in insertion order."""
        return dict(self._parameters)

    def value(self, node_id: int) -> Tensor:
        """Get the forward value held by a node."""
        return self._node(node_id).value

    def gradient(self, node_id: int) -> typing.Optional[Tensor]:
        """Get the gradient of the last backpropagated loss with respect to a node, if one was allocated."""
        grad = self._gradients.get(node_id)
        return None if grad is None else Tensor._adopt(grad)

    # Operations

    def evaluate(self, op: typing.Union[Op, str], inputs: typing.Sequence[int], **attrs: int) -> int:
        """Append a node holding the forward result of an operation.

        :param op: the operation kind (or its name)
        :param inputs: ids of the nodes the operation consumes
        :param attrs: integer attributes of the operation (``start``/``stop`` for ``slice``)
        :return: the id of the new node
        :raises ShapeError: if the input shapes do not conform to the operation
        :raises NumericOverflowError: if the result contains NaN or infinite values
        """
        op = Op(op)
        inputs = tuple(int(i) for i in inputs)
        for input_id in inputs:
            if not 0 <= input_id < len(self._nodes):
                raise TensorError(f"{op.value}: input node {input_id} does not exist")
        values = [self._nodes[i].value.data for i in inputs]
        result = _forward(op, values, attrs)
        if not np.all(np.isfinite(result)):
            shapes = ", ".join(str(v.shape) for v in values)
            raise NumericOverflowError(f"{op.value} produced a non-finite value from inputs of shape {shapes}")
        return self._append(_Node("op", op, inputs, Tensor._adopt(result), dict(attrs)))

    def matmul(self, left: int, right: int) -> int:
        """Matrix product of two 2-D nodes."""
        return self.evaluate(Op.MATMUL, [left, right])

    def add(self, left: int, right: int) -> int:
        """Elementwise sum, broadcasting over a leading batch axis."""
        return self.evaluate(Op.ADD, [left, right])

    def subtract(self, left: int, right: int) -> int:
        """Elementwise difference, broadcasting over a leading batch axis."""
        return self.evaluate(Op.SUBTRACT, [left, right])

    def multiply(self, left: int, right: int) -> int:
        """Elementwise product, broadcasting over a leading batch axis."""
        return self.evaluate(Op.MULTIPLY, [left, right])

    def concat(self, *parts: int) -> int:
        """Concatenate along the last axis."""
        return self.evaluate(Op.CONCAT, parts)

    def slice(self, node: int, start: int, stop: int) -> int:
        """Take ``[start, stop)`` along the last axis."""
        return self.evaluate(Op.SLICE, [node], start=start, stop=stop)

    def relu(self, node: int) -> int:
        """Rectified linear unit."""
        return self.evaluate(Op.RELU, [node])

    def softmax(self, node: int) -> int:
        """Softmax along the last axis."""
        return self.evaluate(Op.SOFTMAX, [node])

    def log_softmax(self, node: int) -> int:
        """Log of the softmax along the last axis, computed without forming the softmax."""
        return self.evaluate(Op.LOG_SOFTMAX, [node])

    def log(self, node: int) -> int:
        """Elementwise natural logarithm."""
        return self.evaluate(Op.LOG, [node])

    def square(self, node: int) -> int:
        """Elementwise square."""
        return self.evaluate(Op.SQUARE, [node])

    def abs(self, node: int) -> int:
        """Elementwise absolute value; its derivative at zero is taken as zero."""
        return self.evaluate(Op.ABS, [node])

    def mean(self, node: int) -> int:
        """Mean of all values, as a scalar."""
        return self.evaluate(Op.MEAN, [node])

    def sum(self, node: int) -> int:
        """Sum of all values, as a scalar."""
        return self.evaluate(Op.SUM, [node])

    def scale(self, node: int, factor: float) -> int:
        """Multiply by a scalar constant."""
        return self.multiply(node, self.constant(factor))

    # Differentiation

    def backpropagate(self, loss_id: int) -> dict[int, Tensor]:
        """Compute the gradient of a scalar node with respect to every parameter of the graph.

        :param loss_id: the id of the scalar loss node
        :return: gradients keyed by parameter node id; parameters the loss does not depend on get zero gradients
        :raises TensorError: if the loss node is not a scalar
        """
        loss = self._node(loss_id)
        if loss.value.size != 1:
            raise TensorError(f"backpropagate requires a scalar loss, node {loss_id} has shape {loss.value.shape}")
        grads: dict[int, np.ndarray] = {loss_id: np.ones(loss.value.shape)}
        with np.errstate(all="ignore"):
            for node_id in range(loss_id, -1, -1):
                grad = grads.get(node_id)
                node = self._nodes[node_id]
                if grad is None or node.op is None:
                    continue
                values = [self._nodes[i].value.data for i in node.inputs]
                for input_id, contribution in zip(node.inputs, _backward(node, values, grad)):
                    if input_id in grads:
                        grads[input_id] = grads[input_id] + contribution
                    else:
                        grads[input_id] = contribution
        self._gradients = grads
        result = {}
        for node_id in self._parameters.values():
            grad = grads.get(node_id)
            if grad is None:
                result[node_id] = Tensor.zeros(self._nodes[node_id].value.shape)
            else:
                result[node_id] = Tensor._adopt(grad)
        return result

    # Internals

    def _append(self, node: _Node) -> int:
        self._nodes.append(node)
        return len(self._nodes) - 1

    def _node(self, node_id: int) -> _Node:
        if not 0 <= node_id < len(self._nodes):
            raise TensorError(f"node {node_id} does not exist")
        return self._nodes[node_id]


def _as_tensor(value: _ArrayLike) -> Tensor:
    tensor = value if isinstance(value, Tensor) else Tensor(value)
    if not np.all(np.isfinite(tensor.data)):
        raise NumericOverflowError("graph leaves must hold finite values")
    return tensor


def _broadcast_shape(op: Op, left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, ...]:
    """Result shape of a binary elementwise op: equal shapes, a scalar, or one operand missing the leading axis."""
    if left == right:
        return left
    if len(right) == 0 or (len(left) >= 1 and right == left[1:]):
        return left
    if len(left) == 0 or (len(right) >= 1 and left == right[1:]):
        return right
    raise ShapeError(f"{op.value}: shapes {left} and {right} do not broadcast over a leading batch axis")


def _forward(op: Op, values: list[np.ndarray], attrs: dict[str, int]) -> np.ndarray:
    # pylint: disable=too-many-return-statements,too-many-branches
    if op in _UNARY_OPS and len(values) != 1:
        raise ShapeError(f"{op.value}: expected 1 input, got {len(values)}")
    if op in (Op.MATMUL, *_BINARY_BROADCAST_OPS) and len(values) != 2:
        raise ShapeError(f"{op.value}: expected 2 inputs, got {len(values)}")
    with np.errstate(all="ignore"):
        if op == Op.MATMUL:
            left, right = values
            if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[0]:
                raise ShapeError(f"matmul: shapes {left.shape} and {right.shape} do not conform")
            return left @ right
        if op in _BINARY_BROADCAST_OPS:
            _broadcast_shape(op, values[0].shape, values[1].shape)
            if op == Op.ADD:
                return values[0] + values[1]
            if op == Op.SUBTRACT:
                return values[0] - values[1]
            return values[0] * values[1]
        if op == Op.CONCAT:
            if not values:
                raise ShapeError("concat: expected at least 1 input")
            leading = {v.shape[:-1] for v in values}
            if len(leading) != 1 or any(v.ndim == 0 for v in values):
                raise ShapeError(f"concat: shapes {[v.shape for v in values]} differ before the last axis")
            return np.concatenate(values, axis=-1)
        if op == Op.SLICE:
            (value,) = values
            start, stop = attrs.get("start", 0), attrs.get("stop", value.shape[-1] if value.ndim else 0)
            if value.ndim == 0 or not 0 <= start < stop <= value.shape[-1]:
                raise ShapeError(f"slice: [{start}, {stop}) is not a nonempty range of last axis of {value.shape}")
            return value[..., start:stop]
        (value,) = values
        if op in (Op.SOFTMAX, Op.LOG_SOFTMAX) and value.ndim == 0:
            raise ShapeError(f"{op.value}: requires at least one axis, got a scalar")
        if op == Op.RELU:
            return np.maximum(value, 0.0)
        if op == Op.SOFTMAX:
            shifted = np.exp(value - value.max(axis=-1, keepdims=True))
            return shifted / shifted.sum(axis=-1, keepdims=True)
        if op == Op.LOG_SOFTMAX:
            shifted = value - value.max(axis=-1, keepdims=True)
            return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        if op == Op.LOG:
            return np.log(value)
        if op == Op.SQUARE:
            return value * value
        if op == Op.ABS:
            return np.abs(value)
        if op == Op.MEAN:
            return np.asarray(value.mean())
        return np.asarray(value.sum())


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape of a broadcast operand."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    return grad.reshape(shape)


def _backward(node: _Node, values: list[np.ndarray], grad: np.ndarray) -> list[np.ndarray]:
    # pylint: disable=too-many-return-statements
    op = node.op
    if op == Op.MATMUL:
        left, right = values
        return [grad @ right.T, left.T @ grad]
    if op == Op.ADD:
        return [_unbroadcast(grad, values[0].shape), _unbroadcast(grad, values[1].shape)]
    if op == Op.SUBTRACT:
        return [_unbroadcast(grad, values[0].shape), _unbroadcast(-grad, values[1].shape)]
    if op == Op.MULTIPLY:
        left, right = values
        return [_unbroadcast(grad * right, left.shape), _unbroadcast(grad * left, right.shape)]
    if op == Op.CONCAT:
        bounds = np.cumsum([0] + [v.shape[-1] for v in values])
        return [grad[..., bounds[i]:bounds[i + 1]] for i in range(len(values))]
    (value,) = values
    if op == Op.SLICE:
        full = np.zeros(value.shape)
        full[..., node.attrs["start"]:node.attrs["stop"]] = grad
        return [full]
    output = node.value.data
    if op == Op.RELU:
        return [grad * (value > 0.0)]
    if op == Op.SOFTMAX:
        return [output * (grad - (grad * output).sum(axis=-1, keepdims=True))]
    if op == Op.LOG_SOFTMAX:
        return [grad - np.exp(output) * grad.sum(axis=-1, keepdims=True)]
    if op == Op.LOG:
        return [grad / value]
    if op == Op.SQUARE:
        return [2.0 * value * grad]
    if op == Op.ABS:
        return [np.sign(value) * grad]
    if op == Op.MEAN:
        return [np.full(value.shape, grad.item() / value.size)]
    return [np.full(value.shape, grad.item())]


def evaluate(graph: Graph, op: typing.Union[Op, str], inputs: typing.Sequence[int], **attrs: int) -> int:
    """Append the forward result of an operation to a graph.  See :meth:`Graph.evaluate`."""
    return graph.evaluate(op, inputs, **attrs)


def backpropagate(graph: Graph, loss_id: int) -> dict[int, Tensor]:
    """Compute parameter gradients of a scalar node.  See :meth:`Graph.backpropagate`."""
    return graph.backpropagate(loss_id)


def gradient_check(builder: _Builder, point: _ArrayLike,
                   shapes: typing.Optional[typing.Sequence[tuple[int, ...]]] = None,
                   step: float = DEFAULT_CHECK_STEP) -> float:
    """Compare analytic gradients against central finite differences.

    The flat ``point`` is split into parameters of the given ``shapes`` (a single vector by default); ``builder`` is
    called with a fresh graph and the parameter node ids and must return the id of a scalar loss node.

    :param builder: deterministic function building a scalar loss from parameter nodes
    :param point: the flat parameter vector to check the gradient at
    :param shapes: the shapes to split ``point`` into
    :param step: the finite-difference step
    :return: the maximum over coordinates of ``|analytic - numeric| / max(1, |analytic|, |numeric|)``
    :raises NumericOverflowError: if the loss is not finite at the point or at a perturbed point
    """
    flat = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(flat)):
        raise NumericOverflowError("gradient_check requires a finite point")
    if shapes is None:
        shapes = [(flat.size,)]
    sizes = [math.prod(shape) for shape in shapes]
    if sum(sizes) != flat.size:
        raise ShapeError(f"shapes {list(shapes)} hold {sum(sizes)} values, point has {flat.size}")

    def build(vector: np.ndarray) -> tuple[Graph, int, list[int]]:
        graph = Graph()
        ids = []
        offset = 0
        for i, (shape, size) in enumerate(zip(shapes, sizes)):
            ids.append(graph.parameter(f"theta_{i}", vector[offset:offset + size].reshape(shape)))
            offset += size
        return graph, builder(graph, ids), ids

    def loss_at(vector: np.ndarray) -> float:
        graph, loss_id, _ = build(vector)
        loss = graph.value(loss_id).item()
        if not math.isfinite(loss):
            raise NumericOverflowError("gradient_check: loss is not finite")
        return loss

    graph, loss_id, ids = build(flat)
    loss_at(flat)
    grads = graph.backpropagate(loss_id)
    analytic = np.concatenate([grads[i].data.reshape(-1) for i in ids]) if ids else np.zeros(0)
    worst = 0.0
    for j in range(flat.size):
        plus = flat.copy()
        plus[j] += step
        minus = flat.copy()
        minus[j] -= step
        numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step)
        error = abs(analytic[j] - numeric) / max(1.0, abs(analytic[j]), abs(numeric))
        worst = max(worst, error)
    return worst


# Exceptions

class TensorError(_utils.MimoError):
    """An exception that is raised to indicate a misuse of a tensor or graph."""


class ShapeError(TensorError):
    """An exception that is raised when tensor shapes do not conform to an operation."""


class NumericOverflowError(TensorError):
    """An exception that is raised when an operation produces NaN or infinite values."""
