# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Weight-space plane sections through trained subnetworks and principal-component projections of prediction
trajectories."""

import dataclasses
import logging
import typing

import numpy as np
import pandas as pd

from mimo import analysis, data, models, training, _utils


_LOGGER = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 25
DEFAULT_MARGIN = 0.2
DEFAULT_MAX_EXAMPLES = 1000
DEGENERATE_NORM = 1e-10


# Slices

@dataclasses.dataclass(frozen=True)
class SubnetworkSlice:
    """The parameters exclusive to subnetwork ``index``, flattened: the first-layer weight rows of its input slot
    (omitted for naive multihead networks, whose input layer is shared) followed by its head's weights and biases."""
    index: int
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.size


def _check_shared_body(net: models.Network) -> None:
    if net.config.architecture == models.Architecture.DEEP_ENSEMBLE:
        raise LandscapeError("subnetwork slices require a shared body; deep ensemble members are separate networks")


def _slice_blocks(config: models.NetworkConfig, m: int) -> list[tuple[str, typing.Any]]:
    """The ``(parameter, index)`` blocks of slot ``m``, in flattening order."""
    width = config.output_dim
    blocks: list[tuple[str, typing.Any]] = []
    if config.architecture != models.Architecture.NAIVE_MULTIHEAD:
        rows = config.input_dim
        blocks.append(("dense_0.weight", np.s_[m * rows:(m + 1) * rows, :]))
    blocks.append(("head.weight", np.s_[:, m * width:(m + 1) * width]))
    blocks.append(("head.bias", np.s_[m * width:(m + 1) * width]))
    return blocks


def _check_index(net: models.Network, m: int) -> None:
    if not 0 <= m < net.config.ensemble_size:
        raise LandscapeError(f"subnetwork {m} out of range for ensemble size {net.config.ensemble_size}")


def extract_slice(net: models.Network, m: int) -> SubnetworkSlice:
    """Copy the parameters exclusive to subnetwork ``m``.

    :param net: a shared-body network
    :param m: the subnetwork index
    :return: the slice
    :raises LandscapeError: for deep ensembles or an out-of-range index
    """
    _check_shared_body(net)
    _check_index(net, m)
    parts = [np.asarray(net[name][index]).reshape(-1) for name, index in _slice_blocks(net.config, m)]
    return SubnetworkSlice(m, np.concatenate(parts))


def install_slice(net: models.Network, piece: SubnetworkSlice, m: typing.Optional[int] = None) -> models.Network:
    """Replace the parameters of subnetwork ``m`` (the slice's own index by default) with a slice; the shared body
    and every other subnetwork are untouched.

    :param net: a shared-body network
    :param piece: the slice to install
    :param m: the subnetwork to overwrite
    :return: the new network
    :raises LandscapeError: if the slice length does not match the network
    """
    _check_shared_body(net)
    m = piece.index if m is None else m
    _check_index(net, m)
    blocks = _slice_blocks(net.config, m)
    updates = {name: np.array(net[name]) for name, _ in blocks}
    sizes = [updates[name][index].size for name, index in blocks]
    if sum(sizes) != len(piece):
        raise LandscapeError(f"slice has {len(piece)} values, subnetwork {m} has {sum(sizes)}")
    offset = 0
    for (name, index), size in zip(blocks, sizes):
        target = updates[name][index]
        updates[name][index] = piece.values[offset:offset + size].reshape(target.shape)
        offset += size
    return net.replace(updates)


def installed_predictions(net: models.Network, piece: SubnetworkSlice, x: np.ndarray,
                          m: typing.Optional[int] = None) -> models.PredictiveDistribution:
    """Evaluate a slice inside the trained network: install it as subnetwork ``m`` (the slice's own index by
    default), feed ``x`` to every input slot and read head ``m``.  Installing a network's own slice into its own slot
    reproduces that subnetwork's tiled predictions exactly.

    :param net: the network providing the shared body and the other subnetworks
    :param piece: the slice to evaluate
    :param x: the ``(examples, input_dim)`` inputs
    :param m: the slot to install the slice into
    :return: head ``m``'s predictions
    """
    m = piece.index if m is None else m
    return models.forward_tiled(install_slice(net, piece, m), x)[m]


# Plane sections

@dataclasses.dataclass(frozen=True)
class GridReport:
    """A weight-space section.  Every grid point is evaluated once per slot ``m``, installed as subnetwork ``m`` of the
    trained network: ``cells`` has columns ``u, v, accuracy_<m>, nll_<m>, disagreement_<m>`` (the disagreement with
    trained subnetwork ``m``) and ``resolution ** 2`` rows ordered by ``u`` then ``v``.  ``anchors`` has one row per
    trained subnetwork with its plane coordinates, the same metrics, and the subnetwork's own ``tiled_accuracy`` and
    ``tiled_nll``."""
    resolution: int
    anchor_indices: tuple[int, ...]
    cells: pd.DataFrame
    anchors: pd.DataFrame
    origin: tuple[float, float]
    origin_distance: float
    examples: int

    def to_frame(self) -> pd.DataFrame:
        """Get the grid cells."""
        return self.cells

    def to_dict(self) -> dict[str, typing.Any]:
        """Convert the section summary (without the cells) to a JSON-compatible dictionary."""
        return _utils.to_jsonable({
            "resolution": self.resolution,
            "examples": self.examples,
            "anchors": self.anchors.to_dict(orient="records"),
            "origin": {"u": self.origin[0], "v": self.origin[1], "distance": self.origin_distance},
            "max_disagreement": float(self.cells.filter(like="disagreement_").to_numpy().max()),
        })


@dataclasses.dataclass(frozen=True)
class _Plane:
    base: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def coordinates(self, point: np.ndarray) -> tuple[float, float]:
        offset = point - self.base
        return float(offset @ self.u), float(offset @ self.v)

    def point(self, alpha: float, beta: float) -> np.ndarray:
        return self.base + alpha * self.u + beta * self.v


def _plane_through(first: np.ndarray, second: np.ndarray, third: np.ndarray) -> _Plane:
    u = second - first
    length = np.linalg.norm(u)
    if length < DEGENERATE_NORM:
        raise DegeneratePlaneError("the first two anchor slices coincide")
    u = u / length
    v = third - first
    v = v - (v @ u) * u
    height = np.linalg.norm(v)
    if height < DEGENERATE_NORM:
        raise DegeneratePlaneError("the anchor slices are collinear")
    return _Plane(first, u, v / height)


def _point_metrics(net: models.Network, values: np.ndarray, x: np.ndarray, labels: np.ndarray,
                   references: list[models.PredictiveDistribution]) -> dict[str, float]:
    accuracies = {}
    nlls = {}
    disagreements = {}
    for m, reference in enumerate(references):
        predictions = installed_predictions(net, SubnetworkSlice(m, values), x)
        accuracies[f"accuracy_{m}"] = analysis.accuracy(predictions, labels)
        nlls[f"nll_{m}"] = analysis.nll(predictions, labels)
        disagreements[f"disagreement_{m}"] = analysis.disagreement(predictions, reference)
    return {**accuracies, **nlls, **disagreements}


def _cell_metrics(task: tuple[models.Network, np.ndarray, np.ndarray, np.ndarray,
                              list[models.PredictiveDistribution]]) -> list[dict[str, float]]:
    net, points, x, labels, references = task
    return [_point_metrics(net, point, x, labels, references) for point in points]


def plane_section(net: models.Network, dataset: data.Dataset, resolution: int = DEFAULT_RESOLUTION,
                  margin: float = DEFAULT_MARGIN, max_examples: int = DEFAULT_MAX_EXAMPLES,
                  workers: int = 1, seed: int = 0) -> GridReport:
    """Evaluate slices on a grid over the plane through the three subnetwork slices.

    The plane has origin ``s_0``, first axis along ``s_1 - s_0`` and second axis along the part of ``s_2 - s_0``
    orthogonal to it.  The grid spans the bounding box of the three anchors in plane coordinates, widened by
    ``margin`` times its extent on every side.  Each grid point is installed into every slot of the trained network
    in turn and evaluated on tiled input, so the row of anchor ``m`` reproduces subnetwork ``m`` in its own slot.

    :param net: a three-head shared-body classification network
    :param dataset: the evaluation data
    :param resolution: the number of grid points per axis
    :param margin: the relative widening of the grid
    :param max_examples: evaluate on a fixed subsample of at most this many examples
    :param workers: the number of worker processes
    :param seed: the seed of the subsample
    :return: the section
    :raises LandscapeError: if the network does not have three heads or is not a classifier
    :raises DegeneratePlaneError: if the three slices do not span a plane
    """
    # pylint: disable=too-many-arguments,too-many-positional-arguments,too-many-locals
    _check_shared_body(net)
    if net.config.ensemble_size != 3:
        raise LandscapeError(f"a plane section needs exactly 3 subnetworks, got {net.config.ensemble_size}")
    if net.config.task != models.Task.CLASSIFICATION:
        raise LandscapeError("plane sections are only computed for classification networks")
    if resolution < 2:
        raise LandscapeError(f"resolution must be at least 2, got {resolution}")
    if margin < 0.0:
        raise LandscapeError(f"margin must be nonnegative, got {margin}")
    subset = dataset.subsample(max_examples, seed)
    x, labels = subset.features, subset.labels
    slices = [extract_slice(net, m) for m in range(3)]
    plane = _plane_through(*(piece.values for piece in slices))

    references = models.forward_tiled(net, x)
    anchor_rows = []
    for piece in slices:
        u, v = plane.coordinates(piece.values)
        row: dict[str, float] = {"subnetwork": piece.index, "u": u, "v": v}
        row.update(_point_metrics(net, piece.values, x, labels, references))
        row["tiled_accuracy"] = analysis.accuracy(references[piece.index], labels)
        row["tiled_nll"] = analysis.nll(references[piece.index], labels)
        anchor_rows.append(row)
    anchors = pd.DataFrame(anchor_rows)

    low = anchors[["u", "v"]].min().to_numpy()
    high = anchors[["u", "v"]].max().to_numpy()
    pad = margin * (high - low)
    alphas = np.linspace(low[0] - pad[0], high[0] + pad[0], resolution)
    betas = np.linspace(low[1] - pad[1], high[1] + pad[1], resolution)
    coordinates = [(alpha, beta) for alpha in alphas for beta in betas]
    points = np.array([plane.point(alpha, beta) for alpha, beta in coordinates])
    chunks = np.array_split(np.arange(len(points)), max(1, workers))
    tasks = [(net, points[chunk], x, labels, references) for chunk in chunks if len(chunk)]
    metrics = [row for block in _utils.run_ordered(_cell_metrics, tasks, workers) for row in block]
    cells = pd.DataFrame([{"u": alpha, "v": beta, **row} for (alpha, beta), row in zip(coordinates, metrics)])

    origin = plane.coordinates(np.zeros_like(plane.base))
    origin_distance = float(np.linalg.norm(-plane.base - origin[0] * plane.u - origin[1] * plane.v))
    _LOGGER.info("evaluated %d section cells on %d examples", len(cells), subset.n)
    return GridReport(resolution, tuple(piece.index for piece in slices), cells, anchors, origin, origin_distance,
                      subset.n)


# Trajectory projection

@dataclasses.dataclass(frozen=True)
class TrajectoryProjection:
    """Plane coordinates of every head's predictions at every snapshot.  ``coordinates`` has shape
    ``(snapshots, heads, 2)``."""
    steps: np.ndarray
    coordinates: np.ndarray
    explained_variance: np.ndarray
    components: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        """One row per snapshot and head, with columns ``step, head, pc1, pc2``."""
        snapshots, heads, _ = self.coordinates.shape
        return pd.DataFrame({
            "step": np.repeat(self.steps, heads),
            "head": np.tile(np.arange(heads), snapshots),
            "pc1": self.coordinates[:, :, 0].reshape(-1),
            "pc2": self.coordinates[:, :, 1].reshape(-1),
        })


def project_trajectories(log: training.TrajectoryLog) -> TrajectoryProjection:
    """Project every head's flattened predictions at every snapshot onto the top two principal components of all
    such vectors.  Each component is signed so that its largest loading is positive.

    :param log: the trajectory log
    :return: the projection
    :raises LandscapeError: if the log has fewer than two distinct snapshots
    """
    snapshots = log.snapshots
    if len(log) < 2 or len(np.unique(snapshots.reshape(len(log), -1), axis=0)) < 2:
        raise LandscapeError("a trajectory projection needs at least 2 distinct snapshots")
    count, heads = snapshots.shape[:2]
    points = snapshots.reshape(count * heads, -1)
    centered = points - points.mean(axis=0)
    _, singular, rows = np.linalg.svd(centered, full_matrices=False)
    kept = min(2, len(singular))
    basis = np.zeros((2, centered.shape[1]))
    basis[:kept] = rows[:kept]
    variances = np.zeros(2)
    variances[:kept] = singular[:kept] ** 2 / len(centered)
    signs = np.sign(basis[np.arange(2), np.argmax(np.abs(basis), axis=1)])
    basis *= np.where(signs == 0.0, 1.0, signs)[:, np.newaxis]
    coordinates = (centered @ basis.T).reshape(count, heads, 2)
    return TrajectoryProjection(log.steps, coordinates, variances, basis)


# Exceptions

class LandscapeError(_utils.MimoError):
    """An exception that is raised when a section or projection cannot be computed."""


class DegeneratePlaneError(LandscapeError):
    """An exception that is raised when the anchor slices do not span a plane."""
