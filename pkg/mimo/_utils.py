# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Utilities used by multiple submodules."""

import concurrent.futures
import contextlib
import json
import math
import os
import tempfile
import typing

import numpy as np
import pandas as pd


_T = typing.TypeVar("_T")
_R = typing.TypeVar("_R")


def type_name(type_: typing.Optional[type]) -> str:
    """Convert a type object to a string in a consistent manner.

    :param type_: the type object to convert
    :return: a string with the type name
    """
    if not type_:
        return "None"
    type_qualname = type_.__qualname__
    type_module = type_.__module__
    if type_module not in ("__main__", "builtins"):
        type_qualname = type_module + '.' + type_qualname
    return type_qualname


def derive_seed(base_seed: int, *keys: int) -> int:
    """Derive an independent 63-bit seed from a base seed and a path of integer keys.

    The same base seed and keys always give the same seed, so replicates and sweep cells can be run in any order
    (or concurrently) without changing their results.

    :param base_seed: the seed of the whole experiment
    :param keys: integers identifying the stream (replicate index, cell index, ...)
    :return: a nonnegative integer seed
    """
    sequence = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def run_ordered(func: typing.Callable[[_T], _R], items: typing.Sequence[_T], workers: int = 1) -> list[_R]:
    """Apply a function to every item, optionally on a process pool, returning results in item order.

    :param func: a picklable function of one argument
    :param items: the arguments to apply the function to
    :param workers: the number of worker processes; 1 runs serially in this process
    :return: the results, in the same order as ``items``
    """
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


@contextlib.contextmanager
def atomic_write(filename: str, mode: str = "w") -> typing.Iterator[typing.IO]:
    """Open a temporary file next to ``filename`` that replaces it only once writing has completed.

    :param filename: the final name of the file
    :param mode: ``"w"`` for text or ``"wb"`` for binary output
    """
    directory = os.path.dirname(os.path.abspath(filename))
    os.makedirs(directory, exist_ok=True)
    # pylint: disable=consider-using-with
    temp_file = tempfile.NamedTemporaryFile(mode=mode, dir=directory, prefix=".tmp-", delete=False,
                                            **({} if "b" in mode else {"encoding": "utf-8", "newline": ""}))
    try:
        with temp_file:
            yield temp_file
        os.replace(temp_file.name, filename)
    except BaseException:
        os.unlink(temp_file.name)
        raise


def to_jsonable(value: typing.Any) -> typing.Any:
    """Convert numpy scalars and arrays (recursively) into plain JSON-compatible values.  Non-finite floats become
    ``None``.

    :param value: the value to convert
    :return: a value that ``json.dumps`` accepts in strict mode
    """
    # pylint: disable=too-many-return-statements
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(obj: typing.Any, filename: str) -> None:
    """Atomically write an object as indented JSON.

    :param obj: the object to write
    :param filename: the file to write
    """
    with atomic_write(filename) as file:
        json.dump(to_jsonable(obj), file, indent=2, allow_nan=False)
        file.write("\n")


def write_csv(frame: pd.DataFrame, filename: str) -> None:
    """Atomically write a table as CSV with a header row and round-trip float formatting.

    :param frame: the table to write
    :param filename: the file to write
    """
    with atomic_write(filename) as file:
        frame.to_csv(file, index=False, lineterminator="\n")


# Configuration helpers

def check_config(condition: bool, path: str, message: str) -> None:
    """Raise a :class:`ConfigError` for a field unless a condition holds.

    :param condition: whether the field is valid
    :param path: dotted path of the field (``sampling.batch_size``)
    :param message: what the field must satisfy
    """
    if not condition:
        raise ConfigError(path, message)


def reject_unknown_keys(data: typing.Mapping[str, typing.Any], allowed: typing.Iterable[str], path: str) -> None:
    """Raise a :class:`ConfigError` naming the first key of ``data`` that is not allowed.

    :param data: the mapping read from a configuration document
    :param allowed: the keys the section accepts
    :param path: dotted path of the section
    """
    if not isinstance(data, typing.Mapping):
        raise ConfigError(path, f"must be an object, got {type(data).__name__}")
    allowed = set(allowed)
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


# Exceptions

class MimoError(Exception):
    """Base class of all exceptions raised by the ``mimo`` package."""


class ConfigError(MimoError):
    """An exception that is raised when a configuration value is invalid.  The message starts with the dotted path
    of the offending field."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message

    def __reduce__(self):
        return type(self), (self.path, self.message)
