"""Shared plumbing: stable summation, seed derivation, errors, table IO."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    """Sequence lengths that must agree do not."""


class DegenerateInputError(ValueError):
    """An input is identically zero (or otherwise carries no information)."""


class TruncationError(ValueError):
    """A series was cut before its tail became negligible.

    Attributes:
        required_trunc: estimated truncation level that would satisfy the
            tail tolerance, when one can be estimated (else None).
    """

    def __init__(self, message: str, required_trunc: int | None = None):
        super().__init__(message)
        self.required_trunc = required_trunc


class RegimeError(ValueError):
    """Parameter combination outside the regime an operation is defined for."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""


_CHUNK = 8192


def stable_sum(values) -> float:
    """Sum a 1-d array with compensated accuracy.

    Chunks are reduced pairwise by numpy, the chunk partials are combined
    with math.fsum, so the result is within a few ulp of the exact sum
    regardless of length. Summation order is fixed (increasing index).
    """
    a = np.ascontiguousarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    if a.size <= _CHUNK:
        return math.fsum(a)
    partials = [float(a[i:i + _CHUNK].sum()) for i in range(0, a.size, _CHUNK)]
    return math.fsum(partials)


def child_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Derive an independent stream from a 64-bit master seed.

    The key is a spawn path, so (master, key) -> stream is a pure function:
    any replicate or chunk can be regenerated in isolation, and the streams
    for distinct keys are statistically independent.
    """
    return np.random.SeedSequence(master_seed, spawn_key=key)


def rng_for(seed, *key: int) -> np.random.Generator:
    """Generator for `seed`, descending through `key` if given.

    Accepts a plain integer, a SeedSequence, or an existing spawn path.
    """
    if isinstance(seed, np.random.Generator):
        if key:
            raise ValueError("cannot re-key an already constructed generator")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = seed if not key else np.random.SeedSequence(
            seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
        return np.random.default_rng(ss)
    if key:
        return np.random.default_rng(child_seed(int(seed), *key))
    return np.random.default_rng(int(seed))


def seed_tag(seed, *key: int) -> str:
    """Printable tag for the stream (master seed plus spawn path)."""
    if isinstance(seed, np.random.SeedSequence):
        base = seed.entropy
        path = tuple(seed.spawn_key) + key
    else:
        base = int(seed)
        path = key
    if not path:
        return str(base)
    return f"{base}:" + ".".join(str(k) for k in path)


def format_cell(value) -> str:
    """CSV cell text: shortest round-trip decimals for floats."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
