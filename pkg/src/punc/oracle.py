"""Brute-force ground truth by exhaustive enumeration of small state spaces."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
import numpy.typing as npt

from punc.errors import DimensionError, StateSpaceError
from punc.linalg import Matrix

MAX_STATES = 2**20
NEGATIVE_TOL = 1e-12


def assignments(cardinalities: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Lexicographic order, variable 0 slowest."""
    return itertools.product(*(range(k) for k in cardinalities))


def _check_size(cardinalities: Sequence[int]) -> int:
    size = math.prod(cardinalities)
    if size > MAX_STATES:
        raise StateSpaceError(f"{size} assignments exceed the oracle cap of {MAX_STATES}")
    return size


@dataclass(frozen=True, eq=False)
class CircuitDistribution:
    cardinalities: tuple[int, ...]
    table: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        if t.shape != (math.prod(self.cardinalities),):
            raise DimensionError(f"table has shape {t.shape} for cardinalities {self.cardinalities}")
        if t.size and t.min() < -NEGATIVE_TOL:
            raise ValueError(f"negative probability {t.min()!r}")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @property
    def mass(self) -> float:
        return float(self.table.sum())

    def __getitem__(self, x: Sequence[int]) -> float:
        return float(self.table[np.ravel_multi_index(tuple(x), self.cardinalities)])

    def items(self) -> Iterator[tuple[tuple[int, ...], float]]:
        return zip(assignments(self.cardinalities), map(float, self.table))

    def marginal(self, evidence: dict[int, int]) -> float:
        """Sum of the table entries consistent with ``evidence``."""
        grid = self.table.reshape(self.cardinalities)
        index = tuple(evidence.get(v, slice(None)) for v in range(len(self.cardinalities)))
        return float(np.sum(grid[index]))

    def to_text(self, delimiter: str = " ") -> str:
        buf = io.StringIO()
        for x, p in self.items():
            buf.write(delimiter.join([*map(str, x), "%.17g" % p]) + "\n")
        return buf.getvalue()


def enumerate(prob_fn: Callable[[tuple[int, ...]], float], cardinalities: Sequence[int]) -> CircuitDistribution:
    cards = tuple(int(k) for k in cardinalities)
    _check_size(cards)
    table = np.fromiter((prob_fn(x) for x in assignments(cards)), dtype=float, count=math.prod(cards))
    return CircuitDistribution(cards, table)


def operator_sum(eval_fn: Callable[[tuple[int, ...]], Matrix], cardinalities: Sequence[int]) -> Matrix:
    _check_size(cardinalities)
    total = None
    for x in assignments(cardinalities):
        o = eval_fn(x)
        total = o.astype(np.complex128) if total is None else total + o
    return total


def distributions_equal(a: CircuitDistribution, b: CircuitDistribution, atol: float) -> tuple[bool, float]:
    if a.cardinalities != b.cardinalities:
        raise DimensionError(f"domains differ: {a.cardinalities} vs {b.cardinalities}")
    dev = float(np.max(np.abs(a.table - b.table))) if a.table.size else 0.0
    return dev <= atol, dev
