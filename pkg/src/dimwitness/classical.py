"""Exact classical witness bounds by enumeration of message strategies.

A classical carrier of dimension d lets the preparing device send one of at
most d distinct messages.  For a binary-outcome witness the best deterministic
attack picks a set S of at most d response vectors v in {-1,+1}^m (one entry
per measurement) and assigns each preparation the vector maximizing its row:

    bound = offset + sum_x max_{v in S} c_x . v

Shared randomness cannot beat this (the value is affine in the mixture), so
enumerating subsets S is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .witness import ValidationError, Witness, expectation_form

Array = np.ndarray

__all__ = [
    "DEFAULT_ENUMERATION_BUDGET",
    "BudgetExceededError",
    "DeterministicStrategy",
    "ClassicalBoundResult",
    "message_vectors",
    "strategy_value",
    "classical_bound",
]

DEFAULT_ENUMERATION_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    """The subset enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class DeterministicStrategy:
    """A message set plus the preparation-to-message assignment.

    messages holds distinct vectors in {-1,+1}^m; assignment[x] is the
    0-based index of the message sent by preparation x+1.
    """

    messages: tuple[tuple[int, ...], ...]
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValidationError("strategy needs at least one message")
        width = len(self.messages[0])
        for v in self.messages:
            if len(v) != width or any(s not in (-1, 1) for s in v):
                raise ValidationError(f"malformed message vector {v!r}")
        if len(set(self.messages)) != len(self.messages):
            raise ValidationError("message vectors must be distinct")
        if any(i < 0 or i >= len(self.messages) for i in self.assignment):
            raise ValidationError("assignment indexes outside the message set")

    @property
    def n_messages(self) -> int:
        return len(self.messages)


@dataclass(frozen=True)
class ClassicalBoundResult:
    """Exact bound, one optimal strategy, and the enumeration size."""

    bound: float
    strategy: DeterministicStrategy
    enumeration_size: int


def message_vectors(n_measurements: int) -> Array:
    """All vectors in {-1,+1}^m ordered by code.

    The code maps -1 to bit 0 and +1 to bit 1 and reads the components as a
    binary number with y = 1 the most significant bit, so for m = 2 the order
    is (-1,-1), (-1,+1), (+1,-1), (+1,+1).
    """
    m = n_measurements
    codes = np.arange(2**m)[:, None]
    bits = (codes >> np.arange(m - 1, -1, -1)) & 1
    return 2 * bits - 1


def strategy_value(witness: Witness, strategy: DeterministicStrategy) -> float:
    """Witness value reached by a deterministic strategy."""
    offset, c = expectation_form(witness)
    n, m = c.shape
    if len(strategy.assignment) != n:
        raise ValidationError(
            f"assignment covers {len(strategy.assignment)} preparations, witness has {n}"
        )
    if len(strategy.messages[0]) != m:
        raise ValidationError(
            f"messages answer {len(strategy.messages[0])} measurements, witness has {m}"
        )
    msgs = np.asarray(strategy.messages, dtype=float)
    return offset + float(sum(c[x] @ msgs[i] for x, i in enumerate(strategy.assignment)))


def classical_bound(
    witness: Witness,
    dimension: int,
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> ClassicalBoundResult:
    """Exact classical bound for carriers of a given dimension.

    Enumerates every subset of min(dimension, 2^m) message vectors.  Ties
    resolve to the lexicographically smallest message set under the binary
    code of message_vectors; within the winning set each preparation takes
    the smallest-coded maximizer.  Raises BudgetExceededError if the subset
    count exceeds enumeration_budget.
    """
    if dimension < 1:
        raise ValidationError("dimension must be at least 1")
    offset, c = expectation_form(witness)
    m = c.shape[1]
    vectors = message_vectors(m)
    k = min(dimension, 2**m)
    size = comb(2**m, k)
    if size > enumeration_budget:
        raise BudgetExceededError(
            f"enumerating {size} message sets exceeds the budget of "
            f"{enumeration_budget}; raise enumeration_budget to proceed"
        )

    scores = c @ vectors.T  # (N, 2^m), row x holds c_x . v for every v
    best_total = -np.inf
    best_subset: tuple[int, ...] | None = None
    for subset in combinations(range(2**m), k):
        total = scores[:, subset].max(axis=1).sum()
        if total > best_total:
            best_total = total
            best_subset = subset

    assert best_subset is not None
    cols = scores[:, best_subset]
    assignment = tuple(int(i) for i in cols.argmax(axis=1))
    messages = tuple(tuple(int(s) for s in vectors[j]) for j in best_subset)
    strategy = DeterministicStrategy(messages, assignment)
    return ClassicalBoundResult(float(offset + best_total), strategy, size)
