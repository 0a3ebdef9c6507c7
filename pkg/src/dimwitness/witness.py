"""Linear dimension witnesses for prepare-and-measure experiments.

A witness is a linear functional of the conditional outcome probabilities
P(s|x,y) collected in a prepare-and-measure round: a preparing device emits
one of N states on request x, a measuring device applies one of m binary
measurements y and announces s in {+1, -1}.  The witness value is

    W = sum_{x,y,s} K(x,y,s) P(s|x,y)

and its size certifies a lower bound on the dimension of the carriers.

Conventions
-----------
- Tables are numpy arrays of shape (N, m, 2); the last axis is ordered
  (s = +1, s = -1), matching the column order of the witness file format.
- Storage is 0-based.  Every interface (file formats, error messages,
  reported strategies) labels preparations x = 1..N and measurements
  y = 1..m.
- The equivalent expectation form W = offset + sum c(x,y) E(x,y) with
  E = P(+1|x,y) - P(-1|x,y) is derived on demand and never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Array = np.ndarray

__all__ = [
    "NORMALIZATION_TOL",
    "OUTCOMES",
    "Scenario",
    "Witness",
    "Behavior",
    "ExpectationTable",
    "WitnessBounds",
    "ValidationError",
    "ScenarioMismatchError",
    "expectations_from_behavior",
    "behavior_from_expectations",
    "evaluate_witness",
    "expectation_form",
    "witness_from_expectation_form",
    "algebraic_maximum",
    "chsh_witness",
    "chsh_bounds",
]

# Behaviors whose rows miss normalization by more than this are rejected;
# smaller deviations are silently renormalized.
NORMALIZATION_TOL = 1e-9

# Outcome labels in storage order (axis 2 of every table).
OUTCOMES = (1, -1)


class ValidationError(ValueError):
    """A table or parameter violates a structural invariant."""


class ScenarioMismatchError(ValueError):
    """Two objects disagree on the scenario shape (N, m)."""


def _frozen(values, dtype=float) -> Array:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    """Shape of a prepare-and-measure experiment: N preparations, m measurements."""

    n_preparations: int
    n_measurements: int

    def __post_init__(self) -> None:
        if self.n_preparations < 1:
            raise ValidationError("scenario needs at least one preparation")
        if self.n_measurements < 1:
            raise ValidationError("scenario needs at least one measurement")

    @property
    def outcomes(self) -> tuple[int, int]:
        return OUTCOMES

    @property
    def table_shape(self) -> tuple[int, int, int]:
        return (self.n_preparations, self.n_measurements, 2)


@dataclass(frozen=True)
class Witness:
    """Coefficient table K(x,y,s) together with its scenario.

    coefficients[x, y, 0] multiplies P(+1|x,y), coefficients[x, y, 1]
    multiplies P(-1|x,y).
    """

    scenario: Scenario
    coefficients: Array
    name: str = "witness"

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != self.scenario.table_shape:
            raise ValidationError(
                f"coefficient table has shape {coeffs.shape}, "
                f"scenario requires {self.scenario.table_shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("coefficient table contains non-finite entries")
        object.__setattr__(self, "coefficients", _frozen(coeffs))


@dataclass(frozen=True)
class Behavior:
    """Conditional probability table P(s|x,y) for one scenario.

    Rows within NORMALIZATION_TOL of summing to one are renormalized;
    anything worse is rejected with the offending (x, y) named.
    """

    scenario: Scenario
    probabilities: Array

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != self.scenario.table_shape:
            raise ValidationError(
                f"probability table has shape {probs.shape}, "
                f"scenario requires {self.scenario.table_shape}"
            )
        if not np.all(np.isfinite(probs)):
            raise ValidationError("probability table contains non-finite entries")
        low = probs.min()
        high = probs.max()
        if low < -NORMALIZATION_TOL or high > 1.0 + NORMALIZATION_TOL:
            x, y, _ = np.unravel_index(
                int(np.argmax(np.maximum(-probs, probs - 1.0))), probs.shape
            )
            raise ValidationError(
                f"probability out of range at (x={x + 1}, y={y + 1})"
            )
        sums = probs.sum(axis=2)
        err = np.abs(sums - 1.0)
        if err.max() > NORMALIZATION_TOL:
            x, y = np.unravel_index(int(np.argmax(err)), err.shape)
            raise ValidationError(
                f"outcome probabilities at (x={x + 1}, y={y + 1}) sum to "
                f"{sums[x, y]!r}, beyond tolerance {NORMALIZATION_TOL}"
            )
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum(axis=2, keepdims=True)
        object.__setattr__(self, "probabilities", _frozen(probs))


@dataclass(frozen=True)
class ExpectationTable:
    """Table of expectation values E(x,y) = P(+1|x,y) - P(-1|x,y)."""

    scenario: Scenario
    values: Array

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        shape = (self.scenario.n_preparations, self.scenario.n_measurements)
        if vals.shape != shape:
            raise ValidationError(
                f"expectation table has shape {vals.shape}, scenario requires {shape}"
            )
        if np.max(np.abs(vals)) > 1.0 + 1e-12:
            raise ValidationError("expectation values must lie in [-1, 1]")
        object.__setattr__(self, "values", _frozen(np.clip(vals, -1.0, 1.0)))


@dataclass(frozen=True)
class WitnessBounds:
    """Classical and quantum ceilings of a witness for one carrier dimension."""

    dimension: int
    classical_bound: float
    quantum_bound: float

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValidationError("dimension must be at least 1")
        if self.classical_bound > self.quantum_bound + 1e-12:
            raise ValidationError("classical bound cannot exceed the quantum bound")

    def bound(self, kind: str) -> float:
        """Bound for a declared carrier kind, 'classical' or 'quantum'."""
        if kind == "classical":
            return self.classical_bound
        if kind == "quantum":
            return self.quantum_bound
        raise ValidationError(f"unknown carrier kind {kind!r}")


def expectations_from_behavior(behavior: Behavior) -> ExpectationTable:
    """Expectation table E = P(+1) - P(-1) of a behavior."""
    probs = behavior.probabilities
    return ExpectationTable(behavior.scenario, probs[:, :, 0] - probs[:, :, 1])


def behavior_from_expectations(scenario: Scenario, values) -> Behavior:
    """Behavior with P(+-1) = (1 +- E)/2 for a table of expectation values."""
    vals = ExpectationTable(scenario, values).values
    probs = np.stack([(1.0 + vals) / 2.0, (1.0 - vals) / 2.0], axis=2)
    return Behavior(scenario, probs)


def evaluate_witness(witness: Witness, behavior: Behavior) -> float:
    """Witness value sum K(x,y,s) P(s|x,y) on a behavior of the same scenario."""
    if witness.scenario != behavior.scenario:
        raise ScenarioMismatchError(
            f"witness scenario {witness.scenario} does not match "
            f"behavior scenario {behavior.scenario}"
        )
    return float(np.sum(witness.coefficients * behavior.probabilities))


def expectation_form(witness: Witness) -> tuple[float, Array]:
    """Offset and coefficient matrix of the expectation form.

    Returns (offset, c) with c of shape (N, m) such that for every behavior
    evaluate_witness equals offset + sum c(x,y) E(x,y).  The identities are
    c = (K(+1) - K(-1))/2 and offset = sum (K(+1) + K(-1))/2.
    """
    coeffs = witness.coefficients
    c = (coeffs[:, :, 0] - coeffs[:, :, 1]) / 2.0
    offset = float(coeffs.sum() / 2.0)
    return offset, c


def witness_from_expectation_form(name: str, coefficients, offset: float = 0.0) -> Witness:
    """Witness built from expectation-form data (offset spread uniformly)."""
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 2:
        raise ValidationError("expectation coefficients must be a 2-d table")
    n, m = c.shape
    shift = offset / (n * m)
    coeffs = np.stack([c + shift, -c + shift], axis=2)
    return Witness(Scenario(n, m), coeffs, name=name)


def algebraic_maximum(witness: Witness) -> float:
    """Largest value any behavior can reach: offset + sum |c(x,y)|."""
    offset, c = expectation_form(witness)
    return offset + float(np.abs(c).sum())


def chsh_witness() -> Witness:
    """The built-in four-preparation, two-measurement witness.

    Expectation form (E11 + E12) - (E21 + E22) + (E31 - E32) - (E41 - E42),
    zero offset, algebraic ceiling 8.
    """
    rows = [[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]
    return witness_from_expectation_form("chsh", rows)


# Known ceilings of the built-in witness per carrier dimension.  Classical
# values come from exact enumeration, quantum values from the closed forms
# 4(cos t + sin t) at t = pi/4 and 2 + 2 cos t + 4 sin t at t = arctan 2;
# at dimension 4 both meet the algebraic ceiling.
_CHSH_BOUNDS = {
    1: (0.0, 0.0),
    2: (4.0, 4.0 * math.sqrt(2.0)),
    3: (6.0, 2.0 * (1.0 + math.sqrt(5.0))),
    4: (8.0, 8.0),
}


def chsh_bounds(dimension: int) -> WitnessBounds:
    """Classical and quantum bounds of the built-in witness for one dimension."""
    if dimension not in _CHSH_BOUNDS:
        raise ValidationError(
            f"no tabulated bounds for dimension {dimension}; supported: 1..4"
        )
    classical, quantum = _CHSH_BOUNDS[dimension]
    return WitnessBounds(dimension, classical, quantum)
