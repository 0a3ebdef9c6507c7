"""Quantum witness bounds: seesaw optimization and closed-form optima.

Preparations are pure states in dimension d, measurements are binary
projective measurements.  Both update steps of the seesaw are exact:

- For fixed measurements, each preparation independently maximizes
  <psi_x| A_x |psi_x> with A_x = sum_{y,s} K(x,y,s) O^y_s, so the optimal
  state is the top eigenvector of A_x.
- For fixed states, the y-th term equals const + tr(O^y_+ B_y) with
  B_y = sum_x (K(x,y,+1) - K(x,y,-1)) |psi_x><psi_x|, so the optimal
  O^y_+ projects onto the nonnegative eigenspace of B_y (zero eigenvalues
  included, which never changes the value).

Each step cannot decrease the witness value, so sweeps converge
monotonically; random restarts guard against local optima.

Basis convention for the built-in closed forms: indices 0 and 1 span the
plane of the two measurement deficiency vectors, every higher index is left
untouched by the measurement pair.  Index 2 is the out-of-plane direction
used by the three-dimensional optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .witness import (
    Behavior,
    Scenario,
    ValidationError,
    Witness,
    evaluate_witness,
    expectation_form,
)

Array = np.ndarray

__all__ = [
    "PureState",
    "BinaryProjectiveMeasurement",
    "DichotomicObservable",
    "QuantumConfig",
    "behavior_from_config",
    "chsh_measurement_pair",
    "optimal_states_for_measurements",
    "optimal_measurements_for_states",
    "seesaw",
    "chsh_quantum_value",
    "chsh_optimal_config",
]

HERMITICITY_TOL = 1e-12
IDEMPOTENCE_TOL = 1e-10
SPECTRUM_TOL = 1e-10
UNIT_NORM_TOL = 1e-9


def _frozen_complex(values) -> Array:
    out = np.array(values, dtype=complex)
    out.setflags(write=False)
    return out


def _fix_phase(vec: Array) -> Array:
    """Rotate a global phase so the largest-magnitude component is real positive."""
    k = int(np.argmax(np.abs(vec)))
    pivot = vec[k]
    if abs(pivot) == 0.0:
        return vec
    return vec * (pivot.conjugate() / abs(pivot))


@dataclass(frozen=True)
class PureState:
    """Unit vector of complex amplitudes."""

    amplitudes: Array

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValidationError(f"state norm {norm!r} is not 1 within {UNIT_NORM_TOL}")
        object.__setattr__(self, "amplitudes", _frozen_complex(amps / norm))

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class BinaryProjectiveMeasurement:
    """Binary measurement given by the projector onto the +1 outcome."""

    projector_plus: Array

    def __post_init__(self) -> None:
        p = np.asarray(self.projector_plus, dtype=complex)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValidationError("projector must be a square matrix")
        if np.max(np.abs(p - p.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("projector is not Hermitian")
        if np.max(np.abs(p @ p - p)) > IDEMPOTENCE_TOL:
            raise ValidationError("projector is not idempotent")
        object.__setattr__(self, "projector_plus", _frozen_complex(p))

    @property
    def dimension(self) -> int:
        return self.projector_plus.shape[0]

    @property
    def projector_minus(self) -> Array:
        return np.eye(self.dimension) - self.projector_plus

    @property
    def observable(self) -> Array:
        """The +-1 valued observable 2 O_+ - I."""
        return 2.0 * self.projector_plus - np.eye(self.dimension)


@dataclass(frozen=True)
class DichotomicObservable:
    """Observable with spectrum in {-1, +1}.

    When the -1 eigenspace is one ray |m>, the observable is I - 2|m><m|
    and deficiency_vector stores |m>.
    """

    matrix: Array
    deficiency_vector: Array | None = None

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValidationError("observable must be a square matrix")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("observable is not Hermitian")
        eigs = np.linalg.eigvalsh(mat)
        if np.max(np.abs(np.abs(eigs) - 1.0)) > SPECTRUM_TOL:
            raise ValidationError("observable spectrum is not contained in {-1, +1}")
        object.__setattr__(self, "matrix", _frozen_complex(mat))
        if self.deficiency_vector is not None:
            vec = np.asarray(self.deficiency_vector, dtype=complex).ravel()
            expected = np.eye(mat.shape[0]) - 2.0 * np.outer(vec, vec.conj())
            if np.max(np.abs(mat - expected)) > HERMITICITY_TOL * 10:
                raise ValidationError(
                    "deficiency vector does not reproduce the observable"
                )
            object.__setattr__(self, "deficiency_vector", _frozen_complex(vec))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def as_measurement(self) -> BinaryProjectiveMeasurement:
        """Projective measurement with O_+ the +1 eigenprojector."""
        plus = (np.eye(self.dimension) + self.matrix) / 2.0
        # Round off the tiny Hermiticity/idempotence error of the arithmetic.
        plus = (plus + plus.conj().T) / 2.0
        return BinaryProjectiveMeasurement(plus)


@dataclass(frozen=True)
class QuantumConfig:
    """States and measurements realizing a witness value in dimension d."""

    dimension: int
    states: tuple[PureState, ...]
    measurements: tuple[BinaryProjectiveMeasurement, ...]
    value: float
    angle_theta: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        for s in self.states:
            if s.dimension != self.dimension:
                raise ValidationError("state dimension does not match the config")
        for mmt in self.measurements:
            if mmt.dimension != self.dimension:
                raise ValidationError("measurement dimension does not match the config")

    @property
    def scenario(self) -> Scenario:
        return Scenario(len(self.states), len(self.measurements))


def behavior_from_config(config: QuantumConfig) -> Behavior:
    """Born-rule behavior P(s|x,y) = <psi_x| O^y_s |psi_x>."""
    n = len(config.states)
    m = len(config.measurements)
    probs = np.empty((n, m, 2))
    for x, state in enumerate(config.states):
        psi = state.amplitudes
        for y, mmt in enumerate(config.measurements):
            p_plus = float(np.real(psi.conj() @ (mmt.projector_plus @ psi)))
            probs[x, y, 0] = min(max(p_plus, 0.0), 1.0)
            probs[x, y, 1] = 1.0 - probs[x, y, 0]
    return Behavior(Scenario(n, m), probs)


def chsh_measurement_pair(theta: float, dimension: int = 2):
    """The deficiency-vector measurement pair at relative angle theta.

    M_i = I - 2 |m_i><m_i| with |m_1> = cos(theta/2)|e0> - sin(theta/2)|e1>
    and |m_2> = cos(theta/2)|e0> + sin(theta/2)|e1>, embedded in the given
    dimension with identity action outside span{e0, e1}.  theta in radians,
    canonical range [0, pi/2].
    """
    if not 0.0 <= theta <= math.pi / 2.0 + 1e-12:
        raise ValidationError(f"theta {theta!r} outside the canonical range [0, pi/2]")
    if dimension < 2:
        raise ValidationError("the measurement pair needs dimension at least 2")
    half = theta / 2.0
    out = []
    for sign in (-1.0, +1.0):
        vec = np.zeros(dimension, dtype=complex)
        vec[0] = math.cos(half)
        vec[1] = sign * math.sin(half)
        mat = np.eye(dimension, dtype=complex) - 2.0 * np.outer(vec, vec.conj())
        out.append(DichotomicObservable(mat, deficiency_vector=vec))
    return tuple(out)


def _state_step(
    witness: Witness,
    measurements,
    state_dim: int | None = None,
) -> tuple[PureState, ...]:
    coeffs = witness.coefficients
    n, m = coeffs.shape[0], coeffs.shape[1]
    if len(measurements) != m:
        raise ValidationError(f"witness expects {m} measurements, got {len(measurements)}")
    d = measurements[0].dimension
    eye = np.eye(d, dtype=complex)
    states = []
    for x in range(n):
        a = np.zeros((d, d), dtype=complex)
        for y, mmt in enumerate(measurements):
            plus = mmt.projector_plus
            a += coeffs[x, y, 0] * plus + coeffs[x, y, 1] * (eye - plus)
        if state_dim is not None and state_dim < d:
            block = a[:state_dim, :state_dim]
            _, vecs = np.linalg.eigh(block)
            top = np.zeros(d, dtype=complex)
            top[:state_dim] = vecs[:, -1]
        else:
            _, vecs = np.linalg.eigh(a)
            top = vecs[:, -1]
        states.append(PureState(_fix_phase(top)))
    return tuple(states)


def optimal_states_for_measurements(witness: Witness, measurements) -> tuple[PureState, ...]:
    """Per-preparation optimal states for fixed measurements.

    Returns the top eigenvector of A_x = sum_{y,s} K(x,y,s) O^y_s for each x,
    phase-fixed so the largest component is real positive.  Degenerate top
    eigenvalues resolve to the eigensolver's deterministic ordering.
    """
    return _state_step(witness, measurements, state_dim=None)


def optimal_measurements_for_states(witness: Witness, states) -> tuple[BinaryProjectiveMeasurement, ...]:
    """Per-measurement optimal binary projectors for fixed states.

    O^y_+ projects onto the nonnegative eigenspace of
    B_y = sum_x (K(x,y,+1) - K(x,y,-1)) |psi_x><psi_x|; zero eigenvalues go
    to the +1 outcome.
    """
    coeffs = witness.coefficients
    n, m = coeffs.shape[0], coeffs.shape[1]
    if len(states) != n:
        raise ValidationError(f"witness expects {n} preparations, got {len(states)}")
    d = states[0].dimension
    out = []
    for y in range(m):
        b = np.zeros((d, d), dtype=complex)
        for x, state in enumerate(states):
            psi = state.amplitudes
            b += (coeffs[x, y, 0] - coeffs[x, y, 1]) * np.outer(psi, psi.conj())
        eigvals, eigvecs = np.linalg.eigh(b)
        keep = eigvecs[:, eigvals >= -1e-12]
        plus = keep @ keep.conj().T
        plus = (plus + plus.conj().T) / 2.0
        out.append(BinaryProjectiveMeasurement(plus))
    return tuple(out)


def _config_value(witness: Witness, states, measurements) -> float:
    config = QuantumConfig(
        states[0].dimension, tuple(states), tuple(measurements), value=0.0
    )
    return evaluate_witness(witness, behavior_from_config(config))


def _random_measurements(rng: np.random.Generator, dimension: int, m: int):
    """Projectors onto spans of Haar-random frames, rank uniform in 1..d-1."""
    out = []
    for _ in range(m):
        rank = int(rng.integers(1, dimension))
        g = rng.standard_normal((dimension, rank)) + 1j * rng.standard_normal(
            (dimension, rank)
        )
        q, _ = np.linalg.qr(g)
        plus = q @ q.conj().T
        plus = (plus + plus.conj().T) / 2.0
        out.append(BinaryProjectiveMeasurement(plus))
    return tuple(out)


def seesaw(
    witness: Witness,
    dimension: int,
    restarts: int = 50,
    tolerance: float = 1e-9,
    seed: int = 0,
    max_sweeps: int = 500,
    state_dim: int | None = None,
) -> QuantumConfig:
    """Best witness value found by alternating optimization.

    Runs `restarts` independent seesaws from random measurement
    initializations (sub-seeds derived deterministically from `seed`, so the
    result does not depend on evaluation order) and keeps the best final
    value; ties keep the earliest restart.  Each seesaw sweeps state and
    measurement updates until the value improves by less than `tolerance`
    in a full sweep or `max_sweeps` is hit.

    `state_dim` optionally confines the states to the subspace of the first
    state_dim basis vectors while measurements act on the full space.
    """
    if dimension < 1:
        raise ValidationError("dimension must be at least 1")
    if restarts < 1:
        raise ValidationError("at least one restart is required")
    n, m = witness.scenario.n_preparations, witness.scenario.n_measurements

    if dimension == 1:
        # A single ray: measurements reduce to the sign of the coefficient sum.
        state = PureState(np.ones(1, dtype=complex))
        measurements = optimal_measurements_for_states(witness, (state,) * n)
        states = (state,) * n
        value = _config_value(witness, states, measurements)
        return QuantumConfig(1, states, measurements, value)

    best: tuple[float, tuple, tuple] | None = None
    for k in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        measurements = _random_measurements(rng, dimension, m)
        value = -np.inf
        states = None
        for _ in range(max_sweeps):
            states = _state_step(witness, measurements, state_dim=state_dim)
            measurements = optimal_measurements_for_states(witness, states)
            new_value = _config_value(witness, states, measurements)
            if new_value - value < tolerance:
                value = new_value
                break
            value = new_value
        assert states is not None
        if best is None or value > best[0]:
            best = (value, states, measurements)

    value, states, measurements = best
    return QuantumConfig(dimension, states, measurements, float(value))


def chsh_quantum_value(theta: float, dimension: int) -> float:
    """Closed-form value of the built-in witness at relative angle theta.

    4 (cos theta + sin theta) for dimension 2 and 2 + 2 cos theta +
    4 sin theta for dimension 3, both on theta in [0, pi/2].
    """
    if not 0.0 <= theta <= math.pi / 2.0 + 1e-12:
        raise ValidationError(f"theta {theta!r} outside the canonical range [0, pi/2]")
    if dimension == 2:
        return 4.0 * (math.cos(theta) + math.sin(theta))
    if dimension == 3:
        return 2.0 + 2.0 * math.cos(theta) + 4.0 * math.sin(theta)
    raise ValidationError(
        f"no closed form for dimension {dimension}; supported: 2 and 3"
    )


def chsh_optimal_config(dimension: int) -> QuantumConfig:
    """Optimal configuration of the built-in witness for dimension 2, 3 or 4.

    Dimension 2 peaks at theta = pi/4 with value 4 sqrt 2, dimension 3 at
    theta = arctan 2 with value 2 (1 + sqrt 5).  Dimension 4 saturates the
    algebraic ceiling 8 with the four-message classical optimum written in
    an orthonormal basis.
    """
    witness = _chsh()
    if dimension == 2:
        theta = math.pi / 4.0
        observables = chsh_measurement_pair(theta, 2)
        measurements = tuple(o.as_measurement() for o in observables)
        inv = 1.0 / math.sqrt(2.0)
        states = tuple(
            PureState(np.array(a, dtype=complex))
            for a in ([0.0, 1.0], [1.0, 0.0], [inv, inv], [inv, -inv])
        )
        return QuantumConfig(2, states, measurements, 4.0 * math.sqrt(2.0), theta)
    if dimension == 3:
        theta = math.atan(2.0)
        observables = chsh_measurement_pair(theta, 3)
        measurements = tuple(o.as_measurement() for o in observables)
        states = optimal_states_for_measurements(witness, measurements)
        return QuantumConfig(
            3, states, measurements, 2.0 * (1.0 + math.sqrt(5.0)), theta
        )
    if dimension == 4:
        # Orthonormal encoding of the classical optimum: state x answers
        # measurement y with the sign of the expectation-form coefficient.
        _, c = expectation_form(witness)
        states = tuple(PureState(np.eye(4, dtype=complex)[x]) for x in range(4))
        measurements = []
        for y in range(2):
            plus = np.zeros((4, 4), dtype=complex)
            for x in range(4):
                if c[x, y] > 0:
                    plus[x, x] = 1.0
            measurements.append(BinaryProjectiveMeasurement(plus))
        return QuantumConfig(4, states, tuple(measurements), 8.0)
    raise ValidationError(
        f"no closed-form optimum for dimension {dimension}; supported: 2, 3 and 4"
    )


def _chsh() -> Witness:
    from .witness import chsh_witness

    return chsh_witness()
