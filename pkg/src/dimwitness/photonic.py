"""Four-detector photonic test bench for the built-in witness.

A single photon carries one of four modes built from two spatial paths (a, b)
and two polarizations (H, V).  Preparations are generated by three half wave
plates; the measurement stage applies one analysis half wave plate on path a
and routes the result through polarizing beam splitters onto four detectors.

Conventions
-----------
- Mode amplitudes are real 4-vectors ordered (H,a), (V,a), (H,b), (V,b).
- The logical basis used by the bound modules maps onto modes as
  |1> = (V,a), |2> = (H,a), |0> = (H,b), |3> = (V,b); LOGICAL_TO_MODE
  lists the mode index of each logical position (|1>, |2>, |0>, |3>).
  Qubit states occupy path a, qutrit states additionally use (H,b).
- All wave plate angles are degrees.  A half wave plate at phi maps the
  polarization pair (H, V) to (cos 2phi H + sin 2phi V, sin 2phi H - cos 2phi V).
- Routing: path a V -> D1, path a H -> D2, path b H -> D3, path b V -> D4.
- The analysis plate at phi on path a realizes the deficiency-vector
  observable at theta = 4 phi; 11.25 deg corresponds to theta = pi/4 and
  15.86 deg to theta = arctan 2 within 0.02 deg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantum import chsh_optimal_config
from .witness import Behavior, Scenario, ValidationError

Array = np.ndarray

__all__ = [
    "MODE_LABELS",
    "LOGICAL_LABELS",
    "LOGICAL_TO_MODE",
    "DETECTOR_LABELS",
    "PROTOCOLS",
    "OUTCOME_PROTOCOLS",
    "UnreachableStateError",
    "EstimationError",
    "ModeState",
    "PreparationSettings",
    "MeasurementSettings",
    "SourceParams",
    "ProtocolPreset",
    "prepare_state",
    "solve_hwp_angles",
    "mode_state_from_logical",
    "logical_from_mode_state",
    "detector_distribution",
    "measurement_observable",
    "outcome_map",
    "outcome_signs",
    "simulate_counts",
    "estimate_behavior",
    "run_experiment",
    "protocol_preset",
]

MODE_LABELS = ("H,a", "V,a", "H,b", "V,b")
DETECTOR_LABELS = ("D1", "D2", "D3", "D4")

# Logical positions (|1>, |2>, |0>, |3>) -> mode index.
LOGICAL_LABELS = (1, 2, 0, 3)
LOGICAL_TO_MODE = (1, 0, 2, 3)

# Detector index -> identified logical basis state.
_DETECTOR_LOGICAL = {0: 1, 1: 2, 2: 0, 3: 3}

OUTCOME_PROTOCOLS = ("qubit", "qutrit", "classical")
PROTOCOLS = ("bit", "qubit", "trit", "qutrit", "quart")


class UnreachableStateError(ValueError):
    """The wave-plate stage cannot prepare the requested amplitudes."""


class EstimationError(RuntimeError):
    """No usable counts are available for some setting pair."""


def _frozen(values) -> Array:
    out = np.array(values, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModeState:
    """Real unit amplitude vector over the four optical modes."""

    amplitudes: Array

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=float).ravel()
        if amps.shape != (4,):
            raise ValidationError("mode states carry exactly four amplitudes")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"mode state norm {norm!r} is not 1 within 1e-9")
        object.__setattr__(self, "amplitudes", _frozen(amps / norm))


@dataclass(frozen=True)
class PreparationSettings:
    """Angles of the three preparation half wave plates, degrees in [0, 180)."""

    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta2", "theta3"):
            angle = float(getattr(self, name))
            if not 0.0 <= angle < 180.0:
                raise ValidationError(f"{name} = {angle!r} outside [0, 180) degrees")
            object.__setattr__(self, name, angle)


@dataclass(frozen=True)
class MeasurementSettings:
    """Analysis plate angle (degrees in [0, 180)) and the outcome protocol."""

    phi: float
    protocol: str = "qubit"

    def __post_init__(self) -> None:
        angle = float(self.phi)
        if not 0.0 <= angle < 180.0:
            raise ValidationError(f"phi = {angle!r} outside [0, 180) degrees")
        object.__setattr__(self, "phi", angle)
        if self.protocol not in OUTCOME_PROTOCOLS:
            raise ValidationError(
                f"unknown protocol {self.protocol!r}; expected one of {OUTCOME_PROTOCOLS}"
            )


@dataclass(frozen=True)
class SourceParams:
    """Source and detection figures of the simulated bench."""

    singles_rate: float = 1.5e5  # photons per second reaching the bench
    duration: float = 30.0  # integration seconds per setting pair
    detection_efficiency: float = 0.55
    dark_rate: float = 400.0  # dark counts per second per detector

    def __post_init__(self) -> None:
        if self.singles_rate < 0 or self.duration < 0 or self.dark_rate < 0:
            raise ValidationError("source figures cannot be negative")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise ValidationError("detection efficiency must lie in [0, 1]")

    @property
    def expected_dark(self) -> float:
        """Expected dark counts per detector over one integration window."""
        return self.dark_rate * self.duration


def prepare_state(settings: PreparationSettings) -> ModeState:
    """Mode amplitudes produced by the three-plate preparation stage.

    (sin 2t1 cos 2t3, -sin 2t1 sin 2t3, cos 2t1 cos 2t2, cos 2t1 sin 2t2)
    over (H,a), (V,a), (H,b), (V,b).
    """
    t1 = math.radians(2.0 * settings.theta1)
    t2 = math.radians(2.0 * settings.theta2)
    t3 = math.radians(2.0 * settings.theta3)
    return ModeState(
        np.array(
            [
                math.sin(t1) * math.cos(t3),
                -math.sin(t1) * math.sin(t3),
                math.cos(t1) * math.cos(t2),
                math.cos(t1) * math.sin(t2),
            ]
        )
    )


def solve_hwp_angles(target) -> PreparationSettings:
    """Plate angles preparing a real unit mode vector, closed form.

    The path-a pair fixes theta3, the path-b pair fixes theta2 and the
    weight split fixes theta1.  Raises UnreachableStateError for complex
    amplitudes; real targets are always reachable exactly.
    """
    if isinstance(target, ModeState):
        amps = target.amplitudes
    else:
        raw = np.asarray(target)
        if np.iscomplexobj(raw):
            if np.max(np.abs(raw.imag)) > 1e-12:
                raise UnreachableStateError(
                    "the plate stage produces real amplitudes only"
                )
            raw = raw.real
        amps = ModeState(raw).amplitudes
    h_a, v_a, h_b, v_b = (float(a) for a in amps)
    r_a = math.hypot(h_a, v_a)
    r_b = math.hypot(h_b, v_b)
    theta1 = math.degrees(math.atan2(r_a, r_b)) / 2.0
    theta3 = math.degrees(math.atan2(-v_a, h_a)) / 2.0 % 180.0 if r_a > 1e-15 else 0.0
    theta2 = math.degrees(math.atan2(v_b, h_b)) / 2.0 % 180.0 if r_b > 1e-15 else 0.0
    return PreparationSettings(theta1 % 180.0, theta2, theta3)


def mode_state_from_logical(amplitudes) -> ModeState:
    """Mode state for logical amplitudes ordered (|1>, |2>, |0>, |3>).

    Shorter vectors are padded with zeros, so qubit and qutrit states can be
    passed directly.
    """
    logical = np.asarray(amplitudes, dtype=float).ravel()
    if logical.shape[0] > 4:
        raise ValidationError("at most four logical amplitudes are supported")
    modes = np.zeros(4)
    for i, amp in enumerate(logical):
        modes[LOGICAL_TO_MODE[i]] = amp
    return ModeState(modes)


def logical_from_mode_state(state: ModeState) -> Array:
    """Logical amplitudes (|1>, |2>, |0>, |3>) of a mode state."""
    return state.amplitudes[list(LOGICAL_TO_MODE)]


def _hwp(phi_degrees: float) -> Array:
    """Jones matrix of a half wave plate at phi on the (H, V) pair."""
    c = math.cos(math.radians(2.0 * phi_degrees))
    s = math.sin(math.radians(2.0 * phi_degrees))
    return np.array([[c, s], [s, -c]])


def detector_distribution(
    state: ModeState, settings: MeasurementSettings, pbs_leakage: float = 0.0
) -> Array:
    """Click probabilities over (D1, D2, D3, D4).

    The analysis plate acts on path a only; the splitters then route V on
    path a to D1, H on path a to D2, H on path b to D3 and V on path b to
    D4.  An optional leakage sends each polarization to the wrong port of
    its splitter with the given probability.
    """
    if not 0.0 <= pbs_leakage <= 1.0:
        raise ValidationError("splitter leakage must lie in [0, 1]")
    h_a, v_a, h_b, v_b = state.amplitudes
    h_rot, v_rot = _hwp(settings.phi) @ np.array([h_a, v_a])
    ideal = np.array([v_rot**2, h_rot**2, h_b**2, v_b**2])
    if pbs_leakage == 0.0:
        return ideal
    eps = pbs_leakage
    swap = ideal[[1, 0, 3, 2]]
    return (1.0 - eps) * ideal + eps * swap


def measurement_observable(phi_degrees: float, dimension: int) -> Array:
    """Observable realized on the logical space by the stage at angle phi.

    Rows of the detector amplitude map give M = A^T S A with S the outcome
    signs of the protocol for the given logical dimension (2: qubit signs,
    3: qutrit signs).  For phi with 4 phi = theta this equals the
    deficiency-vector observable at theta.
    """
    if dimension not in (2, 3):
        raise ValidationError("the logical observable exists for dimensions 2 and 3")
    c = math.cos(math.radians(2.0 * phi_degrees))
    s = math.sin(math.radians(2.0 * phi_degrees))
    # Detector amplitudes per logical basis vector (|1>, |2>, |0>).
    # |1> = (V,a): D1 gets -cos 2phi, D2 gets sin 2phi.
    # |2> = (H,a): D1 gets sin 2phi, D2 gets cos 2phi.  |0> = (H,b) -> D3.
    a = np.zeros((4, dimension))
    a[0, 0], a[1, 0] = -c, s
    a[0, 1], a[1, 1] = s, c
    if dimension == 3:
        a[2, 2] = 1.0
    signs = np.array([-1.0, 1.0, 1.0, 0.0])
    return a.T @ np.diag(signs) @ a


def outcome_map(protocol: str):
    """Detector meaning for one outcome protocol.

    Qubit and qutrit runs map detectors to witness outcomes; classical runs
    map detectors to the logical basis state they identify.
    """
    if protocol == "qubit":
        return {"D2": 1, "D1": -1}
    if protocol == "qutrit":
        return {"D2": 1, "D3": 1, "D1": -1}
    if protocol == "classical":
        return {"D3": 0, "D1": 1, "D2": 2, "D4": 3}
    raise ValidationError(
        f"unknown protocol {protocol!r}; expected one of {OUTCOME_PROTOCOLS}"
    )


def outcome_signs(protocol: str, n_measurements: int, responses=None) -> Array:
    """Outcome sign of each detector per measurement setting.

    Returns an (m, 4) array over (D1..D4) with entries +1, -1 or 0; zero
    marks detectors the protocol discards.  Classical runs need `responses`,
    a mapping from identified logical state to its length-m answer vector;
    unmapped states are discarded.
    """
    signs = np.zeros((n_measurements, 4))
    mapping = outcome_map(protocol)
    if protocol in ("qubit", "qutrit"):
        for det, val in mapping.items():
            signs[:, DETECTOR_LABELS.index(det)] = val
        return signs
    if responses is None:
        raise ValidationError("classical runs need a response table")
    for det_index, logical in _DETECTOR_LOGICAL.items():
        answer = responses.get(logical)
        if answer is None:
            continue
        if len(answer) != n_measurements:
            raise ValidationError(
                f"response for state |{logical}> answers {len(answer)} settings, "
                f"expected {n_measurements}"
            )
        if any(s not in (-1, 1) for s in answer):
            raise ValidationError(f"malformed response vector {tuple(answer)!r}")
        signs[:, det_index] = answer
    return signs


def simulate_counts(
    state: ModeState,
    settings: MeasurementSettings,
    source: SourceParams,
    seed=0,
) -> Array:
    """Poisson counts for one setting pair over one integration window.

    Each detector draws Poisson(singles_rate * duration * p_i * efficiency)
    signal counts plus an independent Poisson(dark_rate * duration) dark
    contribution.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = detector_distribution(state, settings)
    signal = source.singles_rate * source.duration * source.detection_efficiency * probs
    dark = np.full(4, source.expected_dark)
    return rng.poisson(signal) + rng.poisson(dark)


def expected_counts(
    state: ModeState, settings: MeasurementSettings, source: SourceParams
) -> Array:
    """Exact expected signal counts (no dark, no sampling) for one pair."""
    probs = detector_distribution(state, settings)
    return source.singles_rate * source.duration * source.detection_efficiency * probs


def estimate_behavior(counts: Array, protocol: str, responses=None) -> Behavior:
    """Behavior estimated from a (N, m, 4) detector count table.

    Counts from detectors without an outcome sign are discarded.  A setting
    pair whose mapped counts vanish cannot be estimated and raises
    EstimationError.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 3 or counts.shape[2] != 4:
        raise ValidationError("count tables have shape (N, m, 4)")
    n, m, _ = counts.shape
    signs = outcome_signs(protocol, m, responses)
    probs = np.empty((n, m, 2))
    for x in range(n):
        for y in range(m):
            plus = counts[x, y][signs[y] == 1].sum()
            minus = counts[x, y][signs[y] == -1].sum()
            total = plus + minus
            if total <= 0:
                raise EstimationError(
                    f"no mapped counts at (x={x + 1}, y={y + 1}); cannot estimate"
                )
            probs[x, y, 0] = plus / total
            probs[x, y, 1] = minus / total
    return Behavior(Scenario(n, m), probs)


def run_experiment(
    protocol: str,
    preparations,
    measurement_phis,
    source: SourceParams,
    seed: int = 0,
    analytic: bool = False,
    responses=None,
    pbs_leakage: float = 0.0,
) -> tuple[Behavior, Array]:
    """Simulate the full N x m experiment and estimate its behavior.

    Setting pairs are simulated independently with per-pair sub-seeds derived
    from `seed`.  With analytic=True sampling and dark counts are replaced by
    exact expected signal frequencies (the returned count table then holds
    fractional expected values).  Returns (behavior, counts) with counts of
    shape (N, m, 4).
    """
    states = [
        prep if isinstance(prep, ModeState) else prepare_state(prep)
        for prep in preparations
    ]
    n = len(states)
    m = len(measurement_phis)
    if n < 1 or m < 1:
        raise ValidationError("need at least one preparation and one measurement")
    counts = np.zeros((n, m, 4), dtype=float if analytic else np.int64)
    for x, state in enumerate(states):
        for y, phi in enumerate(measurement_phis):
            settings = MeasurementSettings(phi, protocol)
            if analytic:
                probs = detector_distribution(state, settings, pbs_leakage)
                counts[x, y] = (
                    source.singles_rate
                    * source.duration
                    * source.detection_efficiency
                    * probs
                )
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=seed, spawn_key=(x, y))
                )
                probs = detector_distribution(state, settings, pbs_leakage)
                signal = (
                    source.singles_rate
                    * source.duration
                    * source.detection_efficiency
                    * probs
                )
                counts[x, y] = rng.poisson(signal) + rng.poisson(
                    np.full(4, source.expected_dark)
                )
    behavior = estimate_behavior(counts, protocol, responses)
    return behavior, counts


@dataclass(frozen=True)
class ProtocolPreset:
    """Bench settings and claim metadata for one published protocol."""

    name: str
    outcome_protocol: str
    claim_kind: str  # 'classical' or 'quantum'
    claim_dimension: int
    preparations: tuple[PreparationSettings, ...]
    measurement_phis: tuple[float, ...]
    responses: dict | None = None


def _classical_preset(name, dimension, assignments, responses) -> ProtocolPreset:
    preps = tuple(
        solve_hwp_angles(mode_state_from_logical(vec)) for vec in assignments
    )
    return ProtocolPreset(
        name=name,
        outcome_protocol="classical",
        claim_kind="classical",
        claim_dimension=dimension,
        preparations=preps,
        measurement_phis=(0.0, 0.0),
        responses=responses,
    )


def protocol_preset(name: str) -> ProtocolPreset:
    """Published bench settings for bit, qubit, trit, qutrit or quart runs.

    Classical presets encode the optimal message strategy in basis states
    (logical |1>, |2>, |0>, |3> in order of first use) with the analysis
    plate at 0 so detectors identify the states; the response tables carry
    the per-setting answers.  Qubit and qutrit presets prepare the optimal
    states and analyze at 11.25/78.75 and 15.86/74.14 degrees.
    """
    basis = np.eye(4)
    if name == "bit":
        return _classical_preset(
            "bit",
            2,
            [basis[0], basis[1], basis[0], basis[1]],
            {1: (1, 1), 2: (-1, -1)},
        )
    if name == "trit":
        return _classical_preset(
            "trit",
            3,
            [basis[0], basis[1], basis[2], basis[0]],
            {1: (1, 1), 2: (-1, -1), 0: (1, -1)},
        )
    if name == "quart":
        return _classical_preset(
            "quart",
            4,
            [basis[0], basis[1], basis[2], basis[3]],
            {1: (1, 1), 2: (-1, -1), 0: (1, -1), 3: (-1, 1)},
        )
    if name == "qubit":
        config = chsh_optimal_config(2)
        preps = tuple(
            solve_hwp_angles(mode_state_from_logical(state.amplitudes.real))
            for state in config.states
        )
        return ProtocolPreset(
            name="qubit",
            outcome_protocol="qubit",
            claim_kind="quantum",
            claim_dimension=2,
            preparations=preps,
            measurement_phis=(11.25, 78.75),
        )
    if name == "qutrit":
        config = chsh_optimal_config(3)
        preps = tuple(
            solve_hwp_angles(mode_state_from_logical(state.amplitudes.real))
            for state in config.states
        )
        return ProtocolPreset(
            name="qutrit",
            outcome_protocol="qutrit",
            claim_kind="quantum",
            claim_dimension=3,
            preparations=preps,
            measurement_phis=(15.86, 74.14),
        )
    raise ValidationError(f"unknown protocol {name!r}; expected one of {PROTOCOLS}")
