"""Estimation, error budgets, reporting and dimension certification.

The error budget of a simulated run has two independent parts: a settings
error from wave-plate calibration spread (Monte-Carlo propagated) and a
counting error from Poisson statistics (first-order propagated).  They
combine in quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .photonic import (
    PreparationSettings,
    SourceParams,
    protocol_preset,
    run_experiment,
)
from .witness import (
    ValidationError,
    Witness,
    Behavior,
    chsh_bounds,
    chsh_witness,
    evaluate_witness,
    expectation_form,
)

Array = np.ndarray

__all__ = [
    "PropagationError",
    "ErrorBudget",
    "ExperimentResult",
    "DimensionCertificate",
    "SdiReference",
    "dark_correct",
    "poisson_error",
    "settings_error",
    "build_result",
    "certify",
    "certify_value",
    "sdi_reference",
    "report_table",
]

DEFAULT_PERTURBATION_SCALE = 0.2  # degrees; calibration constant of the bench
DEFAULT_ERROR_SAMPLES = 200


class PropagationError(RuntimeError):
    """Counting-error propagation is undefined for the given counts."""


@dataclass(frozen=True)
class ErrorBudget:
    """Settings error, counting error and their quadrature total."""

    delta_p: float
    delta_d: float
    delta_total: float = field(init=False)

    def __post_init__(self) -> None:
        if self.delta_p < 0 or self.delta_d < 0:
            raise ValidationError("error components cannot be negative")
        object.__setattr__(self, "delta_total", math.hypot(self.delta_p, self.delta_d))


@dataclass(frozen=True)
class ExperimentResult:
    """One witness estimate with its theory value and error budget.

    d_exp is estimated from raw counts, d_exp_corrected from dark-corrected
    counts.  When dark counts only dilute expectations toward zero the
    correction can only raise a nonnegative value; anti-correlated
    configurations may legitimately go the other way, so no runtime check
    enforces it.
    """

    witness_name: str
    protocol: str
    d_th: float
    d_exp: float
    d_exp_corrected: float
    errors: ErrorBudget


@dataclass(frozen=True)
class DimensionCertificate:
    """Minimal carrier dimensions compatible with a witness value.

    exceeded_bounds lists (bound name, bound value, margin in units of the
    total error) for every bound below the value; margins are None when no
    uncertainty was supplied.
    """

    witness_value: float
    sigma: float | None
    exceeded_bounds: tuple
    minimal_classical_dim: int
    minimal_quantum_dim: int

    @property
    def margin_in_sigma(self) -> float | None:
        """Margin above the highest exceeded bound, in units of sigma."""
        if not self.exceeded_bounds:
            return None
        return self.exceeded_bounds[-1][2]


@dataclass(frozen=True)
class SdiReference:
    """Reference min-entropy figures for the qubit witness range.

    Anchor points at witness values 5.51 and 5.56; in between the lookup
    interpolates linearly and flags it.  Key-rate figures are carried as
    metadata only (raw, and under the trusted-dark-counts assumption).
    """

    witness_value: float
    certified: bool
    min_entropy: float | None
    interpolated: bool
    note: str
    anchors: tuple = ((5.51, 0.0595), (5.56, 0.0820))
    key_rate_raw: float = 0.0518
    key_rate_trusted_dark: float = 0.0667


def dark_correct(counts: Array, source: SourceParams) -> Array:
    """Counts with the expected dark contribution removed, floored at zero.

    Subtracts dark_rate * duration from every detector entry.  Applying it
    again with dark_rate = 0 changes nothing.
    """
    counts = np.asarray(counts, dtype=float)
    return np.maximum(counts - source.expected_dark, 0.0)


def poisson_error(counts: Array, witness: Witness, signs: Array) -> float:
    """First-order Poisson error of the witness value.

    Every used detector count n carries variance n; with a = plus counts and
    b = minus counts of one setting pair, the ratio estimator for E gives
    Var(E) = 4ab/(a+b)^3 and the witness contributions add in quadrature.
    """
    counts = np.asarray(counts, dtype=float)
    offset, c = expectation_form(witness)
    n, m = c.shape
    if counts.shape != (n, m, 4):
        raise ValidationError(
            f"count table shape {counts.shape} does not match the witness scenario"
        )
    signs = np.asarray(signs, dtype=float)
    var = 0.0
    for x in range(n):
        for y in range(m):
            a = counts[x, y][signs[y] == 1].sum()
            b = counts[x, y][signs[y] == -1].sum()
            total = a + b
            if total <= 0:
                raise PropagationError(
                    f"zero mapped counts at (x={x + 1}, y={y + 1}); "
                    "error propagation undefined"
                )
            var += c[x, y] ** 2 * 4.0 * a * b / total**3
    return math.sqrt(var)


def settings_error(
    protocol: str,
    preparations,
    measurement_phis,
    perturbation_scale: float = DEFAULT_PERTURBATION_SCALE,
    n_samples: int = DEFAULT_ERROR_SAMPLES,
    seed: int = 0,
    responses=None,
    pbs_leakage: float = 0.0,
    witness: Witness | None = None,
) -> float:
    """Monte-Carlo settings error of the witness value.

    Perturbs every wave-plate angle (three per preparation plus each
    analysis angle) independently by centered Gaussian noise of the given
    scale in degrees, re-evaluates the witness in analytic mode and returns
    the sample standard deviation.  Note that around a jointly optimal
    configuration the value is stationary in every plate angle, so the
    response grows with the square of the scale.
    """
    if perturbation_scale < 0:
        raise ValidationError("perturbation scale cannot be negative")
    if n_samples < 2:
        raise ValidationError("need at least two samples for a standard deviation")
    if perturbation_scale == 0:
        return 0.0
    wit = witness if witness is not None else chsh_witness()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    source = SourceParams()
    values = np.empty(n_samples)
    for i in range(n_samples):
        preps = [
            PreparationSettings(
                (p.theta1 + rng.normal(0.0, perturbation_scale)) % 180.0,
                (p.theta2 + rng.normal(0.0, perturbation_scale)) % 180.0,
                (p.theta3 + rng.normal(0.0, perturbation_scale)) % 180.0,
            )
            for p in preparations
        ]
        phis = [
            (phi + rng.normal(0.0, perturbation_scale)) % 180.0
            for phi in measurement_phis
        ]
        behavior, _ = run_experiment(
            protocol,
            preps,
            phis,
            source,
            analytic=True,
            responses=responses,
            pbs_leakage=pbs_leakage,
        )
        values[i] = evaluate_witness(wit, behavior)
    return float(np.std(values, ddof=1))


def build_result(
    raw_behavior: Behavior,
    corrected_behavior: Behavior,
    witness: Witness,
    errors: ErrorBudget,
    protocol: str,
) -> ExperimentResult:
    """Experiment result with the theory bound of the declared protocol."""
    preset = protocol_preset(protocol)
    bounds = chsh_bounds(preset.claim_dimension)
    d_th = bounds.bound(preset.claim_kind)
    return ExperimentResult(
        witness_name=witness.name,
        protocol=protocol,
        d_th=d_th,
        d_exp=evaluate_witness(witness, raw_behavior),
        d_exp_corrected=evaluate_witness(witness, corrected_behavior),
        errors=errors,
    )


# Certification ladder of the built-in witness: name, bound value.
_CERTIFICATION_LADDER = (
    ("classical d=2", chsh_bounds(2).classical_bound),
    ("quantum d=2", chsh_bounds(2).quantum_bound),
    ("classical d=3", chsh_bounds(3).classical_bound),
    ("quantum d=3", chsh_bounds(3).quantum_bound),
    ("classical d=4", chsh_bounds(4).classical_bound),
)


def certify_value(value: float, sigma: float | None = None) -> DimensionCertificate:
    """Certificate of the minimal carrier dimensions for one witness value."""
    ceiling = chsh_bounds(4).classical_bound
    if value > ceiling + 1e-9:
        raise ValidationError(
            f"witness value {value!r} exceeds the algebraic ceiling {ceiling}"
        )
    if sigma is not None and sigma < 0:
        raise ValidationError("sigma cannot be negative")
    exceeded = []
    for name, bound in _CERTIFICATION_LADDER:
        if value > bound:
            if sigma is None:
                margin = None
            elif sigma == 0:
                margin = math.inf
            else:
                margin = (value - bound) / sigma
            exceeded.append((name, bound, margin))
    minimal_classical = next(
        d for d in (1, 2, 3, 4) if chsh_bounds(d).classical_bound >= value
    )
    minimal_quantum = next(
        d for d in (1, 2, 3, 4) if chsh_bounds(d).quantum_bound >= value
    )
    return DimensionCertificate(
        witness_value=float(value),
        sigma=sigma,
        exceeded_bounds=tuple(exceeded),
        minimal_classical_dim=minimal_classical,
        minimal_quantum_dim=minimal_quantum,
    )


def certify(result: ExperimentResult) -> DimensionCertificate:
    """Certificate for a run, using its corrected value and total error."""
    return certify_value(result.d_exp_corrected, result.errors.delta_total)


def sdi_reference(value: float) -> SdiReference:
    """Reference min-entropy lookup on the qubit witness range [4, 4 sqrt 2].

    Values at the anchors return the cited figures; between them the lookup
    interpolates linearly and sets the flag; elsewhere in range only the
    anchors are reported.  Below 4 no certification is possible.
    """
    anchors = SdiReference.__dataclass_fields__["anchors"].default
    (low_v, low_h), (high_v, high_h) = anchors
    qubit_ceiling = chsh_bounds(2).quantum_bound
    if value > qubit_ceiling + 1e-9:
        raise ValidationError(
            f"value {value!r} exceeds the qubit range ceiling {qubit_ceiling!r}"
        )
    if value < chsh_bounds(2).classical_bound:
        return SdiReference(
            witness_value=float(value),
            certified=False,
            min_entropy=None,
            interpolated=False,
            note="value does not beat the classical bound 4; no certification",
        )
    tol = 1e-12
    if abs(value - low_v) <= tol:
        return SdiReference(float(value), True, low_h, False, "anchor value")
    if abs(value - high_v) <= tol:
        return SdiReference(float(value), True, high_h, False, "anchor value")
    if low_v < value < high_v:
        frac = (value - low_v) / (high_v - low_v)
        entropy = low_h + frac * (high_h - low_h)
        return SdiReference(
            float(value), True, entropy, True, "linear interpolation between anchors"
        )
    return SdiReference(
        witness_value=float(value),
        certified=True,
        min_entropy=None,
        interpolated=False,
        note="outside the anchor interval; anchors reported without extrapolation",
    )


_HEADER = ("bound", "D_th", "D_exp", "D_exp^b", "dD_p", "dD_d", "dD_T")
_WIDTHS = (18, 7, 7, 9, 7, 7, 7)


def _table_row(cells) -> str:
    return "  ".join(str(c).ljust(w) for c, w in zip(cells, _WIDTHS)).rstrip()


def report_table(results) -> str:
    """Text table of results, one row per run.

    Values print with two decimals, the counting error with three.  An empty
    result list yields the header only.
    """
    lines = [_table_row(_HEADER)]
    for r in results:
        lines.append(
            _table_row(
                (
                    f"{r.witness_name}({r.protocol})",
                    f"{r.d_th:.2f}",
                    f"{r.d_exp:.2f}",
                    f"{r.d_exp_corrected:.2f}",
                    f"{r.errors.delta_p:.2f}",
                    f"{r.errors.delta_d:.3f}",
                    f"{r.errors.delta_total:.2f}",
                )
            )
        )
    return "\n".join(lines)
