"""Dimension witnesses for prepare-and-measure experiments.

Classical and quantum bounds of linear dimension witnesses, a polarization
bench simulator for the five standard protocols, error budgets and dimension
certification, wired together behind one CLI.
"""

from .witness import (
    Scenario,
    Witness,
    Behavior,
    ExpectationTable,
    WitnessBounds,
    ValidationError,
    ScenarioMismatchError,
    evaluate_witness,
    expectations_from_behavior,
    behavior_from_expectations,
    expectation_form,
    witness_from_expectation_form,
    algebraic_maximum,
    chsh_witness,
    chsh_bounds,
)
from .classical import (
    BudgetExceededError,
    ClassicalBoundResult,
    DeterministicStrategy,
    classical_bound,
    message_vectors,
    strategy_value,
)
from .quantum import (
    PureState,
    BinaryProjectiveMeasurement,
    DichotomicObservable,
    QuantumConfig,
    behavior_from_config,
    chsh_measurement_pair,
    chsh_optimal_config,
    chsh_quantum_value,
    optimal_measurements_for_states,
    optimal_states_for_measurements,
    seesaw,
)
from .photonic import (
    ModeState,
    PreparationSettings,
    MeasurementSettings,
    SourceParams,
    ProtocolPreset,
    UnreachableStateError,
    EstimationError,
    prepare_state,
    solve_hwp_angles,
    mode_state_from_logical,
    detector_distribution,
    measurement_observable,
    outcome_signs,
    simulate_counts,
    expected_counts,
    estimate_behavior,
    run_experiment,
    protocol_preset,
)
from .analysis import (
    ErrorBudget,
    ExperimentResult,
    DimensionCertificate,
    SdiReference,
    PropagationError,
    dark_correct,
    poisson_error,
    settings_error,
    build_result,
    certify,
    certify_value,
    sdi_reference,
    report_table,
)

__version__ = "0.1.0"
