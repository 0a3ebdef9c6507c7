"""Bench simulator: preparation optics, routing, counts and protocol presets."""

import math

import numpy as np
import pytest

from dimwitness import (
    EstimationError,
    MeasurementSettings,
    ModeState,
    PreparationSettings,
    SourceParams,
    UnreachableStateError,
    chsh_measurement_pair,
    chsh_witness,
    detector_distribution,
    estimate_behavior,
    evaluate_witness,
    expected_counts,
    measurement_observable,
    mode_state_from_logical,
    outcome_signs,
    prepare_state,
    protocol_preset,
    run_experiment,
    simulate_counts,
    solve_hwp_angles,
)
from dimwitness.photonic import outcome_map

INV = 1 / math.sqrt(2)


def test_prepare_state_reference_points():
    # logical |2> lives in mode (H,a), index 0
    state = prepare_state(PreparationSettings(45.0, 0.0, 0.0))
    assert np.allclose(state.amplitudes, [1.0, 0.0, 0.0, 0.0], atol=1e-12)
    # logical |0> lives in mode (H,b), index 2
    state = prepare_state(PreparationSettings(0.0, 0.0, 0.0))
    assert np.allclose(state.amplitudes, [0.0, 0.0, 1.0, 0.0], atol=1e-12)
    state = prepare_state(PreparationSettings(45.0, 0.0, 22.5))
    assert np.allclose(state.amplitudes, [INV, -INV, 0.0, 0.0], atol=1e-12)


def test_solve_hwp_angles_reference_points():
    settings = solve_hwp_angles(ModeState([1.0, 0.0, 0.0, 0.0]))
    assert settings.theta1 == pytest.approx(45.0, abs=1e-10)
    assert settings.theta3 == pytest.approx(0.0, abs=1e-10)
    assert settings.theta2 == 0.0
    plus = mode_state_from_logical([INV, INV])
    settings = solve_hwp_angles(plus)
    assert settings.theta1 == pytest.approx(45.0, abs=1e-10)
    assert settings.theta3 == pytest.approx(157.5, abs=1e-10)


def test_prepare_solve_round_trip_on_random_states():
    rng = np.random.default_rng(19)
    for _ in range(100):
        vec = rng.normal(size=4)
        vec /= np.linalg.norm(vec)
        recon = prepare_state(solve_hwp_angles(ModeState(vec)))
        assert np.allclose(recon.amplitudes, vec, atol=1e-10) or np.allclose(
            recon.amplitudes, -vec, atol=1e-10
        )


def test_complex_target_is_unreachable():
    with pytest.raises(UnreachableStateError):
        solve_hwp_angles([INV, INV * 1j, 0.0, 0.0])


def test_logical_mode_correspondence():
    # logical basis order (|1>, |2>, |0>, |3>) against modes (Ha, Va, Hb, Vb)
    assert np.allclose(mode_state_from_logical([1, 0, 0, 0]).amplitudes, [0, 1, 0, 0])
    assert np.allclose(mode_state_from_logical([0, 1, 0, 0]).amplitudes, [1, 0, 0, 0])
    assert np.allclose(mode_state_from_logical([0, 0, 1, 0]).amplitudes, [0, 0, 1, 0])
    assert np.allclose(mode_state_from_logical([0, 0, 0, 1]).amplitudes, [0, 0, 0, 1])


def test_detector_distribution_normalizes():
    rng = np.random.default_rng(29)
    for _ in range(50):
        vec = rng.normal(size=4)
        vec /= np.linalg.norm(vec)
        phi = float(rng.uniform(0, 180))
        probs = detector_distribution(ModeState(vec), MeasurementSettings(phi))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert (probs >= 0).all()


def test_minus_eigenstate_clicks_only_d1():
    theta = math.radians(45.0)
    m1_logical = [math.cos(theta / 2), -math.sin(theta / 2)]
    state = mode_state_from_logical(m1_logical)
    probs = detector_distribution(state, MeasurementSettings(11.25))
    assert probs[0] == pytest.approx(1.0, abs=1e-12)


def test_path_b_states_route_directly():
    for phi in (0.0, 33.0, 90.0):
        probs = detector_distribution(
            mode_state_from_logical([0, 0, 1, 0]), MeasurementSettings(phi)
        )
        assert probs[2] == pytest.approx(1.0, abs=1e-12)
        probs = detector_distribution(
            mode_state_from_logical([0, 0, 0, 1]), MeasurementSettings(phi)
        )
        assert probs[3] == pytest.approx(1.0, abs=1e-12)


def test_analysis_angle_matches_plane_observable():
    target = chsh_measurement_pair(math.pi / 4, 2)[0].matrix
    got = measurement_observable(11.25, 2)
    assert np.abs(got - target).max() < 1e-10
    # published second angle pins the same observable at 4*phi
    implied = 4 * 15.86
    assert abs(implied - math.degrees(math.atan(2))) < 0.02
    target3 = chsh_measurement_pair(math.radians(implied), 3)[0].matrix
    assert np.abs(measurement_observable(15.86, 3) - target3).max() < 1e-10


def test_outcome_maps_per_protocol():
    assert outcome_map("qubit") == {"D2": 1, "D1": -1}
    assert outcome_map("qutrit") == {"D2": 1, "D3": 1, "D1": -1}
    assert outcome_map("classical") == {"D3": 0, "D1": 1, "D2": 2, "D4": 3}
    with pytest.raises(ValueError):
        outcome_map("bogus")


def test_outcome_signs_shapes_and_values():
    signs = outcome_signs("qubit", 2)
    assert signs.shape == (2, 4)
    assert np.array_equal(signs[0], [-1, 1, 0, 0])
    signs = outcome_signs("qutrit", 2)
    assert np.array_equal(signs[0], [-1, 1, 1, 0])
    responses = {1: (1, 1), 2: (-1, -1)}
    signs = outcome_signs("classical", 2, responses)
    # detector D1 identifies |1> (response +1), D2 identifies |2> (response -1)
    assert np.array_equal(signs[0], [1, -1, 0, 0])
    assert np.array_equal(signs[1], [1, -1, 0, 0])


def test_simulate_counts_means():
    source = SourceParams()
    state = mode_state_from_logical([0.0, 1.0])  # all signal into D2 at phi=0
    rng = np.random.default_rng(4)
    totals = np.zeros(4)
    n = 40
    for _ in range(n):
        totals += simulate_counts(state, MeasurementSettings(0.0), source, rng)
    mean = totals / n
    signal = 1.5e5 * 30 * 0.55
    dark = 400 * 30
    sigma = math.sqrt(signal + dark) / math.sqrt(n)
    assert abs(mean[1] - (signal + dark)) < 4 * sigma
    for idx in (0, 2, 3):
        assert abs(mean[idx] - dark) < 4 * math.sqrt(dark) / math.sqrt(n)


def test_expected_counts_are_the_signal_means():
    # dark counts live in the sampling step, not in the analytic signal
    source = SourceParams()
    state = mode_state_from_logical([0.0, 1.0])
    means = expected_counts(state, MeasurementSettings(0.0), source)
    assert means[1] == pytest.approx(1.5e5 * 30 * 0.55)
    assert means[0] == pytest.approx(0.0)
    assert source.expected_dark == pytest.approx(12000)


def test_estimation_fails_loudly_on_zero_mapped_counts():
    counts = np.zeros((1, 1, 4))
    counts[0, 0] = [0, 0, 500, 500]  # all weight on detectors qubit ignores
    with pytest.raises(EstimationError, match=r"x=1.*y=1"):
        estimate_behavior(counts, "qubit")


def test_unmapped_detector_counts_are_discarded():
    counts = np.zeros((1, 1, 4), dtype=np.int64)
    counts[0, 0] = [100, 300, 0, 0]
    base = estimate_behavior(counts, "qubit")
    counts[0, 0, 3] = 10_000  # D4 is not part of the qubit estimate
    spiked = estimate_behavior(counts, "qubit")
    assert np.array_equal(base.probabilities, spiked.probabilities)
    assert base.probabilities[0, 0, 0] == pytest.approx(0.75)


@pytest.mark.parametrize(
    "name,target,tol",
    [
        ("bit", 4.0, 1e-10),
        ("qubit", 4 * math.sqrt(2), 1e-10),
        ("trit", 6.0, 1e-10),
        ("qutrit", 2 * (1 + math.sqrt(5)), 2e-3),
        ("quart", 8.0, 1e-10),
    ],
)
def test_analytic_runs_reproduce_protocol_targets(name, target, tol):
    preset = protocol_preset(name)
    behavior, counts = run_experiment(
        preset.outcome_protocol,
        preset.preparations,
        preset.measurement_phis,
        SourceParams(),
        analytic=True,
        responses=preset.responses,
    )
    value = evaluate_witness(chsh_witness(), behavior)
    assert value == pytest.approx(target, abs=tol)
    assert counts.dtype == float


def test_noisy_run_is_reproducible_and_integer_valued():
    preset = protocol_preset("qubit")
    source = SourceParams(duration=0.2)
    first, counts_a = run_experiment(
        preset.outcome_protocol, preset.preparations, preset.measurement_phis, source, seed=5
    )
    second, counts_b = run_experiment(
        preset.outcome_protocol, preset.preparations, preset.measurement_phis, source, seed=5
    )
    assert np.array_equal(counts_a, counts_b)
    assert counts_a.dtype == np.int64
    assert np.array_equal(first.probabilities, second.probabilities)
    third, _ = run_experiment(
        preset.outcome_protocol, preset.preparations, preset.measurement_phis, source, seed=6
    )
    assert not np.array_equal(first.probabilities, third.probabilities)


def test_seed_scatter_matches_propagated_error():
    from dimwitness import poisson_error

    preset = protocol_preset("qubit")
    wit = chsh_witness()
    source = SourceParams(duration=0.1)
    values = []
    counts_once = None
    for seed in range(100):
        behavior, counts = run_experiment(
            preset.outcome_protocol,
            preset.preparations,
            preset.measurement_phis,
            source,
            seed=seed,
        )
        values.append(evaluate_witness(wit, behavior))
        if counts_once is None:
            counts_once = counts
    scatter = float(np.std(values, ddof=1))
    predicted = poisson_error(counts_once, wit, outcome_signs("qubit", 2))
    assert predicted / 1.5 < scatter < predicted * 1.5


def test_presets_expose_claim_metadata():
    expectations = {
        "bit": ("classical", 2),
        "qubit": ("quantum", 2),
        "trit": ("classical", 3),
        "qutrit": ("quantum", 3),
        "quart": ("classical", 4),
    }
    for name, (kind, dim) in expectations.items():
        preset = protocol_preset(name)
        assert preset.claim_kind == kind
        assert preset.claim_dimension == dim
        assert len(preset.measurement_phis) == 2
        assert len(preset.preparations) == 4
    assert protocol_preset("qubit").measurement_phis == (11.25, 78.75)
    assert protocol_preset("qutrit").measurement_phis == (15.86, 74.14)
    with pytest.raises(ValueError):
        protocol_preset("nope")
