"""End-to-end CLI behavior: parsing, outputs, seeding, exit codes."""

import math

import numpy as np
import pytest

from dimwitness import chsh_witness
from dimwitness.cli import ENV_SEED, RunConfig, dispatch, main, parse_args
from dimwitness.formats import read_result_file, write_witness


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def section_value(text, section, key):
    current = None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
        elif current == section and line.startswith(f"{key} ="):
            return line.partition("=")[2].strip()
    raise KeyError(f"{key} not found in [{section}]")


def test_parse_args_examples():
    config = parse_args(["classical-bound", "--witness", "chsh.wit", "--dim", "3"])
    assert config.command == "classical-bound"
    assert config.witness_path == "chsh.wit"
    assert config.dim == 3

    config = parse_args(
        ["quantum-bound", "--witness", "chsh.wit", "--dim", "2", "--restarts", "50", "--seed", "7"]
    )
    assert config.dim == 2
    assert config.restarts == 50
    assert config.seed == 7
    assert config.seed_source == "flag"

    config = parse_args(["simulate", "--protocol", "qutrit", "--analytic"])
    assert config.protocol == "qutrit"
    assert config.analytic is True
    assert config.seed == 0
    assert isinstance(config, RunConfig)


def test_usage_errors_exit_2(capsys):
    assert run_cli(capsys, [])[0] == 2
    assert run_cli(capsys, ["classical-bound", "--dim", "2"])[0] == 2  # witness missing
    assert run_cli(capsys, ["simulate", "--protocol", "qubit", "--bogus"])[0] == 2
    assert run_cli(capsys, ["classical-bound", "--witness", "chsh", "--dim", "0"])[0] == 2


def test_missing_files_exit_1_with_location(capsys):
    code, _, err = run_cli(capsys, ["eval", "--witness", "chsh", "--behavior", "/nope.beh"])
    assert code == 1
    assert "/nope.beh" in err
    code, _, err = run_cli(
        capsys, ["classical-bound", "--witness", "/nope.wit", "--dim", "2"]
    )
    assert code == 1
    assert "/nope.wit" in err


def test_chsh_exact_prints_closed_form(capsys):
    code, out, _ = run_cli(capsys, ["chsh-exact", "--dim", "2"])
    assert code == 0
    assert section_value(out, "result", "value").startswith("5.656854")
    assert section_value(out, "result", "theta_degrees") == "45.0"
    code, out, _ = run_cli(capsys, ["chsh-exact", "--dim", "3"])
    assert float(section_value(out, "result", "theta_radians")) == pytest.approx(
        math.atan(2)
    )
    code, out, _ = run_cli(capsys, ["chsh-exact", "--dim", "4"])
    assert float(section_value(out, "result", "value")) == 8.0


def test_classical_bound_builtin_witness(capsys):
    code, out, _ = run_cli(capsys, ["classical-bound", "--witness", "chsh", "--dim", "4"])
    assert code == 0
    assert float(section_value(out, "result", "classical_bound")) == 8.0
    assert section_value(out, "result", "enumeration_size") == "1"


def test_classical_bound_witness_file_round_trip(tmp_path, capsys):
    path = tmp_path / "w.wit"
    write_witness(path, chsh_witness())
    code, out, _ = run_cli(capsys, ["classical-bound", "--witness", str(path), "--dim", "3"])
    assert code == 0
    assert float(section_value(out, "result", "classical_bound")) == 6.0


def test_quantum_bound_cli(capsys):
    code, out, _ = run_cli(
        capsys,
        ["quantum-bound", "--witness", "chsh", "--dim", "2", "--restarts", "8"],
    )
    assert code == 0
    value = float(section_value(out, "result", "quantum_bound"))
    assert value == pytest.approx(4 * math.sqrt(2), abs=1e-6)
    assert section_value(out, "run", "seed_source") == "default"


def test_eval_on_behavior_file(tmp_path, capsys):
    from dimwitness import Behavior
    from dimwitness.formats import write_behavior

    wit = chsh_witness()
    table = np.zeros((4, 2, 2))
    table[..., 0] = 1.0
    path = tmp_path / "b.beh"
    write_behavior(path, Behavior(wit.scenario, table))
    code, out, _ = run_cli(capsys, ["eval", "--witness", "chsh", "--behavior", str(path)])
    assert code == 0
    assert float(section_value(out, "result", "value")) == pytest.approx(0.0)


def test_simulate_analytic_reproduces_theory(capsys):
    code, out, _ = run_cli(capsys, ["simulate", "--protocol", "quart", "--analytic"])
    assert code == 0
    table_row = out.splitlines()[-1]
    cells = table_row.split()
    assert cells[0] == "chsh(quart)"
    assert cells[1] == "8.00"
    assert cells[3] == "8.00"  # corrected column equals theory when noiseless
    assert float(section_value(out, "result", "d_exp")) == pytest.approx(8.0, abs=1e-10)


def test_simulate_noisy_qubit_run(capsys):
    code, out, _ = run_cli(capsys, ["simulate", "--protocol", "qubit", "--seed", "1"])
    assert code == 0
    d_exp = float(section_value(out, "result", "d_exp"))
    d_corr = float(section_value(out, "result", "d_exp_corrected"))
    assert 5.4 < d_exp < 5.66
    assert d_corr > d_exp
    assert section_value(out, "run", "seed_source") == "flag"


def test_identical_invocations_are_byte_identical(tmp_path, capsys):
    out_a = tmp_path / "a.res"
    out_b = tmp_path / "b.res"
    argv = ["simulate", "--protocol", "qutrit", "--seed", "3"]
    _, stdout_a, _ = run_cli(capsys, argv + ["--output", str(out_a)])
    _, stdout_b, _ = run_cli(capsys, argv + ["--output", str(out_b)])
    assert stdout_a.replace(str(out_a), "") == stdout_b.replace(str(out_b), "")
    assert out_a.read_bytes() == out_b.read_bytes()


def test_report_round_trips_the_table(tmp_path, capsys):
    res = tmp_path / "run.res"
    _, sim_out, _ = run_cli(
        capsys, ["simulate", "--protocol", "trit", "--analytic", "--output", str(res)]
    )
    sim_table = sim_out.splitlines()[-2:]
    code, rep_out, _ = run_cli(capsys, ["report", str(res)])
    assert code == 0
    assert rep_out.splitlines()[-2:] == sim_table

    combined = tmp_path / "combined.res"
    code, _, _ = run_cli(capsys, ["report", str(res), str(res), "--output", str(combined)])
    assert code == 0
    sections = read_result_file(combined)
    assert "result_1" in sections and "result_2" in sections
    assert sections["result_1"]["witness"] == "chsh"
    code, rep2, _ = run_cli(capsys, ["report", str(combined)])
    assert code == 0
    assert rep2.splitlines()[-1] == sim_table[-1]


def test_certify_cli_reports_ladder_and_sdi(capsys):
    code, out, _ = run_cli(capsys, ["certify", "--value", "5.56", "--sigma", "0.12"])
    assert code == 0
    assert section_value(out, "certificate", "minimal_classical_dim") == "3"
    assert section_value(out, "certificate", "minimal_quantum_dim") == "2"
    assert float(section_value(out, "sdi", "min_entropy")) == pytest.approx(0.0820)
    code, out, _ = run_cli(capsys, ["certify", "--value", "7.88"])
    assert code == 0
    assert section_value(out, "certificate", "minimal_quantum_dim") == "4"
    assert "[sdi]" not in out
    # algebraically impossible value is an operational error
    assert run_cli(capsys, ["certify", "--value", "9.0"])[0] == 1


def test_settings_file_overrides_preset(tmp_path, capsys):
    settings = tmp_path / "detune.set"
    settings.write_text("meas 1 20.0\n")
    _, base, _ = run_cli(capsys, ["simulate", "--protocol", "qubit", "--analytic"])
    code, detuned, _ = run_cli(
        capsys,
        ["simulate", "--protocol", "qubit", "--analytic", "--settings", str(settings)],
    )
    assert code == 0
    base_value = float(section_value(base, "result", "d_exp"))
    detuned_value = float(section_value(detuned, "result", "d_exp"))
    assert base_value == pytest.approx(4 * math.sqrt(2), abs=1e-10)
    assert detuned_value < base_value - 0.05
    # out-of-range override index fails operationally
    settings.write_text("meas 5 20.0\n")
    code, _, err = run_cli(
        capsys,
        ["simulate", "--protocol", "qubit", "--analytic", "--settings", str(settings)],
    )
    assert code == 1
    assert "y=5" in err


def test_env_seed_is_honored_without_flag(capsys, monkeypatch):
    monkeypatch.setenv(ENV_SEED, "11")
    _, out, _ = run_cli(capsys, ["simulate", "--protocol", "bit", "--seed", "4"])
    assert section_value(out, "run", "seed") == "4"
    assert section_value(out, "run", "seed_source") == "flag"
    _, out, _ = run_cli(capsys, ["simulate", "--protocol", "bit"])
    assert section_value(out, "run", "seed") == "11"
    assert section_value(out, "run", "seed_source") == "env"
    monkeypatch.delenv(ENV_SEED)
    _, out, _ = run_cli(capsys, ["simulate", "--protocol", "bit"])
    assert section_value(out, "run", "seed") == "0"
    assert section_value(out, "run", "seed_source") == "default"
    monkeypatch.setenv(ENV_SEED, "not-a-seed")
    assert run_cli(capsys, ["simulate", "--protocol", "bit"])[0] == 2


def test_dispatch_writes_output_file(tmp_path, capsys):
    out_path = tmp_path / "exact.res"
    config = parse_args(["chsh-exact", "--dim", "2", "--output", str(out_path)])
    assert dispatch(config) == 0
    capsys.readouterr()
    sections = read_result_file(out_path)
    assert sections["result"]["value"].startswith("5.656854")
