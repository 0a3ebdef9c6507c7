"""Command-line entry point.

One executable, seven subcommands: eval, classical-bound, quantum-bound,
chsh-exact, simulate, report, certify.  Every command prints its results in
the structured section format; simulate and report append the text table.
With --output the same sections go to a result file.  All angles at this
boundary are degrees; seeds default to 0 so plain reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, formats, photonic
from .classical import DEFAULT_ENUMERATION_BUDGET, BudgetExceededError, classical_bound
from .photonic import EstimationError, UnreachableStateError
from .quantum import chsh_optimal_config, seesaw
from .witness import (
    ScenarioMismatchError,
    ValidationError,
    chsh_bounds,
    chsh_witness,
    evaluate_witness,
)

__all__ = ["RunConfig", "parse_args", "dispatch", "main", "DEFAULT_SEED", "ENV_SEED"]

DEFAULT_SEED = 0
ENV_SEED = "DIMWITNESS_SEED"

_COMMANDS = (
    "eval",
    "classical-bound",
    "quantum-bound",
    "chsh-exact",
    "simulate",
    "report",
    "certify",
)

_SOURCE_DEFAULTS = photonic.SourceParams()

_OPERATIONAL_ERRORS = (
    formats.FormatError,
    ValidationError,
    ScenarioMismatchError,
    BudgetExceededError,
    UnreachableStateError,
    EstimationError,
    analysis.PropagationError,
    OSError,
)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation; one command per config."""

    command: str
    witness_path: str | None = None
    behavior_path: str | None = None
    protocol: str | None = None
    dim: int | None = None
    restarts: int = 50
    seed: int = DEFAULT_SEED
    seed_source: str = "default"
    tol: float = 1e-9
    budget: int = DEFAULT_ENUMERATION_BUDGET
    duration: float = _SOURCE_DEFAULTS.duration
    rate: float = _SOURCE_DEFAULTS.singles_rate
    eta: float = _SOURCE_DEFAULTS.detection_efficiency
    dark: float = _SOURCE_DEFAULTS.dark_rate
    analytic: bool = False
    settings_path: str | None = None
    output_path: str | None = None
    value: float | None = None
    sigma: float | None = None
    result_paths: tuple = ()


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimwitness",
        description="Dimension witness bounds, simulation and certification.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    def witness_flag(p):
        p.add_argument(
            "--witness",
            required=True,
            help="witness file path, or the built-in name `chsh`",
        )

    def output_flag(p):
        p.add_argument("--output", help="write the structured sections to this file")

    p = sub.add_parser("eval", help="evaluate a witness on a behavior file")
    witness_flag(p)
    p.add_argument("--behavior", required=True, help="behavior file path")
    output_flag(p)

    p = sub.add_parser("classical-bound", help="exact classical bound C_d")
    witness_flag(p)
    p.add_argument("--dim", required=True, type=_positive_int)
    p.add_argument(
        "--budget",
        type=_positive_int,
        default=DEFAULT_ENUMERATION_BUDGET,
        help="enumeration budget in message subsets",
    )
    output_flag(p)

    p = sub.add_parser("quantum-bound", help="seesaw lower bound Q_d")
    witness_flag(p)
    p.add_argument("--dim", required=True, type=_positive_int)
    p.add_argument("--restarts", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    output_flag(p)

    p = sub.add_parser("chsh-exact", help="closed-form optimum of the built-in witness")
    p.add_argument("--dim", required=True, type=int, choices=(2, 3, 4))
    output_flag(p)

    p = sub.add_parser("simulate", help="simulate a bench run of one protocol")
    p.add_argument(
        "--protocol",
        required=True,
        choices=photonic.PROTOCOLS,
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=_SOURCE_DEFAULTS.duration,
                   help="seconds per setting pair")
    p.add_argument("--rate", type=float, default=_SOURCE_DEFAULTS.singles_rate,
                   help="source singles rate in 1/s")
    p.add_argument("--eta", type=float, default=_SOURCE_DEFAULTS.detection_efficiency,
                   help="detection efficiency")
    p.add_argument("--dark", type=float, default=_SOURCE_DEFAULTS.dark_rate,
                   help="dark rate per detector in 1/s")
    p.add_argument("--analytic", action="store_true",
                   help="exact expected frequencies instead of sampled counts")
    p.add_argument("--settings", help="settings file overriding preset angles")
    output_flag(p)

    p = sub.add_parser("report", help="tabulate one or more result files")
    p.add_argument("results", nargs="+", metavar="result-file")
    output_flag(p)

    p = sub.add_parser("certify", help="dimension certificate for a witness value")
    p.add_argument("--value", required=True, type=float)
    p.add_argument("--sigma", type=float, default=None)
    output_flag(p)

    return parser


def _resolve_seed(parser, flag_value):
    """Seed and its provenance: --seed flag beats the environment beats 0."""
    if flag_value is not None:
        return int(flag_value), "flag"
    raw = os.environ.get(ENV_SEED)
    if raw is not None and raw.strip():
        try:
            return int(raw), "env"
        except ValueError:
            parser.error(f"{ENV_SEED} must be an integer, got {raw!r}")
    return DEFAULT_SEED, "default"


def parse_args(argv) -> RunConfig:
    parser = _build_parser()
    args = parser.parse_args(list(argv))
    if args.command is None:
        parser.error("a command is required")

    common = {"command": args.command, "output_path": getattr(args, "output", None)}
    if hasattr(args, "seed"):
        seed, source = _resolve_seed(parser, args.seed)
        common.update(seed=seed, seed_source=source)

    if args.command == "eval":
        return RunConfig(witness_path=args.witness, behavior_path=args.behavior, **common)
    if args.command == "classical-bound":
        return RunConfig(witness_path=args.witness, dim=args.dim, budget=args.budget, **common)
    if args.command == "quantum-bound":
        return RunConfig(
            witness_path=args.witness,
            dim=args.dim,
            restarts=args.restarts,
            tol=args.tol,
            **common,
        )
    if args.command == "chsh-exact":
        return RunConfig(dim=args.dim, **common)
    if args.command == "simulate":
        return RunConfig(
            protocol=args.protocol,
            duration=args.duration,
            rate=args.rate,
            eta=args.eta,
            dark=args.dark,
            analytic=args.analytic,
            settings_path=args.settings,
            **common,
        )
    if args.command == "report":
        return RunConfig(result_paths=tuple(args.results), **common)
    assert args.command == "certify"
    return RunConfig(value=args.value, sigma=args.sigma, **common)


def _fmt(value) -> str:
    return repr(float(value))


def _fmt_vector(amplitudes) -> str:
    amps = np.asarray(amplitudes)
    if np.abs(amps.imag).max() < 1e-12:
        return " ".join(repr(float(a)) for a in amps.real)
    return " ".join(repr(complex(a)) for a in amps)


def _load_witness(ref: str):
    if ref == "chsh":
        return chsh_witness()
    return formats.read_witness(ref)


def _cmd_eval(config: RunConfig):
    wit = _load_witness(config.witness_path)
    behavior = formats.read_behavior(config.behavior_path)
    value = evaluate_witness(wit, behavior)
    sections = {
        "run": {
            "command": "eval",
            "witness": config.witness_path,
            "behavior": config.behavior_path,
        },
        "result": {"witness": wit.name, "value": _fmt(value)},
    }
    return sections, None


def _cmd_classical_bound(config: RunConfig):
    wit = _load_witness(config.witness_path)
    res = classical_bound(wit, config.dim, enumeration_budget=config.budget)
    record = {
        "witness": wit.name,
        "dim": str(config.dim),
        "classical_bound": _fmt(res.bound),
        "enumeration_size": str(res.enumeration_size),
    }
    for i, message in enumerate(res.strategy.messages, start=1):
        record[f"message_{i}"] = " ".join(str(v) for v in message)
    record["assignment"] = " ".join(
        str(i + 1) for i in res.strategy.assignment
    )
    sections = {
        "run": {
            "command": "classical-bound",
            "witness": config.witness_path,
            "dim": str(config.dim),
            "budget": str(config.budget),
        },
        "result": record,
    }
    return sections, None


def _cmd_quantum_bound(config: RunConfig):
    wit = _load_witness(config.witness_path)
    result = seesaw(
        wit,
        config.dim,
        restarts=config.restarts,
        tolerance=config.tol,
        seed=config.seed,
    )
    sections = {
        "run": {
            "command": "quantum-bound",
            "witness": config.witness_path,
            "dim": str(config.dim),
            "restarts": str(config.restarts),
            "seed": str(config.seed),
            "seed_source": config.seed_source,
            "tol": _fmt(config.tol),
        },
        "result": {
            "witness": wit.name,
            "dim": str(config.dim),
            "quantum_bound": _fmt(result.value),
        },
    }
    return sections, None


def _cmd_chsh_exact(config: RunConfig):
    cfg = chsh_optimal_config(config.dim)
    record = {"dim": str(config.dim)}
    if cfg.angle_theta is not None:
        record["theta_degrees"] = _fmt(math.degrees(cfg.angle_theta))
        record["theta_radians"] = _fmt(cfg.angle_theta)
    record["value"] = _fmt(cfg.value)
    for i, state in enumerate(cfg.states, start=1):
        record[f"state_{i}"] = _fmt_vector(state.amplitudes)
    sections = {
        "run": {"command": "chsh-exact", "dim": str(config.dim)},
        "result": record,
    }
    return sections, None


def _result_record(result: analysis.ExperimentResult) -> dict:
    return {
        "witness": result.witness_name,
        "protocol": result.protocol,
        "d_th": _fmt(result.d_th),
        "d_exp": _fmt(result.d_exp),
        "d_exp_corrected": _fmt(result.d_exp_corrected),
        "delta_p": _fmt(result.errors.delta_p),
        "delta_d": _fmt(result.errors.delta_d),
        "delta_total": _fmt(result.errors.delta_total),
    }


def _cmd_simulate(config: RunConfig):
    preset = photonic.protocol_preset(config.protocol)
    preps = list(preset.preparations)
    phis = list(preset.measurement_phis)
    if config.settings_path:
        prep_over, meas_over = formats.read_settings(config.settings_path)
        for x, prep in prep_over.items():
            if x > len(preps):
                raise ValidationError(
                    f"settings file sets prep x={x}; protocol has {len(preps)}"
                )
            preps[x - 1] = prep
        for y, phi in meas_over.items():
            if y > len(phis):
                raise ValidationError(
                    f"settings file sets meas y={y}; protocol has {len(phis)}"
                )
            phis[y - 1] = phi

    source = photonic.SourceParams(
        singles_rate=config.rate,
        duration=config.duration,
        detection_efficiency=config.eta,
        dark_rate=config.dark,
    )
    wit = chsh_witness()
    raw_behavior, counts = photonic.run_experiment(
        preset.outcome_protocol,
        preps,
        phis,
        source,
        seed=config.seed,
        analytic=config.analytic,
        responses=preset.responses,
    )
    if config.analytic:
        corrected_counts = counts
        corrected_behavior = raw_behavior
    else:
        corrected_counts = analysis.dark_correct(counts, source)
        corrected_behavior = photonic.estimate_behavior(
            corrected_counts, preset.outcome_protocol, preset.responses
        )
    signs = photonic.outcome_signs(
        preset.outcome_protocol, len(phis), preset.responses
    )
    delta_d = analysis.poisson_error(corrected_counts, wit, signs)
    delta_p = analysis.settings_error(
        preset.outcome_protocol,
        preps,
        phis,
        seed=config.seed,
        responses=preset.responses,
    )
    result = analysis.build_result(
        raw_behavior,
        corrected_behavior,
        wit,
        analysis.ErrorBudget(delta_p, delta_d),
        config.protocol,
    )

    run_record = {
        "command": "simulate",
        "protocol": config.protocol,
        "analytic": "true" if config.analytic else "false",
        "seed": str(config.seed),
        "seed_source": config.seed_source,
        "duration": _fmt(config.duration),
        "rate": _fmt(config.rate),
        "eta": _fmt(config.eta),
        "dark": _fmt(config.dark),
    }
    if config.settings_path:
        run_record["settings"] = config.settings_path
    counts_record = {}
    behavior_record = {}
    for x in range(len(preps)):
        for y in range(len(phis)):
            key = f"x{x + 1}_y{y + 1}"
            if config.analytic:
                counts_record[key] = " ".join(_fmt(c) for c in counts[x, y])
            else:
                counts_record[key] = " ".join(str(int(c)) for c in counts[x, y])
            pp, pm = corrected_behavior.probabilities[x, y]
            behavior_record[key] = f"{_fmt(pp)} {_fmt(pm)}"
    sections = {
        "run": run_record,
        "result": _result_record(result),
        "counts": counts_record,
        "behavior": behavior_record,
    }
    return sections, analysis.report_table([result])


def _result_from_record(path, record) -> analysis.ExperimentResult:
    def field(key):
        if key not in record:
            raise formats.FormatError(path, None, f"result section lacks {key!r}")
        return record[key]

    def number(key):
        raw = field(key)
        try:
            return float(raw)
        except ValueError:
            raise formats.FormatError(path, None, f"{key} must be a number, got {raw!r}")

    return analysis.ExperimentResult(
        witness_name=field("witness"),
        protocol=field("protocol"),
        d_th=number("d_th"),
        d_exp=number("d_exp"),
        d_exp_corrected=number("d_exp_corrected"),
        errors=analysis.ErrorBudget(number("delta_p"), number("delta_d")),
    )


def _cmd_report(config: RunConfig):
    results = []
    for path in config.result_paths:
        sections = formats.read_result_file(path)
        records = [
            record
            for name, record in sections.items()
            if name == "result" or name.startswith("result_")
        ]
        if not records:
            raise formats.FormatError(path, None, "no [result] section found")
        results.extend(_result_from_record(path, record) for record in records)
    out = {"run": {"command": "report", "inputs": " ".join(config.result_paths)}}
    for i, result in enumerate(results, start=1):
        out[f"result_{i}"] = _result_record(result)
    return out, analysis.report_table(results)


def _cmd_certify(config: RunConfig):
    cert = analysis.certify_value(config.value, config.sigma)
    record = {
        "witness_value": _fmt(cert.witness_value),
        "sigma": "none" if cert.sigma is None else _fmt(cert.sigma),
        "minimal_classical_dim": str(cert.minimal_classical_dim),
        "minimal_quantum_dim": str(cert.minimal_quantum_dim),
    }
    for i, (name, bound, margin) in enumerate(cert.exceeded_bounds, start=1):
        record[f"exceeded_{i}_name"] = name
        record[f"exceeded_{i}_bound"] = _fmt(bound)
        record[f"exceeded_{i}_margin"] = "none" if margin is None else _fmt(margin)
    run_record = {
        "command": "certify",
        "value": _fmt(config.value),
        "sigma": "none" if config.sigma is None else _fmt(config.sigma),
    }
    sections = {"run": run_record, "certificate": record}
    if config.value <= chsh_bounds(2).quantum_bound + 1e-9:
        ref = analysis.sdi_reference(config.value)
        sections["sdi"] = {
            "certified": "true" if ref.certified else "false",
            "min_entropy": "none" if ref.min_entropy is None else _fmt(ref.min_entropy),
            "interpolated": "true" if ref.interpolated else "false",
            "note": ref.note,
            "key_rate_raw": _fmt(ref.key_rate_raw),
            "key_rate_trusted_dark": _fmt(ref.key_rate_trusted_dark),
        }
    return sections, None


_HANDLERS = {
    "eval": _cmd_eval,
    "classical-bound": _cmd_classical_bound,
    "quantum-bound": _cmd_quantum_bound,
    "chsh-exact": _cmd_chsh_exact,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
    "certify": _cmd_certify,
}


def dispatch(config: RunConfig) -> int:
    """Run one command; 0 on success.  Operational failures raise."""
    sections, table = _HANDLERS[config.command](config)
    text = formats.render_sections(sections)
    if table is not None:
        text += "\n" + table + "\n"
    sys.stdout.write(text)
    if config.output_path:
        formats.write_result_file(config.output_path, sections)
    return 0


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return dispatch(config)
    except _OPERATIONAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
