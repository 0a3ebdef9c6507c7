"""Line-oriented text formats: witness, behavior, settings and result files.

One family: whitespace-separated tokens, `#` starts a comment line, blank
lines are skipped.  Result files add bracketed `[section]` headers over
`key = value` records.  All indices in files are 1-based.
"""

from __future__ import annotations

import numpy as np

from .photonic import PreparationSettings
from .witness import Behavior, Scenario, Witness

__all__ = [
    "FormatError",
    "read_witness",
    "write_witness",
    "read_behavior",
    "write_behavior",
    "read_settings",
    "read_result_file",
    "write_result_file",
    "render_sections",
]


class FormatError(ValueError):
    """Parse failure; message carries file path and line number."""

    def __init__(self, path, lineno, message):
        location = str(path) if lineno is None else f"{path}:{lineno}"
        super().__init__(f"{location}: {message}")
        self.path = str(path)
        self.lineno = lineno


def _meaningful_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = handle.readlines()
    except OSError as exc:
        raise FormatError(path, None, f"cannot read file: {exc.strerror}") from exc
    for lineno, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped


def _parse_int(path, lineno, token, what):
    try:
        return int(token)
    except ValueError:
        raise FormatError(path, lineno, f"{what} must be an integer, got {token!r}")


def _parse_float(path, lineno, token, what):
    try:
        value = float(token)
    except ValueError:
        raise FormatError(path, lineno, f"{what} must be a number, got {token!r}")
    if not np.isfinite(value):
        raise FormatError(path, lineno, f"{what} must be finite, got {token!r}")
    return value


def _read_table(path, header, value_names):
    """Shared reader for witness and behavior files.

    Layout: `<header> [name]`, `scenario N m`, then one `x y v1 v2` line per
    pair.  Returns (name, scenario, (N, m, 2) array).  Entries may appear in
    any order; duplicates and gaps are rejected.
    """
    lines = _meaningful_lines(path)
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise FormatError(path, None, "empty file")
    tokens = first.split()
    if tokens[0] != header:
        raise FormatError(path, lineno, f"expected `{header} ...`, got {tokens[0]!r}")
    name = " ".join(tokens[1:]) if len(tokens) > 1 else header
    try:
        lineno, second = next(lines)
    except StopIteration:
        raise FormatError(path, None, "missing `scenario N m` line")
    tokens = second.split()
    if tokens[0] != "scenario" or len(tokens) != 3:
        raise FormatError(path, lineno, "expected `scenario N m`")
    n = _parse_int(path, lineno, tokens[1], "N")
    m = _parse_int(path, lineno, tokens[2], "m")
    if n < 1 or m < 1:
        raise FormatError(path, lineno, f"scenario sizes must be positive, got {n} {m}")
    scenario = Scenario(n, m)
    table = np.full((n, m, 2), np.nan)
    for lineno, line in lines:
        tokens = line.split()
        if len(tokens) != 4:
            raise FormatError(
                path, lineno, f"expected `x y {value_names[0]} {value_names[1]}`"
            )
        x = _parse_int(path, lineno, tokens[0], "x")
        y = _parse_int(path, lineno, tokens[1], "y")
        if not (1 <= x <= n and 1 <= y <= m):
            raise FormatError(
                path, lineno, f"pair (x={x}, y={y}) outside scenario {n}x{m}"
            )
        if not np.isnan(table[x - 1, y - 1]).all():
            raise FormatError(path, lineno, f"duplicate entry for (x={x}, y={y})")
        table[x - 1, y - 1, 0] = _parse_float(path, lineno, tokens[2], value_names[0])
        table[x - 1, y - 1, 1] = _parse_float(path, lineno, tokens[3], value_names[1])
    missing = np.argwhere(np.isnan(table[..., 0]))
    if missing.size:
        x, y = missing[0]
        raise FormatError(path, None, f"missing entry for (x={x + 1}, y={y + 1})")
    return name, scenario, table


def read_witness(path) -> Witness:
    name, scenario, table = _read_table(path, "witness", ("K_plus", "K_minus"))
    return Witness(scenario=scenario, coefficients=table, name=name)


def write_witness(path, witness: Witness) -> None:
    lines = [f"witness {witness.name}"]
    lines.append(
        f"scenario {witness.scenario.n_preparations} {witness.scenario.n_measurements}"
    )
    for x in range(witness.scenario.n_preparations):
        for y in range(witness.scenario.n_measurements):
            kp, km = witness.coefficients[x, y]
            lines.append(f"{x + 1} {y + 1} {float(kp)!r} {float(km)!r}")
    _write_text(path, "\n".join(lines) + "\n")


def read_behavior(path) -> Behavior:
    _, scenario, table = _read_table(path, "behavior", ("p_plus", "p_minus"))
    return Behavior(scenario=scenario, probabilities=table)


def write_behavior(path, behavior: Behavior) -> None:
    lines = ["behavior"]
    lines.append(
        f"scenario {behavior.scenario.n_preparations} "
        f"{behavior.scenario.n_measurements}"
    )
    for x in range(behavior.scenario.n_preparations):
        for y in range(behavior.scenario.n_measurements):
            pp, pm = behavior.probabilities[x, y]
            lines.append(f"{x + 1} {y + 1} {float(pp)!r} {float(pm)!r}")
    _write_text(path, "\n".join(lines) + "\n")


def read_settings(path):
    """Settings overrides: ({x: PreparationSettings}, {y: phi_degrees}).

    Lines are `prep x theta1 theta2 theta3` or `meas y phi`, angles in
    degrees.  A file may override any subset of a protocol's defaults.
    """
    preparations: dict = {}
    measurements: dict = {}
    for lineno, line in _meaningful_lines(path):
        tokens = line.split()
        if tokens[0] == "prep":
            if len(tokens) != 5:
                raise FormatError(path, lineno, "expected `prep x theta1 theta2 theta3`")
            x = _parse_int(path, lineno, tokens[1], "x")
            if x < 1:
                raise FormatError(path, lineno, f"preparation index must be >= 1, got {x}")
            if x in preparations:
                raise FormatError(path, lineno, f"duplicate prep entry for x={x}")
            angles = [
                _parse_float(path, lineno, tok, name)
                for tok, name in zip(tokens[2:], ("theta1", "theta2", "theta3"))
            ]
            preparations[x] = PreparationSettings(*(a % 180.0 for a in angles))
        elif tokens[0] == "meas":
            if len(tokens) != 3:
                raise FormatError(path, lineno, "expected `meas y phi`")
            y = _parse_int(path, lineno, tokens[1], "y")
            if y < 1:
                raise FormatError(path, lineno, f"measurement index must be >= 1, got {y}")
            if y in measurements:
                raise FormatError(path, lineno, f"duplicate meas entry for y={y}")
            measurements[y] = _parse_float(path, lineno, tokens[2], "phi") % 180.0
        else:
            raise FormatError(
                path, lineno, f"unknown directive {tokens[0]!r}; expected prep or meas"
            )
    return preparations, measurements


def read_result_file(path):
    """Ordered sections of a result file: {section: {key: value}}.

    Values come back as strings; numeric fields are the caller's to convert.
    """
    sections: dict = {}
    current = None
    for lineno, line in _meaningful_lines(path):
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise FormatError(path, lineno, "empty section name")
            if name in sections:
                raise FormatError(path, lineno, f"duplicate section [{name}]")
            current = sections.setdefault(name, {})
            continue
        if current is None:
            raise FormatError(path, lineno, "key-value line before any [section]")
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(path, lineno, "expected `key = value`")
        key = key.strip()
        if not key:
            raise FormatError(path, lineno, "empty key")
        if key in current:
            raise FormatError(path, lineno, f"duplicate key {key!r} in section")
        current[key] = value.strip()
    return sections


def render_sections(sections) -> str:
    """Result-file text for ordered {section: {key: value}} records."""
    blocks = []
    for name, record in sections.items():
        lines = [f"[{name}]"]
        lines.extend(f"{key} = {value}" for key, value in record.items())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_result_file(path, sections) -> None:
    _write_text(path, render_sections(sections))


def _write_text(path, text: str) -> None:
    # newline pinned so reruns are byte-stable across platforms
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
