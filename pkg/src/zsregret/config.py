"""Sweep configuration files and matrix literals.

A config is a flat TOML document with optional ``[learner.<label>]`` and
``[adversary.<label>]`` parameter tables::

    matrix_id = "fig1"
    matrix = "2/3, 0; 0, 1/3"
    scale = "unit"
    horizons = [10, 100, 1000]
    trials = 32
    learners = ["ours", "ucb", "exp3"]
    adversaries = ["hybrid", "best_response", "adaptive"]

    [learner.ours]
    skip_exploration = true

Every problem found is reported at once through :class:`ConfigError`.
:func:`dumps` writes the canonical form, and ``loads(dumps(c)) == c``.
"""
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .environment import DEFAULT_SEED, NOISE_KINDS, NoiseModel
from .errors import ConfigError, InvalidMatrix
from .game_core import GameMatrix

# ---------------------------------------------------------------------------
# matrix literals

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/[+-]?\d+)?$")


class MatrixParseError(ValueError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


def _value(token: str) -> float:
    if "/" in token:
        num, den = token.split("/")
        return float(Fraction(num) / Fraction(den))
    return float(token)


def parse_matrix_tokens(text: str) -> List[List[str]]:
    """Split a matrix literal into rows of number tokens.

    Rows are separated by ``;`` or newlines, entries by commas or blanks;
    ``#`` starts a comment. Entries may be decimals or fractions like 2/3.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines() or [""], start=1):
        line = raw.split("#", 1)[0]
        start = 0
        for seg in line.split(";"):
            tokens = []
            for m in re.finditer(r"[^,\s]+", seg):
                tok = m.group(0)
                col = start + m.start() + 1
                if not _NUMBER.match(tok):
                    raise MatrixParseError(f"cannot read {tok!r} as a number", lineno, col)
                if "/" in tok and Fraction(tok.split("/")[1]) == 0:
                    raise MatrixParseError(f"zero denominator in {tok!r}", lineno, col)
                tokens.append(tok)
            if tokens:
                if rows and len(tokens) != len(rows[0]):
                    raise MatrixParseError(
                        f"row has {len(tokens)} entries, expected {len(rows[0])}", lineno, start + 1)
                rows.append(tokens)
            start += len(seg) + 1
    if not rows:
        raise MatrixParseError("empty matrix", 1, 1)
    return rows


def parse_matrix(text: str) -> np.ndarray:
    return np.array([[_value(t) for t in row] for row in parse_matrix_tokens(text)])


def format_matrix(tokens) -> str:
    return "; ".join(", ".join(row) for row in tokens)


# ---------------------------------------------------------------------------
# sweep configs

LEARNER_PARAMS = {
    "ours": {"skip_exploration": bool},
    "ours_skip": {},
    "ucb": {},
    "exp3": {},
    "fixed": {"x": list},
    "full_info": {},
}
ADVERSARY_PARAMS = {
    "fixed": {"y": list},
    "nash": {},
    "best_response": {},
    "hybrid": {"switch_fraction": float},
    "adaptive": {"threshold": float},
    "ucb_killer": {},
}
TOP_KEYS = ("matrix_id", "matrix", "scale", "noise", "horizons", "trials", "seed",
            "learners", "adversaries", "learner", "adversary")
SCALES = ("unit", "native")


@dataclass
class SweepConfig:
    matrix: str
    horizons: List[int]
    learners: Dict[str, Tuple[str, dict]]
    adversaries: Dict[str, Tuple[str, dict]]
    matrix_id: str = "custom"
    scale: str = "unit"
    noise: str = "bernoulli"
    trials: int = 32
    seed: int = DEFAULT_SEED

    def game(self) -> GameMatrix:
        return GameMatrix(parse_matrix(self.matrix), unit=self.scale == "unit")

    def sweep_spec(self):
        from .harness import SweepSpec

        return SweepSpec(self.game(), list(self.horizons), dict(self.learners), dict(self.adversaries),
                         self.trials, self.seed, NoiseModel(self.noise), self.matrix_id)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _check_params(where, kind, params, table, problems):
    allowed = table[kind]
    out = {}
    for key, val in params.items():
        if key == "kind":
            continue
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r} for kind {kind!r}")
            continue
        want = allowed[key]
        if want is bool and not isinstance(val, bool):
            problems.append(f"{where}.{key}: expected true or false")
        elif want is float and not _is_num(val):
            problems.append(f"{where}.{key}: expected a number")
        elif want is list and not (isinstance(val, list) and val and all(_is_num(v) for v in val)):
            problems.append(f"{where}.{key}: expected a list of numbers")
        else:
            out[key] = float(val) if want is float else ([float(v) for v in val] if want is list else val)
    if kind == "hybrid" and "switch_fraction" in out and not 0.0 < out["switch_fraction"] <= 1.0:
        problems.append(f"{where}.switch_fraction: must lie in (0, 1]")
    if kind == "adaptive" and "threshold" in out and out["threshold"] <= 0.0:
        problems.append(f"{where}.threshold: must be positive")
    if kind == "fixed" and where.startswith("adversary") and "y" not in out and "y" not in params:
        problems.append(f"{where}: fixed adversary needs y")
    return out


def _players(doc, list_key, table_key, table, problems):
    labels = doc.get(list_key)
    tables = doc.get(table_key, {})
    if not isinstance(tables, dict):
        problems.append(f"{table_key}: expected a table of [{table_key}.<label>] sections")
        tables = {}
    if labels is None:
        problems.append(f"missing required key {list_key!r}")
        return {}
    if not (isinstance(labels, list) and labels and all(isinstance(l, str) for l in labels)):
        problems.append(f"{list_key}: expected a non-empty list of names")
        return {}
    if len(set(labels)) != len(labels):
        problems.append(f"{list_key}: duplicate names")
    for extra in sorted(set(tables) - set(labels)):
        problems.append(f"[{table_key}.{extra}] does not match any entry of {list_key}")
    out = {}
    for label in labels:
        params = tables.get(label, {})
        if not isinstance(params, dict):
            problems.append(f"{table_key}.{label}: expected a table")
            continue
        kind = params.get("kind", label)
        if kind not in table:
            problems.append(f"{table_key}.{label}: unknown kind {kind!r}; expected one of {sorted(table)}")
            continue
        out[label] = (kind, _check_params(f"{table_key}.{label}", kind, params, table, problems))
    return out


def from_dict(doc: dict) -> SweepConfig:
    problems = []
    for key in doc:
        if key not in TOP_KEYS:
            problems.append(f"unknown key {key!r}")
    matrix = doc.get("matrix")
    matrix_text = ""
    if matrix is None:
        problems.append("missing required key 'matrix'")
    else:
        if isinstance(matrix, list):
            if not all(isinstance(r, list) and all(_is_num(v) for v in r) for r in matrix):
                problems.append("matrix: expected a string literal or a list of numeric rows")
                matrix = None
            else:
                matrix = "; ".join(", ".join(repr(float(v)) for v in r) for r in matrix)
        if isinstance(matrix, str):
            try:
                matrix_text = format_matrix(parse_matrix_tokens(matrix))
            except MatrixParseError as exc:
                problems.append(f"matrix: {exc}")
        elif matrix is not None:
            problems.append("matrix: expected a string literal or a list of numeric rows")
    scale = doc.get("scale", "unit")
    if scale not in SCALES:
        problems.append(f"scale: expected one of {SCALES}")
    noise = doc.get("noise", "bernoulli")
    if noise not in NOISE_KINDS:
        problems.append(f"noise: expected one of {NOISE_KINDS}")
    matrix_id = doc.get("matrix_id", "custom")
    if not isinstance(matrix_id, str) or not re.match(r"^[A-Za-z0-9_.-]+$", matrix_id):
        problems.append("matrix_id: expected a name made of letters, digits, '_', '.' or '-'")
    horizons = doc.get("horizons")
    if horizons is None:
        problems.append("missing required key 'horizons'")
        horizons = []
    elif not (isinstance(horizons, list) and horizons and all(_is_int(T) and T >= 1 for T in horizons)):
        problems.append("horizons: expected a non-empty list of positive integers")
        horizons = []
    elif any(b <= a for a, b in zip(horizons, horizons[1:])):
        problems.append("horizons: must be strictly increasing")
    trials = doc.get("trials", 32)
    if not (_is_int(trials) and trials >= 1):
        problems.append("trials: expected a positive integer")
    seed = doc.get("seed", DEFAULT_SEED)
    if not (_is_int(seed) and seed >= 0):
        problems.append("seed: expected a non-negative integer")
    learners = _players(doc, "learners", "learner", LEARNER_PARAMS, problems)
    adversaries = _players(doc, "adversaries", "adversary", ADVERSARY_PARAMS, problems)
    if matrix_text and not problems:
        try:
            GameMatrix(parse_matrix(matrix_text), unit=scale == "unit")
        except InvalidMatrix as exc:
            problems.append(f"matrix: {exc}")
    if problems:
        raise ConfigError(problems)
    return SweepConfig(matrix_text, list(horizons), learners, adversaries, matrix_id, scale,
                       noise, trials, seed)


def loads(text: str) -> SweepConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    return from_dict(doc)


def load(path) -> SweepConfig:
    return loads(Path(path).read_text())


def bundled(name: str = "paper_fig1") -> SweepConfig:
    return loads(resources.files("zsregret").joinpath("data", name + ".cfg").read_text())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if _is_int(v):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(a) for a in v) + "]"
    raise TypeError(f"cannot serialize {v!r}")


def dumps(cfg: SweepConfig) -> str:
    """Canonical text: fixed key order, one table per labelled player."""
    lines = [
        f"matrix_id = {_toml_value(cfg.matrix_id)}",
        f"matrix = {_toml_value(cfg.matrix)}",
        f"scale = {_toml_value(cfg.scale)}",
        f"noise = {_toml_value(cfg.noise)}",
        f"horizons = {_toml_value(list(cfg.horizons))}",
        f"trials = {cfg.trials}",
        f"seed = {cfg.seed}",
        f"learners = {_toml_value(list(cfg.learners))}",
        f"adversaries = {_toml_value(list(cfg.adversaries))}",
    ]
    for section, players in (("learner", cfg.learners), ("adversary", cfg.adversaries)):
        for label, (kind, params) in players.items():
            if kind == label and not params:
                continue
            lines.append("")
            lines.append(f"[{section}.{label}]")
            if kind != label:
                lines.append(f"kind = {_toml_value(kind)}")
            for key in sorted(params):
                lines.append(f"{key} = {_toml_value(params[key])}")
    return "\n".join(lines) + "\n"
