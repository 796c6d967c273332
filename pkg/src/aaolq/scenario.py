"""Scenario documents: one JSON file fully determines a run.

Schema version 1. Top level keys:

* ``schema_version``: required, must be 1.
* exactly one of
  ``pursuit``: the planar pursuit family (see :class:`PursuitParams`), or
  ``explicit``: every game matrix inline (``A``, per-player lists ``B``,
  ``Q``, ``R``, ``S_f``, scalars ``t0``/``tf`` and the initial state
  ``x0``). Matrices are row-major arrays of arrays of decimal literals.
* ``run``: mode ("nash" or "team"), optional team weights ``alphas``,
  step size ``dt``, optional symmetric ``bound_q`` fed to the existence
  screen and envelope bound, ``capture_radius`` for explicit games, and
  the output directory ``out_dir``.

Parsing errors carry the path of the offending field. Emission uses
``repr`` floats (17 significant digits), so parse(emit(s)) reproduces
every matrix bitwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .errors import ScenarioError, ValidationError
from .game import GameDefinition, PursuitParams, build_pursuit_example
from .team import TeamWeights

SCHEMA_VERSION = 1
MODES = ("nash", "team")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "nash"
    alphas: tuple[float, ...] | None = None
    dt: float = 1e-3
    bound_q: np.ndarray | None = None
    capture_radius: float = 0.1
    out_dir: str = "out"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(f"run.mode: expected one of {MODES}, got {self.mode!r}")
        if not self.dt > 0:
            raise ScenarioError("run.dt: dt must be positive")
        if not self.capture_radius > 0:
            raise ScenarioError("run.capture_radius: must be positive")


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: a game source, an initial state and run settings."""

    pursuit: PursuitParams | None
    explicit: GameDefinition | None
    explicit_x0: np.ndarray | None
    run: RunConfig

    def __post_init__(self):
        if (self.pursuit is None) == (self.explicit is None):
            raise ScenarioError("exactly one of 'pursuit' or 'explicit' must be given")
        if self.explicit is not None and self.explicit_x0 is None:
            raise ScenarioError("explicit.x0: required for explicit games")

    def build_game(self) -> GameDefinition:
        if self.pursuit is not None:
            return build_pursuit_example(self.pursuit)
        return self.explicit

    @property
    def x0(self) -> np.ndarray:
        if self.pursuit is not None:
            return np.array(self.pursuit.x0, dtype=float)
        return np.array(self.explicit_x0, dtype=float)

    @property
    def capture_radius(self) -> float:
        if self.pursuit is not None:
            return self.pursuit.capture_radius
        return self.run.capture_radius


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ScenarioError(f"{path}.{key}: required field is missing")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {type(value).__name__}")
    if not math.isfinite(float(value)):
        raise ScenarioError(f"{path}: must be finite")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _vector(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{path}: expected a non-empty array of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{path}: expected a non-empty array of rows")
    rows = []
    width = None
    for i, row in enumerate(value):
        if not isinstance(row, list) or not row:
            raise ScenarioError(f"{path}[{i}]: expected a non-empty array of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ScenarioError(f"{path}[{i}]: ragged row, expected {width} entries")
        rows.append([_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=float)


def _matrix_list(value, path: str) -> list[np.ndarray]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{path}: expected a non-empty array of matrices")
    return [_matrix(m, f"{path}[{i}]") for i, m in enumerate(value)]


def _parse_pursuit(obj, path: str) -> PursuitParams:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    num = _integer(_require(obj, "num_pursuers", path), f"{path}.num_pursuers")
    evader = _require(obj, "evader", path)
    if not isinstance(evader, dict):
        raise ScenarioError(f"{path}.evader: expected an object")
    pursuers = _require(obj, "pursuers", path)
    if not isinstance(pursuers, list):
        raise ScenarioError(f"{path}.pursuers: expected an array of objects")
    if len(pursuers) != num:
        raise ScenarioError(f"{path}.pursuers: expected {num} entries, got {len(pursuers)}")

    def weight(entry, epath, key):
        if not isinstance(entry, dict):
            raise ScenarioError(f"{epath}: expected an object")
        return _number(_require(entry, key, epath), f"{epath}.{key}")

    kwargs = dict(
        num_pursuers=num,
        evader_terminal_weight=weight(evader, f"{path}.evader", "terminal_weight"),
        evader_state_weight=weight(evader, f"{path}.evader", "state_weight"),
        evader_control_weight=weight(evader, f"{path}.evader", "control_weight"),
        pursuer_terminal_weights=tuple(
            weight(p, f"{path}.pursuers[{i}]", "terminal_weight") for i, p in enumerate(pursuers)
        ),
        pursuer_state_weights=tuple(
            weight(p, f"{path}.pursuers[{i}]", "state_weight") for i, p in enumerate(pursuers)
        ),
        pursuer_control_weights=tuple(
            weight(p, f"{path}.pursuers[{i}]", "control_weight") for i, p in enumerate(pursuers)
        ),
        t0=_number(obj.get("t0", 0.0), f"{path}.t0"),
        tf=_number(_require(obj, "tf", path), f"{path}.tf"),
        capture_radius=_number(obj.get("capture_radius", 0.1), f"{path}.capture_radius"),
        x0=_vector(_require(obj, "x0", path), f"{path}.x0"),
    )
    if "evader_start" in obj:
        kwargs["evader_start"] = _vector(obj["evader_start"], f"{path}.evader_start")
    try:
        return PursuitParams(**kwargs)
    except ValidationError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_explicit(obj, path: str) -> tuple[GameDefinition, np.ndarray]:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    a = _matrix(_require(obj, "A", path), f"{path}.A")
    bs = _matrix_list(_require(obj, "B", path), f"{path}.B")
    qs = _matrix_list(_require(obj, "Q", path), f"{path}.Q")
    rs = _matrix_list(_require(obj, "R", path), f"{path}.R")
    sfs = _matrix_list(_require(obj, "S_f", path), f"{path}.S_f")
    t0 = _number(obj.get("t0", 0.0), f"{path}.t0")
    tf = _number(_require(obj, "tf", path), f"{path}.tf")
    x0 = np.array(_vector(_require(obj, "x0", path), f"{path}.x0"))
    try:
        game = GameDefinition(A=a, B=tuple(bs), Q=tuple(qs), R=tuple(rs), S_f=tuple(sfs), t0=t0, tf=tf)
    except ValidationError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if x0.size != game.n:
        raise ScenarioError(f"{path}.x0: expected {game.n} entries, got {x0.size}")
    return game, x0


def _parse_run(obj, path: str, regulators: int) -> RunConfig:
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    mode = obj.get("mode", "nash")
    if mode not in MODES:
        raise ScenarioError(f"{path}.mode: expected one of {MODES}, got {mode!r}")
    alphas = obj.get("alphas")
    parsed_alphas = None
    if alphas is not None:
        parsed_alphas = _vector(alphas, f"{path}.alphas")
        try:
            TeamWeights(parsed_alphas)
        except ValidationError as exc:
            raise ScenarioError(f"{path}.alphas: {exc}") from exc
        if len(parsed_alphas) != regulators:
            raise ScenarioError(
                f"{path}.alphas: expected {regulators} weights, got {len(parsed_alphas)}"
            )
    dt = _number(obj.get("dt", 1e-3), f"{path}.dt")
    if not dt > 0:
        raise ScenarioError(f"{path}.dt: dt must be positive")
    bound_q = None
    if obj.get("bound_q") is not None:
        raw = _matrix(obj["bound_q"], f"{path}.bound_q")
        try:
            bound_q = linalg.as_symmetric(raw, f"{path}.bound_q")
        except ValidationError as exc:
            raise ScenarioError(f"{path}.bound_q: {exc}") from exc
    radius = _number(obj.get("capture_radius", 0.1), f"{path}.capture_radius")
    if not radius > 0:
        raise ScenarioError(f"{path}.capture_radius: must be positive")
    out_dir = obj.get("out_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ScenarioError(f"{path}.out_dir: expected a non-empty string")
    return RunConfig(
        mode=mode,
        alphas=parsed_alphas,
        dt=dt,
        bound_q=bound_q,
        capture_radius=radius,
        out_dir=out_dir,
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate one scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: expected a JSON object at top level")
    version = _require(doc, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"scenario.schema_version: expected {SCHEMA_VERSION}, got {version!r}"
        )
    has_pursuit = "pursuit" in doc and doc["pursuit"] is not None
    has_explicit = "explicit" in doc and doc["explicit"] is not None
    if has_pursuit == has_explicit:
        raise ScenarioError("scenario: exactly one of 'pursuit' or 'explicit' must be given")
    unknown = set(doc) - {"schema_version", "pursuit", "explicit", "run"}
    if unknown:
        raise ScenarioError(f"scenario.{sorted(unknown)[0]}: unknown field")
    pursuit = None
    explicit = None
    x0 = None
    if has_pursuit:
        pursuit = _parse_pursuit(doc["pursuit"], "pursuit")
        regulators = pursuit.num_pursuers
    else:
        explicit, x0 = _parse_explicit(doc["explicit"], "explicit")
        regulators = explicit.num_players - 1
    run = _parse_run(doc.get("run"), "run", regulators)
    return Scenario(pursuit=pursuit, explicit=explicit, explicit_x0=x0, run=run)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def emit_scenario(scenario: Scenario) -> str:
    """Serialize a scenario back to its canonical JSON form."""
    doc: dict = {"schema_version": SCHEMA_VERSION}
    if scenario.pursuit is not None:
        p = scenario.pursuit
        doc["pursuit"] = {
            "num_pursuers": p.num_pursuers,
            "evader": {
                "terminal_weight": p.evader_terminal_weight,
                "state_weight": p.evader_state_weight,
                "control_weight": p.evader_control_weight,
            },
            "pursuers": [
                {
                    "terminal_weight": p.pursuer_terminal_weights[j],
                    "state_weight": p.pursuer_state_weights[j],
                    "control_weight": p.pursuer_control_weights[j],
                }
                for j in range(p.num_pursuers)
            ],
            "t0": p.t0,
            "tf": p.tf,
            "capture_radius": p.capture_radius,
            "x0": list(p.x0),
            "evader_start": list(p.evader_start),
        }
    else:
        g = scenario.explicit
        doc["explicit"] = {
            "A": g.A.tolist(),
            "B": [b.tolist() for b in g.B],
            "Q": [q.tolist() for q in g.Q],
            "R": [r.tolist() for r in g.R],
            "S_f": [s.tolist() for s in g.S_f],
            "t0": g.t0,
            "tf": g.tf,
            "x0": scenario.explicit_x0.tolist(),
        }
    run = scenario.run
    doc["run"] = {
        "mode": run.mode,
        "alphas": list(run.alphas) if run.alphas is not None else None,
        "dt": run.dt,
        "bound_q": run.bound_q.tolist() if run.bound_q is not None else None,
        "capture_radius": run.capture_radius,
        "out_dir": run.out_dir,
    }
    return json.dumps(doc, indent=2) + "\n"
