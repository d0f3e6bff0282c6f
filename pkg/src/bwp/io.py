"""Scenario files, CSV tables and run manifests."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .propagation import Scenario

# file key -> Scenario field
SCENARIO_KEYS = {
    "frequency_ghz": "frequency_ghz",
    "p_t_dbw_m2": "p_t_dbw_per_m2",
    "p_th_dbw_m2": "p_th_dbw_per_m2",
    "noise_dbw": "noise_dbw",
    "n_los": "n_los",
    "n_nlos": "n_nlos",
    "height_m": "antenna_height_m",
    "r_min_m": "r_min_m",
    "r_max_m": "r_max_m",
    "gamma_ground": "ground_reflection_coeff",
    "two_ray_form": "two_ray_form",
}
_TEXT_KEYS = {"two_ray_form"}

GRID_COLUMNS = ("x", "y", "g_i", "g_p", "p_b", "i_b", "p_o", "i_o")


class InputFileError(ValueError):
    """Malformed user-supplied file; ``line_no`` is 1-based when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if line_no else message)


def parse_scenario(text: str, **overrides) -> Scenario:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (s.strip() for s in line.partition("="))
        if not sep or not val:
            raise InputFileError(f"expected 'key = value', got {raw.strip()!r}", no)
        if key not in SCENARIO_KEYS:
            raise InputFileError(f"unknown key {key!r}", no)
        if key in values:
            raise InputFileError(f"duplicate key {key!r}", no)
        if key in _TEXT_KEYS:
            values[key] = val
        else:
            try:
                values[key] = float(val)
            except ValueError:
                raise InputFileError(f"{key} needs a number, got {val!r}", no) from None
    kwargs = {SCENARIO_KEYS[k]: v for k, v in values.items()}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if "frequency_ghz" not in kwargs:
        raise InputFileError("frequency_ghz is required")
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        raise InputFileError(str(exc)) from None


def dumps_scenario(scenario: Scenario) -> str:
    lines = []
    for key, attr in SCENARIO_KEYS.items():
        v = getattr(scenario, attr)
        lines.append(f"{key} = {v if isinstance(v, str) else repr(float(v))}")
    return "\n".join(lines) + "\n"


def load_scenario(path, **overrides) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFileError(f"cannot read scenario file: {exc}") from None
    return parse_scenario(text, **overrides)


def scenario_dict(scenario: Scenario) -> dict:
    return {k: getattr(scenario, a) for k, a in SCENARIO_KEYS.items()}


# ---------------------------------------------------------------------------
# CSV


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write a table with a header row; floats use ``repr`` so they read back exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError("row width does not match header")
            w.writerow([_fmt(v) for v in row])


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path) -> tuple[list[str], list[list]]:
    """Header and rows; cells convert to int or float where they parse."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFileError(f"{path}: empty CSV") from None
        rows = [[_parse_cell(c) for c in row] for row in reader]
    return header, rows


def grid_rows(grid) -> list[tuple]:
    rows = []
    for r in grid.results:
        b = r.breakdown
        rows.append((r.ue[0], r.ue[1], r.g_i, r.g_p, b.p_b, b.i_b, b.p_o, b.i_o))
    return rows


def write_grid_csv(path, grid) -> None:
    write_csv(path, GRID_COLUMNS, grid_rows(grid))


def write_cdf_csv(path, columns: dict) -> None:
    """Long-format CDF table: ``metric,value,probability``."""
    from .analysis import cdf

    rows = []
    for name, values in columns.items():
        rows.extend((name, v, p) for v, p in cdf(values))
    write_csv(path, ("metric", "value", "probability"), rows)


# ---------------------------------------------------------------------------
# manifest


def _jsonable(v):
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {k: _jsonable(x) for k, x in dataclasses.asdict(v).items()}
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    scenario: dict | None = None
    layout_hash: str | None = None
    config: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    version: str = __version__
    kernel_backend: str = ""
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__

    def to_json(self) -> str:
        return json.dumps(_jsonable(dataclasses.asdict(self)), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def manifest_path(output) -> Path:
    """Manifest written next to an output: ``out.csv`` gives ``out.manifest.json``."""
    p = Path(output)
    return p.with_name(p.stem + ".manifest.json")
