"""JSON and CSV forms of measures, solver reports and experiment results.

All writers are deterministic: JSON keys are sorted, floats use the shortest
round-trip repr, and timings are only written when explicitly requested.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .loss import Measure
from .phi import ExpMinusOne, Linear, PhiSpec, Power
from .solvers import SolverReport
from .spaces import Space, parse_space

SCHEMA = "phi-means/1"
RESULT_COLUMNS = ("experiment_id", "replicate", "n", "p", "rho", "loss", "wall_ms")
TRACE_COLUMNS = ("iteration", "loss", "step_norm", "distance")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps({"schema": SCHEMA, **obj}))


def read_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != SCHEMA:
        raise ConfigError(f"{path}: expected schema {SCHEMA!r}, got {data.get('schema')!r}")
    return data


def phi_label(phi: PhiSpec) -> str:
    if isinstance(phi, Power):
        return f"power:{phi.p:g}"
    if isinstance(phi, ExpMinusOne):
        return f"exp:{phi.base:g}"
    if isinstance(phi, Linear):
        return f"linear:{phi.slope:g}"
    return json.dumps(phi.to_json(), sort_keys=True)


# --------------------------------------------------------------------------
# measures


def measure_to_json(mu: Measure) -> dict:
    atoms = np.column_stack([mu.points, mu.weights])
    return {"space": mu.space.tag, "atoms": atoms}


def measure_from_json(obj: dict) -> Measure:
    try:
        space = parse_space(obj["space"])
        atoms = np.asarray(obj["atoms"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad measure JSON: {exc}") from None
    if atoms.ndim != 2 or atoms.shape[1] != space.ambient_dim + 1:
        raise ConfigError(f"measure atoms need {space.ambient_dim} coordinates plus a weight")
    return Measure(space, atoms[:, :-1], atoms[:, -1])


def read_points_csv(path, space: Space) -> Measure:
    """One point per row; an extra last column is a weight.  A non-numeric first row is a header."""
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.size == 0:
        raise ConfigError(f"{path}: no points")
    if data.ndim != 2:
        raise ConfigError(f"{path}: rows have different lengths")
    k = space.ambient_dim
    if data.shape[1] == k:
        return Measure(space, data)
    if data.shape[1] == k + 1:
        w = data[:, -1]
        return Measure(space, data[:, :-1], w / w.sum())
    raise ConfigError(f"{path}: {space.tag} rows need {k} or {k + 1} columns")


def write_points_csv(path, points) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows([[repr(float(v)) for v in row] for row in pts])


def load_measure(path, space: Space | None = None) -> Measure:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"measure file {path} does not exist")
    if path.suffix == ".json":
        mu = measure_from_json(json.loads(path.read_text()))
        if space is not None and mu.space != space:
            raise ConfigError(f"{path} holds a {mu.space.tag} measure, expected {space.tag}")
        return mu
    if space is None:
        raise ConfigError("CSV measures need --space")
    return read_points_csv(path, space)


# --------------------------------------------------------------------------
# solver reports


def report_to_json(report: SolverReport, timing: bool = False) -> dict:
    out = {
        "method": report.method,
        "estimate": report.estimate,
        "final_loss": report.final_loss,
        "termination": report.termination.value,
        "iterations": report.iterations,
        "trace_length": len(report.trace),
    }
    if report.mean_set is not None:
        ms = report.mean_set
        out["mean_set"] = {"points": ms.points, "delta": ms.delta, "min_loss": ms.min_loss,
                           "mesh": ms.mesh}
    if timing:
        out["wall_time"] = report.wall_time
    return out


def trace_rows(report: SolverReport, space: Space) -> list:
    """(iteration, loss, step norm or mesh, distance to the final estimate) per trace row."""
    pts = np.array([row.point for row in report.trace])
    dist = space.dist(pts, report.estimate[None, :]) if len(pts) else np.zeros(0)
    return [(row.iteration, row.loss, row.step, float(d)) for row, d in zip(report.trace, dist)]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_trace_csv(path, report: SolverReport, space: Space) -> None:
    write_csv(path, TRACE_COLUMNS, trace_rows(report, space))


def result_rows(experiment_id: str, result, timing: bool = False) -> list:
    """Long-form rows (experiment_id, replicate, n, p, rho, loss, wall_ms) of a ConsistencyResult."""
    labels = [phi_label(phi) for phi in result.phis]
    return [(experiment_id, c.replicate, c.n, labels[c.phi_index], c.rho, c.loss,
             c.wall_ms if timing else None) for c in result.cells]


def check_columns(rows: list, path) -> None:
    if rows and tuple(rows[0].keys()) != RESULT_COLUMNS:
        raise DomainError(f"{path}: expected columns {RESULT_COLUMNS}")
