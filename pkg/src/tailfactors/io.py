"""CSV ingestion, plain-text model configuration, and report serialization.

CSV conventions: one observation per row, optional header line, decimal
points, no thousands separators; missing or non-numeric cells are rejected
with the offending line number.
"""
from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .errors import InputError, ParameterError
from .model import (AtomList, DiscreteUnitAtoms, FactorModel, LoadingMatrix,
                    Mixture, SpectralSpec, SymmetricDirichlet)
from .tpdm import DataMatrix

SCHEMAS = ("observations", "capacity_weights", "thresholds")


def _read_rows(path) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells):
                continue
            rows.append((lineno, cells))
    if not rows:
        raise InputError(f"{path}: file contains no data")
    return rows


def _parse_cell(path, lineno: int, cell: str) -> float:
    if cell == "":
        raise InputError(f"{path}:{lineno}: missing value")
    try:
        value = float(cell)
    except ValueError:
        raise InputError(f"{path}:{lineno}: non-numeric cell {cell!r}") from None
    if not np.isfinite(value):
        raise InputError(f"{path}:{lineno}: non-finite value {cell!r}")
    return value


def _is_numeric_row(cells: list[str]) -> bool:
    try:
        for c in cells:
            float(c)
    except ValueError:
        return False
    return True


def ingest_csv(path, schema: str):
    """Read and validate a CSV file against one of the documented schemas.

    * observations: an n x d numeric table -> DataMatrix
    * capacity_weights: one numeric column (or row); renormalized with a
      warning when the sum is within 1e-6 of 1, rejected otherwise
    * thresholds: one numeric column (or row); scalars broadcast at use
    """
    if schema not in SCHEMAS:
        raise ParameterError(f"unknown schema {schema!r}; expected one of {SCHEMAS}")
    rows = _read_rows(path)
    if not _is_numeric_row(rows[0][1]):
        rows = rows[1:]  # header line
        if not rows:
            raise InputError(f"{path}: no data below the header")
    width = len(rows[0][1])
    values = []
    for lineno, cells in rows:
        if len(cells) != width:
            raise InputError(f"{path}:{lineno}: expected {width} cells, found {len(cells)}")
        values.append([_parse_cell(path, lineno, c) for c in cells])
    table = np.asarray(values, dtype=float)

    if schema == "observations":
        return DataMatrix(table)
    flat = table.ravel()
    if table.shape[0] > 1 and table.shape[1] > 1:
        raise InputError(f"{path}: {schema} must be a single column or row")
    if schema == "capacity_weights":
        total = flat.sum()
        if abs(total - 1.0) > 1e-6:
            raise InputError(f"{path}: capacity weights sum to {total!r}, not 1")
        if total != 1.0:
            warnings.warn(f"{path}: capacity weights renormalized (sum {total!r})", stacklevel=2)
            flat = flat / total
        if np.any(flat < 0):
            raise InputError(f"{path}: capacity weights must be nonnegative")
        return flat
    return flat  # thresholds


def broadcast_thresholds(values, d: int) -> np.ndarray:
    """Broadcast a scalar threshold to all coordinates, or validate the length."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 1:
        return np.full(d, float(v[0]))
    if v.size != d:
        raise InputError(f"thresholds must be scalar or of length {d} (got {v.size})")
    return v


# ---------------------------------------------------------------------------
# Plain-text model configuration
# ---------------------------------------------------------------------------

def _format_floats(values) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(values, dtype=float).ravel())


def _format_spectral(spec: SpectralSpec) -> str:
    if isinstance(spec, DiscreteUnitAtoms):
        return "discrete-unit-atoms"
    if isinstance(spec, SymmetricDirichlet):
        return f"dirichlet {spec.concentration!r}"
    if isinstance(spec, AtomList):
        atoms = ";".join(f"{_format_floats(z)}@{w!r}"
                         for z, w in zip(spec.points, spec.weights))
        return f"atoms {atoms}"
    if isinstance(spec, Mixture):
        parts = [f"{_format_spectral(c)} @ {p!r}"
                 for c, p in zip(spec.components, spec.probabilities)]
        return "mixture " + " | ".join(parts)
    raise ParameterError(f"cannot serialize spectral law of type {type(spec).__name__}")


def _parse_spectral(text: str, k: int) -> SpectralSpec:
    text = text.strip()
    head, _, rest = text.partition(" ")
    head = head.lower()
    if head == "discrete-unit-atoms":
        return DiscreteUnitAtoms(k)
    if head == "dirichlet":
        return SymmetricDirichlet(k, float(rest))
    if head == "atoms":
        points, weights = [], []
        for chunk in rest.split(";"):
            coords, _, w = chunk.partition("@")
            points.append([float(c) for c in coords.split(",")])
            weights.append(float(w))
        return AtomList(np.asarray(points), np.asarray(weights))
    if head == "mixture":
        comps, probs = [], []
        for part in rest.split("|"):
            spec_text, _, p = part.rpartition("@")
            comps.append(_parse_spectral(spec_text, k))
            probs.append(float(p))
        return Mixture(tuple(comps), np.asarray(probs))
    raise InputError(f"unknown spectral variant {head!r}")


def format_model_config(model: FactorModel, seed: int | None = None) -> str:
    """Serialize a factor model to the plain-text configuration format."""
    lines = [f"K = {model.n_factors}"]
    if seed is not None:
        lines.append(f"seed = {int(seed)}")
    rows = " ; ".join(_format_floats(r) for r in model.loading.entries)
    lines.append(f"loading = {rows}")
    lines.append(f"spectral = {_format_spectral(model.spectral)}")
    return "\n".join(lines) + "\n"


def parse_model_config(text: str) -> tuple[FactorModel, int | None]:
    """Parse the plain-text model configuration; returns (model, seed or None)."""
    keys: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"model config line {lineno}: expected 'key = value'")
        keys[key.strip().lower()] = value.strip()
    for required in ("k", "loading", "spectral"):
        if required not in keys:
            raise InputError(f"model config is missing the {required!r} key")
    k = int(keys["k"])
    rows = [[float(c) for c in row.split(",")] for row in keys["loading"].split(";")]
    loading = LoadingMatrix(np.asarray(rows, dtype=float))
    if loading.n_factors != k:
        raise InputError(f"loading has {loading.n_factors} columns but K = {k}")
    spectral = _parse_spectral(keys["spectral"], k)
    seed = int(keys["seed"]) if "seed" in keys else None
    return FactorModel(loading=loading, spectral=spectral), seed


def load_model_config(path) -> tuple[FactorModel, int | None]:
    return parse_model_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Deterministic writers
# ---------------------------------------------------------------------------

def write_matrix_csv(path, matrix, header: list[str] | None = None) -> None:
    """Write a numeric table with shortest round-trip float formatting."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in m:
            writer.writerow([repr(float(v)) for v in row])


def write_json(path, obj) -> None:
    """Write canonical JSON (sorted keys, fixed separators, trailing newline)."""
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, separators=(",", ": "))
        fh.write("\n")


def read_matrix_csv(path, skip_header: bool = False) -> np.ndarray:
    rows = _read_rows(path)
    if skip_header or not _is_numeric_row(rows[0][1]):
        rows = rows[1:]
    return np.asarray([[_parse_cell(path, ln, c) for c in cells] for ln, cells in rows])
