"""On-disk formats: JSON reports, CSV tables, dataset round-trip, run metadata.

Complex values are stored as [re, im] pairs of IEEE-754 doubles (Python's
repr round-trips doubles losslessly).  Every file carries a schema_version
field; experiment directories get a meta.json with the config echo and a
content hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, is_dataclass

import numpy as np

from .core import ObservationSet

SCHEMA_VERSION = "1"

__all__ = [
    "SCHEMA_VERSION",
    "complex_to_pairs",
    "pairs_to_complex",
    "save_json",
    "load_json",
    "write_table",
    "content_hash",
    "write_meta",
    "save_observations",
    "load_observations",
    "ram_report_to_dict",
]


def complex_to_pairs(arr):
    """Nested lists of [re, im] pairs mirroring the array shape."""
    arr = np.asarray(arr, dtype=complex)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def pairs_to_complex(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("expected trailing [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return complex_to_pairs(obj)
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)  # "inf" / "nan" sentinels survive JSON
    return obj


def save_json(path, obj):
    payload = _jsonable(obj)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_table(path, header, rows, fmt="csv"):
    """Write tabular results as CSV (floats via repr, lossless) or a JSON list."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    elif fmt == "json":
        save_json(path, [dict(zip(header, row)) for row in rows])
    else:
        raise ValueError(f"unknown table format {fmt!r}")


def append_table_rows(path, header, rows):
    """Append rows to a CSV table, writing the header on first touch."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_, bool)):
        return int(v)
    return v


def content_hash(config: dict) -> str:
    canonical = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_meta(out_dir, config: dict, **extra):
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(config),
        "config_hash": content_hash(config),
        **extra,
    }
    save_json(os.path.join(out_dir, "meta.json"), meta)
    return meta


def save_observations(path, obs: ObservationSet):
    """Dataset file: ambient length, 1-based omega, eta, complex sample pairs."""
    save_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "ambient_n": obs.ambient_n,
            "omega": obs.omega_one_based.tolist(),
            "eta": obs.eta,
            "samples": complex_to_pairs(obs.samples),
        },
    )


def load_observations(path) -> ObservationSet:
    doc = load_json(path)
    try:
        return ObservationSet.from_one_based(
            ambient_n=int(doc["ambient_n"]),
            omega_one_based=doc["omega"],
            samples=pairs_to_complex(doc["samples"]),
            eta=float(doc.get("eta", 0.0)),
        )
    except KeyError as exc:
        raise ValueError(f"dataset file {path} is missing key {exc}") from exc


def ram_report_to_dict(report) -> dict:
    """JSON-ready view of a RamReport (per-iteration traces included)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "ambient_n": report.ambient_n,
        "snapshots": report.snapshots,
        "init_mode": report.init_mode,
        "converged": report.converged,
        "scale_factor": report.scale_factor,
        "eta_prime": report.eta_prime,
        "freqs": report.freqs,
        "powers": report.powers,
        "coeffs": report.coeffs if report.coeffs is not None else None,
        "iterations": [
            {
                "index": it.index,
                "eps": it.eps,
                "objective": it.objective,
                "eigenvalues": it.eigenvalues,
                "freqs": it.freqs,
                "powers": it.powers,
                "rank": it.rank,
                "rel_change": None if not np.isfinite(it.rel_change) else it.rel_change,
                "inner_iterations": it.inner_iterations,
                "inner_converged": it.inner_converged,
                "signal_rel_mse": it.signal_rel_mse,
            }
            for it in report.iterations
        ],
    }
