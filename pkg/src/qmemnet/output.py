"""Table and report writers with platform-independent number formatting."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CSV_FORMAT = "%.17g"


def complex_columns(prefix: str, values: np.ndarray) -> dict:
    """Split a (steps, n) complex array into re/im columns ``prefix{k}_re``."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    out = {}
    for k in range(values.shape[1]):
        out[f"{prefix}{k + 1}_re"] = values[:, k].real
        out[f"{prefix}{k + 1}_im"] = values[:, k].imag
    return out


def write_table(path, columns: dict, fmt: str = "csv") -> Path:
    """Write equally long columns as CSV (17 significant digits) or JSON."""
    path = Path(path)
    if fmt == "json":
        path = path.with_suffix(".json")
        data = {k: [float(x) for x in np.asarray(v, dtype=float)] for k, v in columns.items()}
        path.write_text(json.dumps(data, sort_keys=False) + "\n")
        return path
    path = path.with_suffix(".csv")
    header = ",".join(columns)
    data = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, data, fmt=CSV_FORMAT, delimiter=",", header=header, comments="", newline="\n")
    return path


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)
