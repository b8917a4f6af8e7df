"""Byte-stable JSON and CSV result files."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

SIGNIFICANT = 9


class ResultsError(OSError):
    pass


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return str(x)
    return f"{x:.{SIGNIFICANT}g}"


def plain(obj: Any) -> Any:
    """Recursively convert numpy, dataclass and tuple values into JSON types,
    rounding floats to the fixed number of significant digits."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj)
    if isinstance(obj, Mapping):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(format_float(float(obj))) + 0.0  # no negative zero
    if isinstance(obj, complex):
        return {"re": plain(obj.real), "im": plain(obj.imag)}
    return obj


def to_json(result: Any) -> str:
    return json.dumps(plain(result), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    """One row per mapping; columns follow the first row's key order."""
    if not rows:
        return ""
    columns = list(rows[0].keys())
    for row in rows[1:]:
        columns += [k for k in row if k not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _cell(v: Any) -> str:
    v = plain(v)
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, list):
        return " ".join(_cell(x) for x in v)
    return "" if v is None else str(v)


def emit_results(result: Any, fmt: str, path: str | Path) -> Path:
    """Write ``result`` as ``json`` (any structure) or ``csv`` (a list of rows).

    Raises:
        ValueError: unknown format.
        ResultsError: the file could not be written.
    """
    if fmt == "json":
        text = to_json(result)
    elif fmt == "csv":
        text = to_csv(result)
    else:
        raise ValueError(f"unknown results format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ResultsError(f"cannot write {path}: {exc}") from exc
    return path
