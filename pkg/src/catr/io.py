"""Deterministic CSV/JSON writers with a declared fixed decimal format."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.9f"
EXACT_FORMAT = "shortest round-trip (repr)"


class Exact:
    """Marks a subtree whose floats are written exactly (used for config echoes)."""

    def __init__(self, value):
        self.value = value


def _plain(obj):
    if isinstance(obj, Exact):
        return Exact(_plain(obj.value))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _dump(obj, fmt, indent: int, level: int = 0) -> str:
    if isinstance(obj, Exact):
        return _dump(obj.value, None, indent, level)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, fmt, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, fmt, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, fmt, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return repr(obj) if fmt is None else fmt % obj
    return json.dumps(obj)


def dumps_json(obj, fmt: str = FLOAT_FORMAT) -> str:
    """JSON text with every float printed as ``fmt``; ``float_format`` is added at top level."""
    obj = _plain(obj)
    if isinstance(obj, dict):
        obj = {"float_format": fmt, **obj}
    return _dump(obj, fmt, 2) + "\n"


def write_json(path, obj, fmt: str = FLOAT_FORMAT) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj, fmt))
    return path


def write_csv(path, header, rows, fmt: str = FLOAT_FORMAT) -> Path:
    """Comma-separated, one header row, LF endings; floats printed as ``fmt``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt % v if isinstance(v, (float, np.floating)) else v for v in row])
    return path
