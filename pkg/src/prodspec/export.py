"""CSV/JSON writers shared by the CLI.

Every float is written with 17 significant digits so files round-trip
exactly and are byte-identical across reruns with the same parameters.
"""

from __future__ import annotations

import json
import math
import sys
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; they are spelled as strings
        return fmt(x) if math.isfinite(x) else f'"{fmt(x)}"'
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{_json(str(k), indent, 0)}: {_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (Mapping, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json(v, indent, 0) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    return _json(obj, indent, 0) + "\n"


def metadata(command: str, params: Mapping) -> dict:
    return {"tool": "prodspec", "version": __version__, "command": command, "params": dict(params)}


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: Mapping) -> str:
    """CSV body preceded by ``#`` comment lines carrying the metadata."""
    lines = [f"# prodspec {meta['version']} {meta['command']}"]
    for key, value in meta["params"].items():
        if isinstance(value, (list, tuple)):
            value = ",".join(fmt(v) for v in value)
        elif not isinstance(value, str):
            value = fmt(value)
        lines.append(f"# {key}={value}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
