"""Deterministic file output: 17-digit CSV, stable JSON, atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np


def atomic_write_text(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def format_rows(header: Sequence[str], columns: Sequence, comments: Sequence[str] = ()) -> str:
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in zip(*cols):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def dumps_json(obj) -> str:
    """JSON with insertion-ordered keys and a trailing newline."""
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> None:
    atomic_write_text(Path(path), dumps_json(obj))
