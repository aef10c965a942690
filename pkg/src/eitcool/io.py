"""Deterministic CSV/JSON emission."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np


class NonFiniteError(ValueError):
    pass


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise NonFiniteError(f"non-finite value {x!r}")
        return f"{float(x):.12g}"
    return str(x)


def csv_text(header, rows):
    """Render rows (sequences aligned with ``header``) as CSV text."""
    lines = [list(header)]
    lines += [[fmt(v) for v in row] for row in rows]
    from io import StringIO

    buf = StringIO()
    csv.writer(buf, lineterminator="\n").writerows(lines)
    return buf.getvalue()


def write_csv(path, header, rows):
    text = csv_text(header, rows)  # formats everything before touching disk
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise NonFiniteError(f"non-finite value {obj!r}")
        return float(obj)
    return obj


def json_text(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    text = json_text(obj)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def config_hash(config):
    return hashlib.sha256(json.dumps(_clean(config), sort_keys=True).encode()).hexdigest()[:10]
