"""Path and report serialization.

CSV files hold one state per row under an ``x0..x{d-1}`` header, written
with 17 significant digits so that reading them back is bit-exact. Lines
starting with ``#`` carry metadata (the resolved config) and are skipped by
the readers.
"""

from __future__ import annotations

import io as _io
import json
from pathlib import Path as FsPath

import numpy as np
import yaml

from .core import as_points


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _to_jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__})
    return obj


def dumps_json(obj) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(_to_jsonable(obj), indent=1, allow_nan=True)


def write_json(obj, file):
    FsPath(file).write_text(dumps_json(obj))


def read_json(file):
    return json.loads(FsPath(file).read_text())


def path_to_csv(path, config=None) -> str:
    pts = as_points(path)
    buf = _io.StringIO()
    if config is not None:
        for line in dumps_json(config).splitlines():
            buf.write(f"# {line}\n")
    buf.write(",".join(f"x{k}" for k in range(pts.shape[1])) + "\n")
    np.savetxt(buf, pts, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_path_csv(path, file, config=None):
    FsPath(file).write_text(path_to_csv(path, config))


def read_path_csv(file) -> np.ndarray:
    text = FsPath(file).read_text()
    return csv_to_array(text)


def csv_to_array(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty path file")
    header = lines[0].split(",")
    if not all(h.strip() == f"x{k}" for k, h in enumerate(header)):
        raise ValueError(f"unexpected header {lines[0]!r}")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    out = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return out


def path_envelope(path, system: str, config=None, action=None, **extra) -> dict:
    """JSON envelope ``{system, config, points, action}``."""
    env = {"system": system, "config": config or {}, "points": as_points(path),
           "action": action}
    env.update(extra)
    return _to_jsonable(env)


def envelope_points(env: dict) -> np.ndarray:
    return np.asarray(env["points"], dtype=float)


def write_table_csv(rows, file, columns=None, config=None):
    """Write a list of dicts as CSV (header always present, even with no rows)."""
    import csv

    columns = list(columns or (rows[0].keys() if rows else []))
    with open(file, "w", newline="") as fh:
        if config is not None:
            for line in dumps_json(config).splitlines():
                fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_cell(r.get(k)) for k in columns})


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return json.dumps(_to_jsonable(v))
    return v


def read_table_csv(file):
    import csv

    with open(file, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def load_config(file) -> dict:
    """Read a YAML config file (an empty file gives ``{}``)."""
    data = yaml.safe_load(FsPath(file).read_text())
    return data or {}
