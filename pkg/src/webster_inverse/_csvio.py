"""Column CSV files with ``# key=value`` metadata comment lines."""

import csv
import io
from pathlib import Path

import numpy as np


def fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_columns(path, columns, meta=None):
    """Write equal-length ``columns`` (a name -> sequence mapping) to ``path``."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) > 1:
        raise ValueError("columns must have equal length")
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*data):
        writer.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_columns(path):
    """Read a file written by :func:`write_columns`; returns ``(meta, columns)``."""
    meta = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError(f"{path}: no header row")
    reader = csv.reader(body)
    names = next(reader)
    rows = list(reader)
    columns = {}
    for j, name in enumerate(names):
        columns[name] = np.array([float(r[j]) for r in rows])
    return meta, columns
