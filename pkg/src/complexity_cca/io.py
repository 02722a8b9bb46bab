"""CSV and JSON emission with fixed, reproducible number formatting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(x) -> str:
    """Format a float with 12 significant digits (correctly rounded, half-even)."""
    x = float(x)
    if x == 0:
        return "0"
    if not math.isfinite(x):
        return repr(x)
    return f"{x:.{SIG_DIGITS}g}"


def _round(obj):
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(_csv_text(header, rows), encoding="utf-8")


def score_table_rows(labels, scores):
    scores = np.asarray(scores)
    if scores.ndim == 1:
        scores = scores[:, None]
    return [[lab] + [float(v) for v in scores[i]] for i, lab in enumerate(labels)]


def write_scores(path, key, labels, scores, prefix):
    scores = np.asarray(scores)
    k = 1 if scores.ndim == 1 else scores.shape[1]
    header = [key] + [f"{prefix}{j + 1}" for j in range(k)]
    write_csv(path, header, score_table_rows(labels, scores))


def read_scores(path):
    """Read a score table back as ``(header, labels, float matrix)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    labels = [r[0] for r in body]
    values = np.array([[float(x) for x in r[1:]] for r in body])
    return header, labels, values


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
