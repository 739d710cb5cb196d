"""Reading system files and writing deterministic JSON/CSV reports."""

import csv
from enum import Enum
from fractions import Fraction
import io
import json
import math

import mpmath

from .errors import ValidationError
from .maps import Ifs
from .numerics import Interval, fraction_str
from .transversality import TranslationFamily

SCHEMA_VERSION = 1


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_ifs(path):
    """An :class:`Ifs` from a JSON system file."""
    data = load_json(path)
    try:
        return Ifs.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def load_family(path):
    """A :class:`TranslationFamily` from a JSON file with a ``family`` block."""
    data = load_json(path)
    try:
        return TranslationFamily.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _plain(obj):
    """Recursively convert report values into JSON-native types."""
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, Interval):
        return [fraction_str(obj.lo), fraction_str(obj.hi)]
    if isinstance(obj, mpmath.mpf):
        obj = float(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(repr(obj))
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def envelope(command, result, budgets=None, status="completed", version=None):
    from . import __version__

    return {
        "schema": SCHEMA_VERSION,
        "tool": "ifsline",
        "version": version or __version__,
        "command": command,
        "status": status,
        "budgets": dict(budgets or {}),
        "result": result,
    }


def dumps(report):
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_plain(v) for v in row])
    return buf.getvalue()


def write_text(text, path=None, stream=None):
    if path is None:
        stream.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
