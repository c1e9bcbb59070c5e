"""Deterministic report serialization: stable-key JSON and 17-digit CSV."""

import json

import numpy as np


def format_float(x):
    return format(float(x), ".17g")


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj):
    """JSON text with sorted keys; byte-identical for identical inputs."""
    return json.dumps(_canonical(obj), sort_keys=True, indent=1)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))
        fh.write("\n")


def write_csv(path, header, rows):
    """Comma-separated with header; floats at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_float(x) for x in row) + "\n")
