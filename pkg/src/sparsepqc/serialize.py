"""Diff-stable serialization: canonical JSON with 12-significant-digit floats."""

from __future__ import annotations

import json

import numpy as np


def _canon(value):
    if isinstance(value, (np.floating, float)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r} in serialized record")
        return float(f"{float(value):.12g}")
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_canon(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _canon(v) for k, v in value.items()}
    return value


def dump_record(record: dict) -> str:
    """One canonical JSON line: sorted keys, floats at 12 significant digits."""
    return json.dumps(_canon(record), sort_keys=True, separators=(",", ":"))


def dump_pretty(obj) -> str:
    return json.dumps(_canon(obj), sort_keys=True, indent=2) + "\n"
