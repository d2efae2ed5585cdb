"""Dataset loading and the synthetic stand-in generator.

CSV rows are ``label, f1, ..., fK`` with K = 16 (image mode, values in
[0, 1]) or K = 10 (vowel mode, arbitrary reals that get column-standardized
and clipped to [-1, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError, ValidationError

FEATURE_ARITY = {"image16": 16, "vowel10": 10}

_SYNTH_KINDS = ("two_class_16", "four_class_16")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, 16) or (n, 10)
    labels: np.ndarray    # (n,) int class ids
    n_classes: int
    split: str = "train"

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx, split: str) -> "Dataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx], split=split)


def load_dataset(path, format: str = "csv", mode: str = "image16") -> Dataset:
    if format != "csv":
        raise ValidationError(f"unsupported format {format!r}")
    if mode not in FEATURE_ARITY:
        raise ValidationError(f"unknown dataset mode {mode!r}")
    arity = FEATURE_ARITY[mode]
    rows = []
    labels = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != arity + 1:
            raise ShapeError(f"line {lineno}: expected label + {arity} features, got {len(parts)} fields")
        try:
            label = int(parts[0])
            feats = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if label < 0:
            raise ParseError(f"line {lineno}: negative label {label}")
        if mode == "image16" and any(not 0 <= f <= 1 for f in feats):
            raise ParseError(f"line {lineno}: image features must lie in [0, 1]")
        labels.append(label)
        rows.append(feats)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=float)
    if mode == "vowel10":
        std = features.std(axis=0)
        std[std == 0] = 1.0
        features = np.clip((features - features.mean(axis=0)) / std, -1.0, 1.0)
    return Dataset(features=features, labels=np.asarray(labels), n_classes=int(max(labels)) + 1)


def _class_means(kind: str) -> np.ndarray:
    """Separable 4x4 intensity patterns, one per class."""
    if kind == "two_class_16":
        bright_top = np.concatenate([np.full(8, 0.85), np.full(8, 0.15)])
        return np.stack([bright_top, bright_top[::-1]])
    grid = np.full((4, 4, 4), 0.15)
    quadrants = [(0, 0), (0, 2), (2, 0), (2, 2)]
    for c, (r0, c0) in enumerate(quadrants):
        grid[c, r0 : r0 + 2, c0 : c0 + 2] = 0.85
    return grid.reshape(4, 16)


def synth_dataset(kind: str, n_per_class: int, seed: int, sigma: float = 0.1) -> Dataset:
    """Deterministic Gaussian clusters around per-class patterns, clipped to [0, 1]."""
    if kind not in _SYNTH_KINDS:
        raise ValidationError(f"unknown synthetic kind {kind!r}")
    if n_per_class < 1:
        raise ValidationError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    means = _class_means(kind)
    features = []
    labels = []
    for c, mean in enumerate(means):
        jitter = rng.normal(0.0, sigma, size=(n_per_class, 16)) if sigma > 0 else 0.0
        features.append(np.clip(mean + jitter, 0.0, 1.0))
        labels.extend([c] * n_per_class)
    return Dataset(
        features=np.concatenate(features),
        labels=np.asarray(labels),
        n_classes=len(means),
    )


def train_valid_split(dataset: Dataset, seed: int, valid_fraction: float = 0.2):
    """Fixed 80/20 split, permutation determined by the seed."""
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_valid = int(round(n * valid_fraction))
    valid_idx, train_idx = order[:n_valid], order[n_valid:]
    return dataset.subset(train_idx, "train"), dataset.subset(valid_idx, "valid")
