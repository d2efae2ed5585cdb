"""Loss heads mapping circuit outputs to (value, d value / d outputs)."""

from __future__ import annotations

import numpy as np


def softmax(scores: np.ndarray) -> np.ndarray:
    e = np.exp(scores - scores.max())
    return e / e.sum()


def qml_loss(outputs: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of softmax(scores) with its analytic gradient."""
    p = softmax(np.asarray(outputs, dtype=float))
    grad = p.copy()
    grad[target] -= 1.0
    return float(-np.log(p[target])), grad


def energy_loss(coefficients: np.ndarray):
    """VQE head: loss is the energy sum(c_i * <P_i>) itself."""
    c = np.asarray(coefficients, dtype=float)

    def loss(outputs: np.ndarray, target=None) -> tuple[float, np.ndarray]:
        return float(c @ outputs), c.copy()

    return loss


def accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax score hits the label."""
    return float(np.mean(np.argmax(scores, axis=1) == labels))
