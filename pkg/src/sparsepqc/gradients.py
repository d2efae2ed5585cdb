"""Parameter-shift gradients with a finite-difference verification oracle.

Slots whose gate generator has eigenvalues +-1/2 (rx/ry/rz, the three u3
angles, zz/zx/xx) use the two-term rule

    dC/dtheta = (C(theta + pi/2) - C(theta - pi/2)) / 2.

cu3 slots mix frequencies {1/2, 1}, so they use the four-term rule

    dC/dtheta = c_plus * [C(+pi/2) - C(-pi/2)] - c_minus * [C(+3pi/2) - C(-3pi/2)]

with c_pm = (sqrt(2) +- 1) / (4 sqrt(2)); that rule is also exact for the
cu3 phase angles, whose conditional-phase generators carry frequency 1 only.
Set cu3_rule="finite_diff" to replace the four-term rule with central
differences (eps=1e-4) for cu3 slots; the choice is surfaced in run metadata.

A loss is a callable (outputs, target) -> (value, d value / d outputs); the
quantum side is only ever evaluated at shifted angles, never differentiated
through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import circuits, noise, qstate
from .errors import ValidationError

_C_PLUS = (np.sqrt(2) + 1) / (4 * np.sqrt(2))
_C_MINUS = (np.sqrt(2) - 1) / (4 * np.sqrt(2))
_CU3_FD_EPS = 1e-4

TWO_TERM_KINDS = frozenset({"rx", "ry", "rz", "u3", "zz", "zx", "xx"})


@dataclass
class GradientVector:
    values: np.ndarray
    active: np.ndarray = None  # mask snapshot at evaluation time
    active_only: bool = True

    def __post_init__(self):
        if self.active is None:
            self.active = np.ones(len(self.values), dtype=bool)


def _slot_kinds(circuit) -> dict[int, str]:
    return {s: g.kind for g in circuit.trainable_gates for s in g.param_slots}


def _batch_loss(outputs, batch, loss):
    """Mean loss and per-example d loss / d outputs rows."""
    values = []
    grads = []
    for row, (_, target) in zip(outputs, batch):
        v, g = loss(row, target)
        values.append(v)
        grads.append(g)
    return float(np.mean(values)), np.stack(grads)


def param_shift_grad(
    circuit,
    x,
    params,
    mask,
    loss,
    model: noise.NoiseModel | None = None,
    target=None,
    cu3_rule: str = "four_term",
) -> GradientVector:
    """Gradient of loss(forward(...), target) w.r.t. active parameter slots."""
    xs = None if x is None or len(np.atleast_1d(x)) == 0 else np.asarray(x, dtype=float)[None, :]
    batch = [(x, target)]
    _, grad, _ = _loss_and_grad_batch_impl(circuit, xs, batch, params, mask, loss, model, cu3_rule)
    return grad


def loss_and_grad_batch(
    circuit,
    batch,
    params,
    mask,
    loss,
    model: noise.NoiseModel | None = None,
    cu3_rule: str = "four_term",
) -> tuple[float, GradientVector]:
    """Arithmetic mean of per-example losses and gradients over a mini-batch."""
    if not batch:
        raise ValidationError("batch must be non-empty")
    first = batch[0][0]
    if first is None or len(np.atleast_1d(first)) == 0:
        xs = None
        if len(batch) != 1:
            raise ValidationError("encoder-free circuits take a batch of one")
    else:
        xs = np.asarray([np.asarray(b[0], dtype=float) for b in batch])
    mean_loss, grad, _ = _loss_and_grad_batch_impl(circuit, xs, batch, params, mask, loss, model, cu3_rule)
    return mean_loss, grad


def _shift_recipe(kind: str, cu3_rule: str) -> list[tuple[float, float]]:
    """(angle shift, combination coefficient) pairs for one slot's rule."""
    if kind in TWO_TERM_KINDS:
        return [(np.pi / 2, 0.5), (-np.pi / 2, -0.5)]
    if cu3_rule == "finite_diff":
        h = 1 / (2 * _CU3_FD_EPS)
        return [(_CU3_FD_EPS, h), (-_CU3_FD_EPS, -h)]
    return [
        (np.pi / 2, _C_PLUS),
        (-np.pi / 2, -_C_PLUS),
        (3 * np.pi / 2, -_C_MINUS),
        (-3 * np.pi / 2, _C_MINUS),
    ]


def _loss_and_grad_batch_impl(circuit, xs, batch, params, mask, loss, model, cu3_rule):
    """All shifted evaluations run as one batched forward.

    Evaluation rows are [base, slot0-shifts..., slot1-shifts...]; with a
    noise model the whole block shares one trajectory stream, so every
    shifted evaluation sees the same error realization as the base one.
    """
    params = np.asarray(params, dtype=float)
    active = circuits.active_of(mask, circuit.n_params)
    kinds = _slot_kinds(circuit)

    row_shifts: list[tuple[int | None, float]] = [(None, 0.0)]
    recipes: dict[int, list[tuple[int, float]]] = {}
    for slot in np.flatnonzero(active):
        entry = []
        for delta, coeff in _shift_recipe(kinds[slot], cu3_rule):
            entry.append((len(row_shifts), coeff))
            row_shifts.append((slot, delta))
        recipes[slot] = entry

    n_evals = len(row_shifts)
    params_rows = np.tile(params, (n_evals, 1))
    for r, (slot, delta) in enumerate(row_shifts):
        if slot is not None:
            params_rows[r, slot] += delta

    b = 1 if xs is None else xs.shape[0]
    xs_rows = None if xs is None else np.tile(xs, (n_evals, 1))
    n_rows = n_evals * b
    ops = circuits.bound_ops_rows(circuit, xs_rows, active, np.repeat(params_rows, b, axis=0), n_rows)
    if model is None:
        states = np.tile(qstate.init_zero_state(circuit.n_qubits), (n_rows, 1))
        outputs = circuits.measure_states(circuit, circuits.run_ops_batch(ops, circuit.n_qubits, states))
    else:
        outputs = noise.noisy_outputs_for_ops(circuit, ops, model, n_rows)
    outputs = outputs.reshape(n_evals, b, -1)

    base_outputs = outputs[0]
    mean_loss, dl_dout = _batch_loss(base_outputs, batch, loss)  # (B, n_out)
    values = np.zeros(circuit.n_params)
    for slot, entry in recipes.items():
        dout = sum(coeff * outputs[r] for r, coeff in entry)
        values[slot] = float(np.mean(np.sum(dl_dout * dout, axis=1)))
    return mean_loss, GradientVector(values=values, active=active.copy()), base_outputs


def finite_diff_grad(circuit, x, params, mask, loss, eps: float, target=None) -> GradientVector:
    """Central differences on the loss itself; noiseless evaluation only."""
    if not 1e-8 <= eps <= 1e-2:
        raise ValidationError(f"eps {eps} outside [1e-8, 1e-2]")
    params = np.asarray(params, dtype=float)
    active = circuits.active_of(mask, circuit.n_params)
    values = np.zeros(circuit.n_params)
    for slot in np.flatnonzero(active):
        up = params.copy()
        up[slot] += eps
        down = params.copy()
        down[slot] -= eps
        l_up, _ = loss(circuits.forward(circuit, x, active, up), target)
        l_down, _ = loss(circuits.forward(circuit, x, active, down), target)
        values[slot] = (l_up - l_down) / (2 * eps)
    return GradientVector(values=values, active=active.copy())
