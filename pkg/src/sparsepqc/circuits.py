"""Gate-level circuit representation: templates, input encoders, evaluation.

A circuit is three ordered gate lists applied in sequence to |0...0>:
encoder gates (angles bound to input features, scaled by pi), an optional
fixed prelude layer, and the trainable blocks.  Trainable angles live in a
flat parameter table; a sparsity mask pins inactive slots' angles to 0.  A
parameterized gate whose slots are all inactive acts as the identity and is
treated as removed for statistics and noise purposes; non-parameterized
gates are never maskable.

Ring pairing on n qubits is (0,1), (1,2), ..., (n-1,0); on 2 qubits the ring
degenerates to the single pair (0,1) so that symmetric two-qubit layers
(e.g. back-to-back cz on the same pair) do not cancel out.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import gates, qstate
from .errors import ConfigError, ShapeError, ValidationError

ENCODER_BLOCK = -1
ENCODER_SCALE = np.pi  # feature value v binds as angle v*pi

TEMPLATE_KINDS = ("u3cu3", "zzry", "rxyz", "zxxx", "ibmq_basis")
MEASUREMENT_MODES = ("per_qubit_z_softmax", "paired_sum_softmax", "pauli_hamiltonian")


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple[int, ...]
    param_slots: tuple[int, ...] = ()
    block_id: int = ENCODER_BLOCK

    def __post_init__(self):
        if self.kind not in gates.KIND_SIGNATURE:
            raise ConfigError(f"unknown gate kind {self.kind!r}")
        n_wires, n_params = gates.KIND_SIGNATURE[self.kind]
        if len(self.wires) != n_wires:
            raise ValidationError(f"{self.kind} takes {n_wires} wires, got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValidationError(f"{self.kind} wires must be distinct: {self.wires}")
        if len(self.param_slots) != n_params:
            raise ValidationError(
                f"{self.kind} takes {n_params} parameter slots, got {len(self.param_slots)}"
            )


@dataclass(frozen=True)
class MeasurementSpec:
    mode: str = "per_qubit_z_softmax"
    class_groups: Optional[tuple[tuple[int, ...], ...]] = None
    hamiltonian: Optional[object] = None  # .terms: sequence of (coeff, pauli string)

    def __post_init__(self):
        if self.mode not in MEASUREMENT_MODES:
            raise ConfigError(f"unknown measurement mode {self.mode!r}")
        if self.mode == "paired_sum_softmax":
            if not self.class_groups:
                raise ConfigError("paired_sum_softmax requires class_groups")
            flat = [q for g in self.class_groups for q in g]
            if len(set(flat)) != len(flat):
                raise ConfigError("class_groups must be disjoint")
        if self.mode == "pauli_hamiltonian" and self.hamiltonian is None:
            raise ConfigError("pauli_hamiltonian mode requires a hamiltonian")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    encoder_gates: tuple[Gate, ...]
    prelude_gates: tuple[Gate, ...]
    trainable_gates: tuple[Gate, ...]
    n_blocks: int
    measurement: MeasurementSpec
    param_table: np.ndarray = field(repr=False)

    @property
    def n_params(self) -> int:
        return len(self.param_table)

    @property
    def n_encoder_slots(self) -> int:
        return sum(len(g.param_slots) for g in self.encoder_gates)

    def block_of_slots(self) -> np.ndarray:
        """Slot index -> block id, for the trainable table."""
        block = np.full(self.n_params, -1, dtype=int)
        for g in self.trainable_gates:
            for s in g.param_slots:
                block[s] = g.block_id
        return block


def _ring_pairs(n_qubits: int) -> list[tuple[int, int]]:
    if n_qubits == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n_qubits) for i in range(n_qubits)]


def _check_slot_bijection(trainable: Sequence[Gate], n_params: int) -> None:
    seen = np.zeros(n_params, dtype=int)
    for g in trainable:
        for s in g.param_slots:
            if not 0 <= s < n_params:
                raise ValidationError(f"slot {s} out of range")
            seen[s] += 1
    if not np.all(seen == 1):
        bad = np.where(seen != 1)[0]
        raise ValidationError(f"parameter slots not referenced exactly once: {bad.tolist()}")


def build_template(
    kind: str,
    n_qubits: int,
    n_blocks: int,
    measurement: MeasurementSpec | None = None,
) -> Circuit:
    """One of the five block templates, parameter table zero-initialized."""
    if kind not in TEMPLATE_KINDS:
        raise ConfigError(f"unknown template {kind!r}; choose from {TEMPLATE_KINDS}")
    if n_qubits < 2:
        raise ConfigError("templates need n_qubits >= 2")
    if n_blocks < 1:
        raise ConfigError("templates need n_blocks >= 1")

    ring = _ring_pairs(n_qubits)
    trainable: list[Gate] = []
    prelude: list[Gate] = []
    slot = 0

    def take(k: int) -> tuple[int, ...]:
        nonlocal slot
        out = tuple(range(slot, slot + k))
        slot += k
        return out

    if kind == "rxyz":
        prelude = [Gate("sqrt_h", (q,)) for q in range(n_qubits)]

    for b in range(n_blocks):
        if kind == "u3cu3":
            for q in range(n_qubits):
                trainable.append(Gate("u3", (q,), take(3), b))
            for pair in ring:
                trainable.append(Gate("cu3", pair, take(3), b))
        elif kind == "zzry":
            for pair in ring:
                trainable.append(Gate("zz", pair, take(1), b))
            for q in range(n_qubits):
                trainable.append(Gate("ry", (q,), take(1), b))
        elif kind == "rxyz":
            for layer in ("rx", "ry", "rz"):
                for q in range(n_qubits):
                    trainable.append(Gate(layer, (q,), take(1), b))
            for pair in ring:
                trainable.append(Gate("cz", pair, (), b))
        elif kind == "zxxx":
            for pair in ring:
                trainable.append(Gate("zx", pair, take(1), b))
            for pair in ring:
                trainable.append(Gate("xx", pair, take(1), b))
        elif kind == "ibmq_basis":
            for q in range(n_qubits):
                trainable.append(Gate("rz", (q,), take(1), b))
            for q in range(n_qubits):
                trainable.append(Gate("x", (q,), (), b))
            for q in range(n_qubits):
                trainable.append(Gate("rz", (q,), take(1), b))
            for q in range(n_qubits):
                trainable.append(Gate("sx", (q,), (), b))
            for q in range(n_qubits):
                trainable.append(Gate("rz", (q,), take(1), b))
            for pair in ring:
                trainable.append(Gate("cnot", pair, (), b))

    _check_slot_bijection(trainable, slot)
    return Circuit(
        n_qubits=n_qubits,
        encoder_gates=(),
        prelude_gates=tuple(prelude),
        trainable_gates=tuple(trainable),
        n_blocks=n_blocks,
        measurement=measurement or MeasurementSpec(),
        param_table=np.zeros(slot),
    )


def build_encoder(task: str, n_qubits: int) -> tuple[Gate, ...]:
    """Rotation-gate input encoder; slot i binds input feature i (reading order)."""
    if n_qubits != 4:
        raise ConfigError(f"encoder {task!r} is defined for 4 qubits, got {n_qubits}")
    if task == "image16":
        layers = [("rx", 4), ("ry", 4), ("rz", 4), ("rx", 4)]
    elif task == "vowel10":
        layers = [("rx", 4), ("ry", 4), ("rz", 2)]
    else:
        raise ConfigError(f"unknown encoder task {task!r}")
    out = []
    slot = 0
    for kind, width in layers:
        for q in range(width):
            out.append(Gate(kind, (q,), (slot,), ENCODER_BLOCK))
            slot += 1
    return tuple(out)


def with_encoder(circuit: Circuit, encoder: tuple[Gate, ...]) -> Circuit:
    return replace(circuit, encoder_gates=encoder)


def with_measurement(circuit: Circuit, measurement: MeasurementSpec) -> Circuit:
    return replace(circuit, measurement=measurement)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def active_of(mask, n_params: int) -> np.ndarray:
    """Normalize a mask argument: None means dense."""
    if mask is None:
        return np.ones(n_params, dtype=bool)
    active = mask if isinstance(mask, np.ndarray) else mask.active
    if len(active) != n_params:
        raise ShapeError(f"mask length {len(active)} != {n_params} parameter slots")
    return np.asarray(active, dtype=bool)


def gate_present(gate: Gate, active: np.ndarray) -> bool:
    if not gate.param_slots or gate.block_id == ENCODER_BLOCK:
        return True
    return bool(any(active[s] for s in gate.param_slots))


@dataclass(frozen=True)
class BoundOp:
    """A present gate with its matrix resolved for execution."""

    kind: str
    wires: tuple[int, ...]
    matrix: np.ndarray  # (d, d) shared or (R, d, d) per evaluation row
    section: str  # encoder | prelude | trainable


def bound_ops_rows(
    circuit: Circuit,
    xs: np.ndarray | None,
    active: np.ndarray,
    params_rows: np.ndarray,
    n_rows: int,
) -> list[BoundOp]:
    """Present gates in execution order with matrices resolved per row.

    params_rows is (n_params,) shared across rows or (n_rows, n_params) for
    row-dependent angles (shifted gradient evaluations); xs is None or
    (n_rows, n_encoder_slots).  Gates whose angles are constant across rows
    resolve to a single shared matrix.
    """
    ops: list[BoundOp] = []
    if circuit.encoder_gates:
        if xs is None or xs.shape != (n_rows, circuit.n_encoder_slots):
            got = None if xs is None else xs.shape
            raise ShapeError(
                f"encoder expects inputs of shape ({n_rows}, {circuit.n_encoder_slots}), got {got}"
            )
        angles = xs * ENCODER_SCALE
        for g in circuit.encoder_gates:
            cols = tuple(angles[:, s] for s in g.param_slots)
            if all(np.ptp(c) == 0 for c in cols):
                cols = tuple(c[0] for c in cols)
            ops.append(BoundOp(g.kind, g.wires, gates.matrix_for(g.kind, cols), "encoder"))
    for g in circuit.prelude_gates:
        ops.append(BoundOp(g.kind, g.wires, gates.matrix_for(g.kind), "prelude"))
    effective = params_rows * active
    per_row = effective.ndim == 2
    for g in circuit.trainable_gates:
        if not gate_present(g, active):
            continue
        if per_row:
            cols = tuple(effective[:, s] for s in g.param_slots)
            if all(np.ptp(c) == 0 for c in cols):
                cols = tuple(c[0] for c in cols)
        else:
            cols = tuple(effective[s] for s in g.param_slots)
        ops.append(BoundOp(g.kind, g.wires, gates.matrix_for(g.kind, cols), "trainable"))
    return ops


def bound_ops(circuit, xs, active, params) -> list[BoundOp]:
    """Single-parameter-vector view of bound_ops_rows (noise decoration uses it)."""
    n_rows = 1 if xs is None else xs.shape[0]
    return bound_ops_rows(circuit, xs, active, np.asarray(params, dtype=float), n_rows)


def run_ops_batch(ops: Sequence[BoundOp], n_qubits: int, states: np.ndarray) -> np.ndarray:
    for op in ops:
        if len(op.wires) == 1:
            states = qstate.apply_1q_batch(states, op.matrix, op.wires[0], n_qubits)
        else:
            states = qstate.apply_2q_batch(states, op.matrix, op.wires[0], op.wires[1], n_qubits)
    return states


def run_states_batch(circuit, xs, active, params) -> np.ndarray:
    b = 1 if xs is None else xs.shape[0]
    states = np.tile(qstate.init_zero_state(circuit.n_qubits), (b, 1))
    return run_ops_batch(bound_ops(circuit, xs, active, params), circuit.n_qubits, states)


def measure_probs_batch(circuit: Circuit, probs_fn) -> np.ndarray:
    """Turn a probability oracle into measurement outputs.

    probs_fn(pauli_or_None) returns (B, 2**n) computational-basis
    probabilities, after rotating into the given Pauli string's basis when one
    is passed.  This indirection lets the noisy path inject readout confusion.
    """
    spec = circuit.measurement
    n = circuit.n_qubits
    if spec.mode == "pauli_hamiltonian":
        # Terms sharing a measurement basis (qubit-wise, with I free) reuse
        # one rotated probability vector.
        terms = spec.hamiltonian.terms
        groups: dict[str, list[int]] = {}
        for i, (_, pauli) in enumerate(terms):
            key = "".join("Z" if ch in "IZ" else ch for ch in pauli)
            groups.setdefault(key, []).append(i)
        cols: list = [None] * len(terms)
        for key, idxs in groups.items():
            probs = probs_fn(key if any(ch in "XY" for ch in key) else None)
            for i in idxs:
                pauli = terms[i][1]
                if set(pauli) == {"I"}:
                    cols[i] = np.ones(probs.shape[0])
                else:
                    cols[i] = probs @ qstate.parity_vector(pauli)
        return np.stack(cols, axis=1)
    probs = probs_fn(None)
    z = probs @ qstate.z_sign_table(n)
    if spec.mode == "per_qubit_z_softmax":
        return z
    groups = spec.class_groups
    return np.stack([z[:, list(g)].sum(axis=1) for g in groups], axis=1)


def measure_states(circuit: Circuit, states: np.ndarray) -> np.ndarray:
    """Exact measurement outputs (no readout error) for a batch of states."""
    n = circuit.n_qubits

    def probs_fn(pauli):
        st = states if pauli is None else qstate.rotate_to_pauli_basis_batch(states, pauli, n)
        return qstate.basis_probabilities(st)

    return measure_probs_batch(circuit, probs_fn)


def forward_batch(circuit: Circuit, xs: np.ndarray | None, mask, params=None) -> np.ndarray:
    """Noiseless outputs, one row per example: class scores or per-term <P>."""
    params = circuit.param_table if params is None else params
    active = active_of(mask, circuit.n_params)
    return measure_states(circuit, run_states_batch(circuit, xs, active, params))


def forward(circuit: Circuit, x, mask, params=None) -> np.ndarray:
    """Single-example forward; x may be None for circuits without an encoder."""
    xs = None if x is None or len(x) == 0 else np.asarray(x, dtype=float)[None, :]
    return forward_batch(circuit, xs, mask, params)[0]


# ---------------------------------------------------------------------------
# Statistics and export
# ---------------------------------------------------------------------------


def circuit_stats(circuit: Circuit, mask=None, include_encoder: bool = False) -> dict:
    """Depth, per-kind gate counts, and active parameter count under a mask.

    Depth is earliest-fit layering: each present gate goes into the first
    layer where none of its wires are occupied.  Counts cover the ansatz
    (prelude + trainable); pass include_encoder=True to add encoder gates.
    """
    active = active_of(mask, circuit.n_params)
    present: list[Gate] = []
    if include_encoder:
        present.extend(circuit.encoder_gates)
    present.extend(circuit.prelude_gates)
    present.extend(g for g in circuit.trainable_gates if gate_present(g, active))

    layers: list[set[int]] = []
    for g in present:
        for layer in layers:
            if not layer.intersection(g.wires):
                layer.update(g.wires)
                break
        else:
            layers.append(set(g.wires))

    counts: dict[str, int] = {}
    for g in present:
        counts[g.kind] = counts.get(g.kind, 0) + 1
    return {
        "depth": len(layers),
        "gate_counts": counts,
        "n_gates": len(present),
        "active_params": int(active.sum()),
        "total_params": circuit.n_params,
    }


def export_text(circuit: Circuit) -> str:
    """Plain-text description, one gate per line, stable ordering for diffing."""
    lines = [
        f"# n_qubits={circuit.n_qubits} n_blocks={circuit.n_blocks} "
        f"n_params={circuit.n_params} measurement={circuit.measurement.mode}"
    ]

    def fmt(section: str, g: Gate) -> str:
        wires = ",".join(str(w) for w in g.wires)
        slots = ",".join(str(s) for s in g.param_slots) if g.param_slots else "-"
        return f"{section} {g.kind} {wires} {slots} {g.block_id}"

    lines.extend(fmt("encoder", g) for g in circuit.encoder_gates)
    lines.extend(fmt("prelude", g) for g in circuit.prelude_gates)
    lines.extend(fmt("trainable", g) for g in circuit.trainable_gates)
    return "\n".join(lines) + "\n"
