"""Stochastic Pauli error insertion and readout confusion.

Gate noise follows the twirling picture: after every present gate, each
touched wire independently suffers X, Y, or Z with the per-kind
probabilities (identity otherwise).  One sampled assignment over all
insertion points is a trajectory; outputs average over
``n_trajectories`` pure-state trajectories, with readout confusion applied
to each trajectory's measured probability vector before aggregation.

Trajectory k draws its uniforms from an rng seeded with (seed, k), so a
trajectory is reproducible in isolation and the batched evaluator below
produces exactly the per-trajectory sequences that
``sample_error_insertions`` reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import circuits, qstate
from .circuits import BoundOp
from .constants import TOL
from .errors import ConfigError, ValidationError
from .gates import I2, KIND_SIGNATURE, PAULI_X, PAULI_Y, PAULI_Z

_ERROR_MATS = np.stack([PAULI_X, PAULI_Y, PAULI_Z, I2])  # choice 3 = identity
_ERROR_KINDS = ("x", "y", "z", None)

PRESET_DIR = Path(__file__).parent / "presets"

ZERO_PROBS = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class NoiseModel:
    p1: dict  # gate kind -> (px, py, pz); "*" is the default entry
    p2: dict  # gate kind -> per-wire (px, py, pz)
    readout: np.ndarray | None  # (2,2) shared or (n,2,2) per qubit; None = ideal
    n_trajectories: int = 32
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        for table in (self.p1, self.p2):
            for kind, probs in table.items():
                p = np.asarray(probs, dtype=float)
                if p.shape != (3,) or (p < 0).any() or p.sum() > 1 + 1e-12:
                    raise ConfigError(f"bad Pauli probabilities for {kind!r}: {probs}")
        if self.readout is not None:
            r = np.asarray(self.readout, dtype=float)
            if r.shape[-2:] != (2, 2):
                raise ConfigError("readout confusion must be 2x2 per qubit")
            if (r < 0).any() or (r > 1).any():
                raise ConfigError("readout confusion entries must lie in [0, 1]")
            if np.abs(r.sum(axis=-1) - 1).max() > TOL.readout_row:
                raise ConfigError("readout confusion rows must sum to 1")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def probs_for(self, kind: str) -> tuple[float, float, float]:
        n_wires, _ = KIND_SIGNATURE[kind]
        table = self.p1 if n_wires == 1 else self.p2
        return tuple(table.get(kind, table.get("*", ZERO_PROBS)))

    def readout_for(self, n_qubits: int) -> np.ndarray | None:
        if self.readout is None:
            return None
        r = np.asarray(self.readout, dtype=float)
        if r.ndim == 2:
            return np.broadcast_to(r, (n_qubits, 2, 2))
        if r.shape[0] != n_qubits:
            raise ConfigError(f"readout has {r.shape[0]} qubits, circuit has {n_qubits}")
        return r

    def reseeded(self, seed: int) -> "NoiseModel":
        return replace(self, seed=int(seed))


def trivial_model(n_trajectories: int = 1, seed: int = 0) -> NoiseModel:
    return NoiseModel(p1={}, p2={}, readout=None, n_trajectories=n_trajectories, seed=seed, name="trivial")


def load_noise_model(source) -> NoiseModel:
    """Load from a preset name, a JSON file path, or an already-parsed dict.

    Schema: {"name": str, "p1": {kind: [px,py,pz]}, "p2": {...},
             "readout": 2x2 (all qubits) or list of 2x2, "n_trajectories": int,
             "seed": int}.  Unknown keys are rejected.
    """
    if isinstance(source, NoiseModel):
        return source
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        if not path.suffix and not path.exists():
            path = PRESET_DIR / f"{source}.json"
        if not path.exists():
            raise ConfigError(f"noise model {source!r} not found")
        raw = json.loads(path.read_text())
    allowed = {"name", "p1", "p2", "readout", "n_trajectories", "seed"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown noise model keys: {sorted(unknown)}")
    readout = raw.get("readout")
    return NoiseModel(
        p1={k: tuple(v) for k, v in raw.get("p1", {}).items()},
        p2={k: tuple(v) for k, v in raw.get("p2", {}).items()},
        readout=None if readout is None else np.asarray(readout, dtype=float),
        n_trajectories=int(raw.get("n_trajectories", 32)),
        seed=int(raw.get("seed", 0)),
        name=raw.get("name", ""),
    )


# ---------------------------------------------------------------------------
# Error sampling
# ---------------------------------------------------------------------------


def _insertion_points(ops, model: NoiseModel) -> list[tuple[int, int, np.ndarray]]:
    """(op index, wire, cumulative [px, px+py, px+py+pz]) per touched wire.

    Every present (op, wire) pair is a point, even at zero probability, so
    the per-trajectory uniform stream is indexed identically everywhere.
    """
    points = []
    for i, op in enumerate(ops):
        cum = np.cumsum(model.probs_for(op.kind))
        for w in op.wires:
            points.append((i, w, cum))
    return points


@lru_cache(maxsize=4096)
def _uniform_block(seed: int, trajectory_index: int, n_points: int) -> np.ndarray:
    """One uniform draw per insertion point; cached since shifted gradient
    evaluations replay the same (seed, trajectory, point count) stream."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, trajectory_index)))
    u = rng.random(n_points)
    u.setflags(write=False)
    return u


def _choice_matrix(model: NoiseModel, n_traj: int, points) -> np.ndarray:
    """Pauli choice per (trajectory, point): 0=X, 1=Y, 2=Z, 3=identity."""
    if not points:
        return np.zeros((n_traj, 0), dtype=np.intp)
    cums = np.stack([cum for _, _, cum in points])  # (P, 3)
    u = np.stack([_uniform_block(model.seed, t, len(points)) for t in range(n_traj)])
    return (u[:, :, None] >= cums[None, :, :]).sum(axis=2)


def _trajectory_choices(model: NoiseModel, trajectory_index: int, points) -> np.ndarray:
    if not points:
        return np.zeros(0, dtype=np.intp)
    cums = np.stack([cum for _, _, cum in points])
    u = _uniform_block(model.seed, trajectory_index, len(points))
    return (u[:, None] >= cums).sum(axis=1)


def sample_error_insertions(circuit, mask, model: NoiseModel, trajectory_index: int,
                            xs: np.ndarray | None = None, params=None) -> list[BoundOp]:
    """One trajectory's decorated gate sequence (errors carry section 'error')."""
    params = circuit.param_table if params is None else params
    active = circuits.active_of(mask, circuit.n_params)
    ops = circuits.bound_ops(circuit, xs, active, params)
    points = _insertion_points(ops, model)
    choices = _trajectory_choices(model, trajectory_index, points)
    decorated: list[BoundOp] = []
    j = 0
    for i, op in enumerate(ops):
        decorated.append(op)
        for w in op.wires:
            c = choices[j]
            j += 1
            if c != 3:
                decorated.append(BoundOp(_ERROR_KINDS[c], (w,), _ERROR_MATS[c], "error"))
    return decorated


# ---------------------------------------------------------------------------
# Readout confusion
# ---------------------------------------------------------------------------


def _confuse_probs_batch(probs: np.ndarray, confusion: np.ndarray) -> np.ndarray:
    """probs (B, 2**n) -> probs @ kron(C_{n-1}, ..., C_0), one axis at a time."""
    b, dim = probs.shape
    n = int(np.log2(dim) + 0.5)
    p = probs.reshape((b,) + (2,) * n)
    for q in range(n):
        axis = 1 + (n - 1 - q)
        p = np.moveaxis(p, axis, -1)
        p = p @ confusion[q]  # p'_j = sum_i p_i C[i, j]
        p = np.moveaxis(p, -1, axis)
    return np.ascontiguousarray(p).reshape(b, dim)


def apply_readout_error(probs: np.ndarray, model: NoiseModel) -> np.ndarray:
    """Tensor-product confusion over a bitstring probability vector."""
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > TOL.prob_sum:
        raise ValidationError(f"input is not a distribution (sum {probs.sum()!r})")
    n = int(np.log2(len(probs)) + 0.5)
    confusion = model.readout_for(n)
    if confusion is None:
        return probs.copy()
    return _confuse_probs_batch(probs[None, :], confusion)[0]


# ---------------------------------------------------------------------------
# Trajectory-averaged forward
# ---------------------------------------------------------------------------


def noisy_outputs_for_ops(circuit, ops, model: NoiseModel, n_rows: int) -> np.ndarray:
    """Trajectory-averaged measurement outputs for an already-bound op list.

    All trajectories evolve together: states are laid out as (row,
    trajectory) pairs and per-trajectory error matrices are applied as
    batched 2x2 multiplies.  Error sampling does not depend on the row, so
    every row (example or shifted evaluation) sees the same trajectory
    decorations; trajectory t replays exactly the sequence that
    sample_error_insertions(..., t) reports.
    """
    points = _insertion_points(ops, model)
    n_traj = model.n_trajectories
    choices = _choice_matrix(model, n_traj, points)  # (T, n_points)

    n = circuit.n_qubits
    states = np.tile(qstate.init_zero_state(n), (n_rows * n_traj, 1))
    j = 0
    for op in ops:
        mat = op.matrix
        if mat.ndim == 3:  # per-row matrix -> repeat per trajectory
            mat = np.repeat(mat, n_traj, axis=0)
        if len(op.wires) == 1:
            states = qstate.apply_1q_batch(states, mat, op.wires[0], n)
        else:
            states = qstate.apply_2q_batch(states, mat, op.wires[0], op.wires[1], n)
        for w in op.wires:
            idx = choices[:, j]
            j += 1
            if np.all(idx == 3):
                continue
            err = np.tile(_ERROR_MATS[idx], (n_rows, 1, 1))
            states = qstate.apply_1q_batch(states, err, w, n)

    confusion = model.readout_for(n)

    def probs_fn(pauli):
        st = states if pauli is None else qstate.rotate_to_pauli_basis_batch(states, pauli, n)
        probs = qstate.basis_probabilities(st)
        if confusion is not None:
            probs = _confuse_probs_batch(probs, confusion)
        return probs

    outputs = circuits.measure_probs_batch(circuit, probs_fn)
    return outputs.reshape(n_rows, n_traj, -1).mean(axis=1)


def noisy_forward_batch(circuit, xs, mask, params, model: NoiseModel) -> np.ndarray:
    """Mean measurement outputs over n_trajectories, one row per example."""
    params = circuit.param_table if params is None else params
    active = circuits.active_of(mask, circuit.n_params)
    ops = circuits.bound_ops(circuit, xs, active, params)
    n_rows = 1 if xs is None else xs.shape[0]
    return noisy_outputs_for_ops(circuit, ops, model, n_rows)


def noisy_forward(circuit, x, mask, params, model: NoiseModel) -> np.ndarray:
    xs = None if x is None or len(x) == 0 else np.asarray(x, dtype=float)[None, :]
    return noisy_forward_batch(circuit, xs, mask, params, model)[0]
