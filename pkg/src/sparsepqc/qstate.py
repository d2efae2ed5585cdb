"""Dense statevector simulation.

Bit ordering: qubit 0 is the least significant bit of the basis index, so the
amplitude at index k belongs to the basis state |q_{n-1} ... q_1 q_0> with
q_j = (k >> j) & 1.  A Pauli string is read the same way: character q of the
string acts on qubit q.

Two layers live here.  The single-state functions implement the public
contracts.  The ``*_batch`` functions operate on arrays of shape
(batch, 2**n) and back the hot paths (per-example encoding, noise
trajectories, shifted gradient evaluations); matrices may carry a leading
batch axis to apply a different 2x2/4x4 per batch element.
"""

from __future__ import annotations

import numpy as np

from .constants import MAX_QUBITS, TOL
from .errors import CapacityError, ParseError, ValidationError, WireError
from .gates import HADAMARD, PAULIS, S_DAGGER

VALIDATE_GATES = __debug__  # unitarity checks on the public single-state API


def n_qubits_of(state: np.ndarray) -> int:
    n = int(np.log2(state.shape[-1]) + 0.5)
    if 2**n != state.shape[-1]:
        raise ValidationError(f"state length {state.shape[-1]} is not a power of 2")
    return n


def init_zero_state(n_qubits: int) -> np.ndarray:
    """|0...0> as a complex amplitude array of length 2**n_qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits={n_qubits} outside supported range [1, {MAX_QUBITS}]")
    state = np.zeros(2**n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def _check_wires(wires, n: int) -> None:
    if len(set(wires)) != len(wires):
        raise WireError(f"duplicate wires {wires}")
    for w in wires:
        if not 0 <= w < n:
            raise WireError(f"wire {w} out of range for {n} qubits")


def _check_unitary(gate: np.ndarray) -> None:
    dim = gate.shape[-1]
    dev = np.abs(gate.conj().swapaxes(-1, -2) @ gate - np.eye(dim)).max()
    if dev > TOL.unitary:
        raise ValidationError(f"gate is not unitary (deviation {dev:.2e})")


def apply_gate(state: np.ndarray, gate: np.ndarray, wires) -> np.ndarray:
    """Apply a 2x2 or 4x4 unitary on the named wires; returns a new state."""
    n = n_qubits_of(state)
    _check_wires(wires, n)
    if gate.shape[-1] != 2 ** len(wires):
        raise WireError(f"gate dim {gate.shape[-1]} does not match {len(wires)} wires")
    if VALIDATE_GATES:
        _check_unitary(gate)
    out = state[None, :].copy()
    if len(wires) == 1:
        out = apply_1q_batch(out, gate, wires[0], n)
    else:
        out = apply_2q_batch(out, gate, wires[0], wires[1], n)
    return out[0]


def apply_1q_batch(states: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    """mat is (2,2) shared or (B,2,2) per batch element."""
    b = states.shape[0]
    st = states.reshape((b,) + (2,) * n)
    axis = 1 + (n - 1 - q)
    st = np.moveaxis(st, axis, -1)
    if mat.ndim == 2:
        out = st @ mat.T
    else:
        out = np.einsum("bij,b...j->b...i", mat, st)
    return np.ascontiguousarray(np.moveaxis(out, -1, axis)).reshape(b, -1)


def apply_2q_batch(states: np.ndarray, mat: np.ndarray, a: int, b_wire: int, n: int) -> np.ndarray:
    """Local basis index is bit_a*2 + bit_b (first wire = MSB)."""
    b = states.shape[0]
    st = states.reshape((b,) + (2,) * n)
    ax_a = 1 + (n - 1 - a)
    ax_b = 1 + (n - 1 - b_wire)
    st = np.moveaxis(st, (ax_a, ax_b), (-2, -1))
    lead = st.shape[:-2]
    st = st.reshape(lead + (4,))
    if mat.ndim == 2:
        out = st @ mat.T
    else:
        out = np.einsum("bij,b...j->b...i", mat, st)
    out = out.reshape(lead + (2, 2))
    return np.ascontiguousarray(np.moveaxis(out, (-2, -1), (ax_a, ax_b))).reshape(b, -1)


def basis_probabilities(state: np.ndarray) -> np.ndarray:
    """|amplitude|^2 per basis index; sums to 1 for a normalized state."""
    return np.abs(state) ** 2


_BASIS_CHANGE = {"X": (HADAMARD,), "Y": (S_DAGGER, HADAMARD), "Z": (), "I": ()}


def rotate_to_pauli_basis_batch(states: np.ndarray, pauli: str, n: int) -> np.ndarray:
    """Map each qubit so that measuring Z afterwards measures the given Pauli."""
    out = states
    for q, ch in enumerate(pauli):
        for mat in _BASIS_CHANGE[ch]:
            out = apply_1q_batch(out, mat, q, n)
    return out


def z_sign_table(n: int) -> np.ndarray:
    """(2**n, n) array of (-1)**bit_q(k), used to turn probabilities into <Z_q>."""
    k = np.arange(2**n)
    return 1.0 - 2.0 * ((k[:, None] >> np.arange(n)[None, :]) & 1)


def parity_vector(pauli: str) -> np.ndarray:
    """(-1)**(popcount of measured bits on the string's support), per basis index."""
    n = len(pauli)
    signs = z_sign_table(n)
    support = [q for q, ch in enumerate(pauli) if ch != "I"]
    if not support:
        return np.ones(2**n)
    return np.prod(signs[:, support], axis=1)


def expectation_pauli_string(state: np.ndarray, pauli: str) -> float:
    """<state| P |state> for a Pauli string, exact and clamped to [-1, 1]."""
    n = n_qubits_of(state)
    if len(pauli) != n:
        raise ParseError(f"pauli string length {len(pauli)} does not match {n} qubits")
    for ch in pauli:
        if ch not in PAULIS:
            raise ParseError(f"invalid Pauli character {ch!r}")
    transformed = state[None, :]
    for q, ch in enumerate(pauli):
        if ch != "I":
            transformed = apply_1q_batch(transformed, PAULIS[ch], q, n)
    value = np.vdot(state, transformed[0])
    if abs(value.imag) > TOL.expectation_imag:
        raise ValidationError(f"expectation has imaginary residue {value.imag:.2e}")
    return float(np.clip(value.real, -1.0, 1.0))
