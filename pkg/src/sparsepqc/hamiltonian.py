"""Pauli-string Hamiltonians: parsing, energy evaluation, exact diagonalization.

File format, one term per line, '#' starts a comment:

    # optional provenance notes
    -1.052373245772859 II
    0.39793742484318045 ZI

Character q of each string acts on qubit q (qubit 0 = least significant bit).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import MAX_DIAG_QUBITS
from .errors import CapacityError, ParseError, ShapeError
from .gates import PAULIS


@dataclass(frozen=True)
class Hamiltonian:
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        if not self.terms:
            raise ParseError("hamiltonian has no terms")
        n = len(self.terms[0][1])
        for coeff, pauli in self.terms:
            if len(pauli) != n:
                raise ShapeError(f"term {pauli!r} length differs from {n}")
            if not np.isfinite(coeff):
                raise ParseError(f"non-finite coefficient {coeff!r}")
            for ch in pauli:
                if ch not in PAULIS:
                    raise ParseError(f"invalid Pauli character {ch!r} in {pauli!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0][1])

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])


def parse_hamiltonian(text: str) -> Hamiltonian:
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'coefficient pauli_string', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        terms.append((coeff, parts[1].upper()))
    return Hamiltonian(tuple(terms))


def load_hamiltonian(path) -> Hamiltonian:
    return parse_hamiltonian(Path(path).read_text())


def dense_matrix(ham: Hamiltonian) -> np.ndarray:
    """Sum of c_i * P_i as a dense 2**n x 2**n Hermitian matrix."""
    n = ham.n_qubits
    if n > MAX_DIAG_QUBITS:
        raise CapacityError(f"dense diagonalization capped at {MAX_DIAG_QUBITS} qubits")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, pauli in ham.terms:
        term = np.array([[1.0]], dtype=complex)
        # qubit 0 is the least significant bit, so it sits rightmost in the kron chain
        for q in reversed(range(n)):
            term = np.kron(term, PAULIS[pauli[q]])
        out += coeff * term
    return out


def exact_ground_energy(ham: Hamiltonian) -> float:
    """Minimum eigenvalue by dense diagonalization; the VQE verification oracle."""
    return float(np.linalg.eigvalsh(dense_matrix(ham)).min())


def vqe_energy(circuit, params, mask, ham: Hamiltonian, model=None) -> float:
    """Energy sum(c_i * <P_i>) of the prepared state, optionally under noise."""
    from . import circuits, noise

    if ham.n_qubits != circuit.n_qubits:
        raise ShapeError(
            f"hamiltonian acts on {ham.n_qubits} qubits, circuit has {circuit.n_qubits}"
        )
    spec = circuits.MeasurementSpec(mode="pauli_hamiltonian", hamiltonian=ham)
    bound = circuits.with_measurement(circuit, spec)
    if model is None:
        outputs = circuits.forward(bound, None, mask, params)
    else:
        outputs = noise.noisy_forward(bound, None, mask, params, model)
    return float(ham.coefficients @ outputs)
