"""Numerical tolerance constants, centralized in one record."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-10            # statevector norm drift after a gate
    unitary: float = 1e-10         # U†U - I deviation
    expectation_imag: float = 1e-10  # imaginary residue of Hermitian expectations
    prob_sum: float = 1e-9         # probability vectors must sum to 1 within this
    readout_row: float = 1e-12     # confusion matrix rows must sum to 1 within this
    trivial_noise: float = 1e-12   # noisy forward vs noiseless forward, trivial model


TOL = Tolerances()

# Memory guards for dense linear algebra.
MAX_QUBITS = 12
MAX_DIAG_QUBITS = 10
