"""Gate matrix constructors and per-kind metadata.

Conventions (documented once, used everywhere):
  - rotation gates are exp(-i*theta/2 * G) for generator G, e.g.
    RX(theta) = exp(-i*theta*X/2), ZZ(theta) = exp(-i*(theta/2)*Z(x)Z);
  - u3(theta, phi, lam) is the standard 3-angle single-qubit unitary
    [[cos(t/2), -e^{i lam} sin(t/2)], [e^{i phi} sin(t/2), e^{i(phi+lam)} cos(t/2)]];
  - for a 2-wire gate on wires (a, b) the local basis index is bit_a*2 + bit_b,
    i.e. the first-listed wire is the most significant local bit (so cu3's
    control is its first wire);
  - sqrt_h is the principal matrix square root of the Hadamard.

Angle arguments broadcast: passing an array of shape (B,) yields matrices of
shape (B, 2, 2), used for per-example encoder binding.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# Principal square root: sqrt(H) = P+ + i*P- = ((1+i)I + (1-i)H)/2.
SQRT_HADAMARD = ((1 + 1j) * I2 + (1 - 1j) * HADAMARD) / 2
SX = np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex) / 2
S_DAGGER = np.array([[1, 0], [0, -1j]], dtype=complex)

CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _pauli_rotation(pauli: np.ndarray, theta) -> np.ndarray:
    """exp(-i*theta/2 * P) for an involutory generator P, broadcast over theta."""
    theta = np.asarray(theta, dtype=float)
    dim = pauli.shape[0]
    c = np.cos(theta / 2)[..., None, None]
    s = np.sin(theta / 2)[..., None, None]
    eye = np.eye(dim, dtype=complex)
    return c * eye - 1j * s * pauli


def rx(theta):
    return _pauli_rotation(PAULI_X, theta)


def ry(theta):
    return _pauli_rotation(PAULI_Y, theta)


def rz(theta):
    return _pauli_rotation(PAULI_Z, theta)


def u3(theta, phi, lam):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    c = np.cos(theta / 2).astype(complex)
    s = np.sin(theta / 2).astype(complex)
    out = np.empty(np.broadcast(theta, phi, lam).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * lam) * s
    out[..., 1, 0] = np.exp(1j * phi) * s
    out[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def cu3(theta, phi, lam):
    block = u3(theta, phi, lam)
    out = np.zeros(block.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0, 0] = 1
    out[..., 1, 1] = 1
    out[..., 2:, 2:] = block
    return out


def zz(theta):
    return _pauli_rotation(np.kron(PAULI_Z, PAULI_Z), theta)


def zx(theta):
    return _pauli_rotation(np.kron(PAULI_Z, PAULI_X), theta)


def xx(theta):
    return _pauli_rotation(np.kron(PAULI_X, PAULI_X), theta)


# kind -> (wire count, parameter slot count)
KIND_SIGNATURE = {
    "rx": (1, 1),
    "ry": (1, 1),
    "rz": (1, 1),
    "u3": (1, 3),
    "cu3": (2, 3),
    "cz": (2, 0),
    "cnot": (2, 0),
    "x": (1, 0),
    "sx": (1, 0),
    "h": (1, 0),
    "sqrt_h": (1, 0),
    "zz": (2, 1),
    "zx": (2, 1),
    "xx": (2, 1),
}

FIXED_MATRICES = {
    "cz": CZ,
    "cnot": CNOT,
    "x": PAULI_X,
    "sx": SX,
    "h": HADAMARD,
    "sqrt_h": SQRT_HADAMARD,
}

PARAM_CONSTRUCTORS = {
    "rx": rx,
    "ry": ry,
    "rz": rz,
    "u3": u3,
    "cu3": cu3,
    "zz": zz,
    "zx": zx,
    "xx": xx,
}


def matrix_for(kind: str, angles=()) -> np.ndarray:
    """Concrete matrix for a gate kind; angles broadcast for batched binding."""
    if kind in FIXED_MATRICES:
        return FIXED_MATRICES[kind]
    return PARAM_CONSTRUCTORS[kind](*angles)
