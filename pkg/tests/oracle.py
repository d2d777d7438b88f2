"""Reference simulator for tests, deliberately sharing no code with the engine.

Gate matrices are rebuilt here from first principles (square roots via
scipy), and gates act through ``tensordot`` on an ``n``-axis tensor rather
than through bit arithmetic.
"""
import numpy as np
from scipy.linalg import sqrtm

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)

MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "SX": sqrtm(X),
    "SY": sqrtm(Y),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "Z": np.diag([1, -1]).astype(complex),
    "P0": np.diag([1, 0]).astype(complex),
    "P1": np.diag([0, 1]).astype(complex),
    "I": np.eye(2, dtype=complex),
}
CZ = np.diag([1, 1, 1, -1]).astype(complex).reshape(2, 2, 2, 2)


def apply_1q(psi, matrix, q):
    psi = np.tensordot(matrix, psi, axes=([1], [q]))
    return np.moveaxis(psi, 0, q)


def apply_cz(psi, a, b):
    psi = np.tensordot(CZ, psi, axes=([2, 3], [a, b]))
    return np.moveaxis(psi, [0, 1], [a, b])


def simulate(n, layers):
    """``layers``: iterable of (singles, edges) with singles as (qubit, gate-name) pairs."""
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1
    for singles, edges in layers:
        for q, name in singles:
            psi = apply_1q(psi, MATRICES[name], q)
        for a, b in edges:
            psi = apply_cz(psi, a, b)
    return psi.reshape(-1)


def simulate_circuit(circuit):
    layers = [([(q, g.value) for q, g in layer.singles], layer.edges) for layer in circuit.layers]
    return simulate(circuit.n_qubits, layers)
