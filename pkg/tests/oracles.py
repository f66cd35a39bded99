"""Independent brute-force oracles for the test suite.

Everything here is deliberately naive and separate from the package's
optimized code paths: dense Kronecker products, explicit trace loops, and
basis-permutation embeddings. Keep it that way; these are the reference
side of every dual-route check.
"""

from __future__ import annotations

from itertools import product

import numpy as np

_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for ch in label:
        out = np.kron(out, _P[ch])
    return out


def all_labels(n: int):
    return ("".join(t) for t in product("IXYZ", repeat=n))


def paulimap_matrix(m) -> np.ndarray:
    """Dense matrix of a qadv PauliMap, built from labels only."""
    n = m.n_qubits
    out = np.zeros((2**n, 2**n), dtype=complex)
    for p, c in m.terms.items():
        out += c * pauli_matrix(p.label())
    return out


def pauli_decompose(matrix: np.ndarray, n: int) -> dict[str, float]:
    """Coefficients via explicit traces; drops magnitudes below 1e-13."""
    out = {}
    for label in all_labels(n):
        coeff = np.trace(pauli_matrix(label) @ matrix) / 2**n
        assert abs(coeff.imag) < 1e-9
        if abs(coeff.real) > 1e-13:
            out[label] = float(coeff.real)
    return out


def conjugate_map_dense(m, unitary_full: np.ndarray) -> dict[str, float]:
    """U^dag O U for a full-width unitary, re-expanded over all Paulis."""
    mat = unitary_full.conj().T @ paulimap_matrix(m) @ unitary_full
    return pauli_decompose(mat, m.n_qubits)


def basis_permutation(n: int, order: list[int]) -> np.ndarray:
    """Permutation matrix sending standard qubit order to `order`: qubit
    order[j] of the input lands at position j of the output index."""
    dim = 2**n
    perm = np.zeros((dim, dim), dtype=complex)
    for i_old in range(dim):
        bits = [(i_old >> (n - 1 - q)) & 1 for q in range(n)]
        i_new = 0
        for j, q in enumerate(order):
            i_new |= bits[q] << (n - 1 - j)
        perm[i_new, i_old] = 1.0
    return perm


def embed(matrix: np.ndarray, targets: list[int], n: int) -> np.ndarray:
    """Embed an operator on `targets` (in that order) into n qubits."""
    w = len(targets)
    rest = [q for q in range(n) if q not in targets]
    big = np.kron(matrix, np.eye(2 ** (n - w), dtype=complex))
    perm = basis_permutation(n, list(targets) + rest)
    return perm.conj().T @ big @ perm


def gate_unitary(gate) -> np.ndarray:
    if gate.kind == "perm":
        u = np.zeros((2 ** len(gate.targets),) * 2, dtype=complex)
        for j, pj in enumerate(gate.perm):
            u[pj, j] = 1.0
        return u
    return gate.unitary()


def circuit_unitary(c) -> np.ndarray:
    """Full unitary of a circuit by composing embedded layer matrices."""
    from qadv import circuits

    n = c.n_qubits
    total = np.eye(2**n, dtype=complex)
    for layer in c.layers:
        if isinstance(layer, circuits.ElementaryLayer):
            lu = np.eye(2**n, dtype=complex)
            for g in layer.gates:
                lu = embed(gate_unitary(g), list(g.targets), n) @ lu
            total = lu @ total
        else:
            sub = circuit_unitary(layer.circuit)
            placed = embed(sub, list(layer.targets), n)
            if layer.control is not None:
                p0 = embed(np.diag([1.0, 0.0]).astype(complex), [layer.control], n)
                p1 = embed(np.diag([0.0, 1.0]).astype(complex), [layer.control], n)
                placed = p0 + placed @ p1
            total = placed @ total
    return total


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
