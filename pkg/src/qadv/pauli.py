"""Pauli-string algebra on (x, z) bitmask pairs.

Conventions used throughout the package:

- Qubits are indexed 0..n-1. Qubit 0 is "the first qubit" and is the most
  significant bit of a statevector amplitude index.
- A PauliString stores two integer bitmasks; bit i refers to qubit i.
  Qubit i carries X iff the x-bit is set, Z iff the z-bit is set, Y iff
  both, I iff neither. Each site holds the Hermitian Pauli with phase +1
  (Y itself, not XZ), so Hermitian operators expand with real coefficients
  and conjugation by any unitary keeps them real.
- Gate-local Pauli operators are indexed in base 4 with digits
  0=I, 1=X, 2=Y, 3=Z and the gate's first target as the most significant
  digit, matching the Kronecker order of the gate matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# Hermitian single-qubit basis, indexed I=0, X=1, Y=2, Z=3.
PAULI_1Q = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_DIGIT_FROM_BITS = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
_BITS_FROM_DIGIT = ((0, 0), (1, 0), (1, 1), (0, 1))
_LABELS = "IXYZ"

#: Coefficients smaller than this are dropped after each layer step. This is
#: an implementation guard on memory, not part of the propagation rule; runs
#: record it in their metadata.
DROP_TOLERANCE = 1e-12

_UNITARITY_TOL = 1e-10
_HERMITICITY_TOL = 1e-10


class NonUnitaryError(ValueError):
    """Raised when a matrix fails the unitarity check."""


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator without phase; signs live in coefficients."""

    n_qubits: int
    x: int
    z: int

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        mask = (1 << self.n_qubits) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bitmask exceeds n_qubits")

    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x | self.z).bit_count()

    def digit(self, qubit: int) -> int:
        """Base-4 Pauli index (0=I,1=X,2=Y,3=Z) at one qubit."""
        return _DIGIT_FROM_BITS[(self.x >> qubit) & 1, (self.z >> qubit) & 1]

    def with_digit(self, qubit: int, digit: int) -> "PauliString":
        xb, zb = _BITS_FROM_DIGIT[digit]
        bit = 1 << qubit
        return PauliString(
            self.n_qubits,
            (self.x & ~bit) | (xb << qubit),
            (self.z & ~bit) | (zb << qubit),
        )

    def label(self) -> str:
        return "".join(_LABELS[self.digit(q)] for q in range(self.n_qubits))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for q, ch in enumerate(label):
            try:
                xb, zb = _BITS_FROM_DIGIT[_LABELS.index(ch)]
            except ValueError:
                raise ValueError(f"unknown Pauli letter {ch!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"


class PauliMap:
    """A finite real-weighted sum of PauliStrings (a Hermitian observable).

    Immutable after construction; all operations return new maps.
    Coefficients with magnitude below ``drop_tolerance`` are discarded.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliString, float] | None = None,
        drop_tolerance: float = 0.0,
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        kept: dict[PauliString, float] = {}
        for p, c in (terms or {}).items():
            if p.n_qubits != n_qubits:
                raise ValueError("term qubit count mismatch")
            c = float(c)
            if abs(c) > drop_tolerance:
                kept[p] = c
        self.terms = kept

    @classmethod
    def single(cls, p: PauliString, coefficient: float = 1.0) -> "PauliMap":
        return cls(p.n_qubits, {p: coefficient})

    @classmethod
    def from_labels(cls, terms: Mapping[str, float]) -> "PauliMap":
        parsed = {PauliString.from_label(l): c for l, c in terms.items()}
        n = next(iter(parsed)).n_qubits
        return cls(n, parsed)

    def frobenius_normalized(self) -> float:
        """Squared Pauli-2 norm: sum of squared coefficients = Tr[O^2]/2^n."""
        return float(sum(c * c for c in self.terms.values()))

    def project_weight(self, k: int) -> "PauliMap":
        """Keep only terms of weight <= k; coefficients unchanged."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        return PauliMap(
            self.n_qubits,
            {p: c for p, c in self.terms.items() if p.weight() <= k},
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{p.label()}: {c:+.6g}" for p, c in sorted(self.terms.items(), key=lambda t: t[0].label())
        )
        return f"PauliMap({self.n_qubits}, {{{inner}}})"


@dataclass(frozen=True)
class TransferMatrix:
    """Real matrix of conjugation coefficients for a 1-3 qubit unitary.

    entries[a, b] = Tr(P_b U^dag P_a U) / 2^arity, so a row lists how the
    input Pauli P_a spreads over output Paulis under backward evolution.
    Rows are orthonormal (conjugation is an isometry of the Pauli basis)
    and the identity row is the identity unit row.
    """

    arity: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        d = 4**self.arity
        if self.entries.shape != (d, d):
            raise ValueError("entries shape does not match arity")
        object.__setattr__(self, "_rows", [None] * d)

    def row_nonzeros(self, a: int) -> list[tuple[int, float]]:
        """Nonzero (output index, coefficient) pairs of row a, cached."""
        cached = self._rows[a]
        if cached is None:
            row = self.entries[a]
            cached = [(int(b), float(row[b])) for b in np.nonzero(row)[0]]
            self._rows[a] = cached
        return cached


def _pauli_basis(arity: int) -> np.ndarray:
    """All 4^arity Hermitian Pauli matrices, first qubit most significant."""
    basis = PAULI_1Q
    for _ in range(arity - 1):
        basis = np.einsum("iab,jcd->ijacbd", basis, PAULI_1Q).reshape(
            basis.shape[0] * 4, basis.shape[1] * 2, basis.shape[1] * 2
        )
    return basis


_BASIS_CACHE: dict[int, np.ndarray] = {}
_TM_CACHE: dict[tuple[int, bytes], TransferMatrix] = {}
# Random gates never repeat, so the cache only pays off for named gates;
# cap it so long Monte Carlo runs cannot grow memory without bound.
_TM_CACHE_MAX = 65536


def _basis(arity: int) -> np.ndarray:
    if arity not in _BASIS_CACHE:
        _BASIS_CACHE[arity] = _pauli_basis(arity)
    return _BASIS_CACHE[arity]


def check_unitary(u: np.ndarray, tol: float = _UNITARITY_TOL) -> None:
    d = u.shape[0]
    if u.shape != (d, d):
        raise NonUnitaryError("matrix is not square")
    if np.abs(u.conj().T @ u - np.eye(d)).max() > tol:
        raise NonUnitaryError("matrix is not unitary within tolerance")


def transfer_matrix(u: np.ndarray) -> TransferMatrix:
    """Pauli transfer coefficients of a 1-3 qubit unitary, cached by content."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    arity = d.bit_length() - 1
    if d not in (2, 4, 8) or u.shape != (d, d):
        raise ValueError("unitary must act on 1, 2, or 3 qubits")
    key = (d, u.tobytes())
    cached = _TM_CACHE.get(key)
    if cached is not None:
        return cached
    check_unitary(u)
    basis = _basis(arity)
    rotated = np.einsum("ab,nbc,cd->nad", u.conj().T, basis, u)
    raw = np.einsum("bij,aji->ab", basis, rotated) / d
    if np.abs(raw.imag).max() > _HERMITICITY_TOL:
        raise ValueError("transfer matrix has nonreal entries")
    entries = raw.real.copy()
    # Snap trace-noise to exact zeros so structurally absent outputs are
    # skipped; the perturbation is far below the orthogonality tolerance.
    entries[np.abs(entries) < 1e-13] = 0.0
    tm = TransferMatrix(arity, entries)
    if len(_TM_CACHE) >= _TM_CACHE_MAX:
        _TM_CACHE.clear()
    _TM_CACHE[key] = tm
    return tm


def clear_transfer_cache() -> None:
    _TM_CACHE.clear()


def _local_index(p: PauliString, targets: Sequence[int]) -> int:
    a = 0
    for t in targets:
        a = (a << 2) | p.digit(t)
    return a


def _replace_local(p: PauliString, targets: Sequence[int], b: int) -> PauliString:
    w = len(targets)
    x, z = p.x, p.z
    for j in range(w - 1, -1, -1):
        xb, zb = _BITS_FROM_DIGIT[b & 3]
        b >>= 2
        bit = 1 << targets[j]
        x = (x & ~bit) | (xb << targets[j])
        z = (z & ~bit) | (zb << targets[j])
    return PauliString(p.n_qubits, x, z)


def conjugate_layer(
    m: PauliMap,
    gates: Iterable[tuple[Sequence[int], TransferMatrix]],
    drop_tolerance: float = DROP_TOLERANCE,
) -> PauliMap:
    """Backward-evolve a PauliMap through one layer of disjoint gates.

    Computes U^dag O U for the layer unitary U; exact up to the drop
    tolerance, so the Frobenius norm is preserved.
    """
    gates = list(gates)
    seen = 0
    for targets, tm in gates:
        tmask = 0
        for t in targets:
            if not 0 <= t < m.n_qubits:
                raise ValueError(f"gate target {t} out of range")
            tmask |= 1 << t
        if tmask & seen:
            raise ValueError("overlapping gate supports in one layer")
        if len(targets) != tm.arity:
            raise ValueError("transfer matrix arity does not match targets")
        seen |= tmask

    acc: dict[PauliString, float] = dict(m.terms)
    for targets, tm in gates:
        nxt: dict[PauliString, float] = {}
        for p, c in acc.items():
            for b, v in tm.row_nonzeros(_local_index(p, targets)):
                q = _replace_local(p, targets, b)
                nxt[q] = nxt.get(q, 0.0) + c * v
        acc = nxt
    return PauliMap(m.n_qubits, acc, drop_tolerance=drop_tolerance)


def _local_matrix(digits_and_coeffs: Iterable[tuple[int, float]], w: int) -> np.ndarray:
    basis = _basis(w)
    out = np.zeros((2**w, 2**w), dtype=complex)
    for a, c in digits_and_coeffs:
        out += c * basis[a]
    return out


def _pauli_coefficients(matrix: np.ndarray, w: int) -> np.ndarray:
    """Expand a 2^w x 2^w matrix in the Pauli basis: c_b = Tr(P_b M)/2^w."""
    t = matrix.reshape((2,) * (2 * w))
    for i in range(w):
        # Contract row axis b_i (position i) and column axis a_i (position w)
        # with the single-qubit basis; the new digit axis lands in front.
        t = np.tensordot(PAULI_1Q, t, axes=([1, 2], [w, i]))
    t = np.transpose(t, tuple(range(w - 1, -1, -1)))
    return t.reshape(-1) / 2**w


def conjugate_dense(
    m: PauliMap,
    unitary: np.ndarray,
    support: Sequence[int],
    drop_tolerance: float = DROP_TOLERANCE,
) -> PauliMap:
    """Backward-evolve through a wide unitary by dense matrix conjugation.

    The unitary acts on ``support`` (sorted qubit indices); terms disjoint
    from the support pass through untouched. Touched terms are grouped by
    their off-support factor, materialized as a dense matrix, conjugated
    as U^dag M U, and re-expanded in the Pauli basis.
    """
    support = tuple(support)
    w = len(support)
    if unitary.shape != (2**w, 2**w):
        raise ValueError("unitary size does not match support")
    check_unitary(unitary)
    smask = 0
    for q in support:
        smask |= 1 << q

    out: dict[PauliString, float] = {}
    groups: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for p, c in m.terms.items():
        if not (p.x | p.z) & smask:
            out[p] = out.get(p, 0.0) + c
            continue
        rest = (p.x & ~smask, p.z & ~smask)
        groups.setdefault(rest, []).append((_local_index(p, support), c))

    udag = unitary.conj().T
    for (rx, rz), locals_ in groups.items():
        conjugated = udag @ _local_matrix(locals_, w) @ unitary
        coeffs = _pauli_coefficients(conjugated, w)
        if np.abs(coeffs.imag).max() > _HERMITICITY_TOL:
            raise ValueError("conjugation produced nonreal Pauli coefficients")
        for b in np.nonzero(np.abs(coeffs.real) > drop_tolerance)[0]:
            base = PauliString(m.n_qubits, rx, rz)
            q = _replace_local(base, support, int(b))
            out[q] = out.get(q, 0.0) + float(coeffs.real[b])
    return PauliMap(m.n_qubits, out, drop_tolerance=drop_tolerance)
