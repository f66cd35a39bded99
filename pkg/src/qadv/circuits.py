"""Circuit IR, Haar-random brickwork, amplified majority-vote constructions,
and circuit-file serialization.

A circuit is an ordered list of layers. A layer is either a set of disjoint
elementary gates or a composite block (a sub-circuit placed on a target
register, optionally controlled by one qubit) that downstream consumers
treat as a single atomic step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SchemaError
from .pauli import check_unitary

CIRCUIT_FORMAT_VERSION = 1
ENDIANNESS = "q1-msb"  # the first qubit is the most significant amplitude bit

_SQ2 = 1.0 / math.sqrt(2.0)

FIXED_GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}

_SELF_ADJOINT = {"I", "X", "Y", "Z", "H", "CNOT", "CZ", "SWAP"}


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


PARAM_GATES = {"RX": _rx, "RY": _ry, "RZ": _rz}


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate: a named gate, an explicit 1-3 qubit unitary, or a
    classical-reversible basis permutation of arbitrary width."""

    kind: str
    targets: tuple[int, ...]
    param: float | None = None
    matrix: np.ndarray | None = None
    perm: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        w = len(self.targets)
        if len(set(self.targets)) != w or w == 0:
            raise ValueError("gate targets must be distinct and nonempty")
        if self.kind == "matrix":
            if self.matrix is None:
                raise ValueError("matrix gate needs a matrix")
            if w > 3:
                raise ValueError("explicit matrices are limited to 3 qubits")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2**w, 2**w):
                raise ValueError("matrix size does not match target count")
            check_unitary(m)
            object.__setattr__(self, "matrix", m)
        elif self.kind == "perm":
            if self.perm is None:
                raise ValueError("perm gate needs a permutation")
            perm = tuple(int(p) for p in self.perm)
            if sorted(perm) != list(range(2**w)):
                raise ValueError("perm must be a bijection over basis states")
            object.__setattr__(self, "perm", perm)
        elif self.kind in FIXED_GATES:
            if w != FIXED_GATES[self.kind].shape[0].bit_length() - 1:
                raise ValueError(f"{self.kind} expects a different target count")
        elif self.kind in PARAM_GATES:
            if self.param is None:
                raise ValueError(f"{self.kind} needs an angle parameter")
            if w != 1:
                raise ValueError(f"{self.kind} acts on one qubit")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.targets)

    def unitary(self) -> np.ndarray:
        if self.kind == "matrix":
            return self.matrix
        if self.kind == "perm":
            u = np.zeros((len(self.perm), len(self.perm)), dtype=complex)
            for j, pj in enumerate(self.perm):
                u[pj, j] = 1.0
            return u
        if self.kind in PARAM_GATES:
            return PARAM_GATES[self.kind](self.param)
        return FIXED_GATES[self.kind]

    def adjoint(self) -> "Gate":
        if self.kind in _SELF_ADJOINT:
            return self
        if self.kind == "S":
            return Gate("SDG", self.targets)
        if self.kind == "SDG":
            return Gate("S", self.targets)
        if self.kind in PARAM_GATES:
            return Gate(self.kind, self.targets, param=-self.param)
        if self.kind == "perm":
            inv = [0] * len(self.perm)
            for j, pj in enumerate(self.perm):
                inv[pj] = j
            return Gate("perm", self.targets, perm=tuple(inv))
        return Gate("matrix", self.targets, matrix=self.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class ElementaryLayer:
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        seen: set[int] = set()
        for g in self.gates:
            if seen & g.support:
                raise ValueError("overlapping gate supports in one layer")
            seen |= g.support

    @property
    def support(self) -> frozenset[int]:
        return frozenset().union(*(g.support for g in self.gates)) if self.gates else frozenset()


@dataclass(frozen=True, eq=False)
class BlockLayer:
    """A sub-circuit placed on `targets`, applied when `control` is |1> (or
    unconditionally when control is None). Treated as one atomic step."""

    name: str
    circuit: "Circuit"
    targets: tuple[int, ...]
    control: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("block targets must be distinct")
        if self.circuit.n_qubits != len(self.targets):
            raise ValueError("block target count must match sub-circuit width")
        if self.control is not None and self.control in self.targets:
            raise ValueError("control qubit cannot be a block target")

    @property
    def support(self) -> frozenset[int]:
        s = frozenset(self.targets)
        return s | {self.control} if self.control is not None else s


Layer = ElementaryLayer | BlockLayer


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    layers: tuple[Layer, ...] = ()
    registers: dict[str, tuple[int, int]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        for layer in self.layers:
            bad = [q for q in layer.support if not 0 <= q < self.n_qubits]
            if bad:
                raise ValueError(f"layer touches out-of-range qubits {bad}")
        if self.registers:
            covered: list[int] = []
            for name, (lo, hi) in self.registers.items():
                if not 0 <= lo <= hi < self.n_qubits:
                    raise ValueError(f"register {name!r} out of range")
                covered.extend(range(lo, hi + 1))
            if sorted(covered) != list(range(self.n_qubits)):
                raise ValueError("declared registers must partition the qubits")

    def input_register(self) -> tuple[int, int]:
        if "main" in self.registers:
            return self.registers["main"]
        return (0, self.n_qubits - 1)

    def inverse(self) -> "Circuit":
        """Layer-wise inverse; only defined for elementary layers."""
        inv_layers = []
        for layer in reversed(self.layers):
            if not isinstance(layer, ElementaryLayer):
                raise ValueError("inverse is only supported for elementary layers")
            inv_layers.append(ElementaryLayer(tuple(g.adjoint() for g in layer.gates)))
        return Circuit(self.n_qubits, tuple(inv_layers))


# ---------------------------------------------------------------------------
# Random circuit generation


def haar_two_qubit(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 4x4 unitary: QR of a complex Ginibre matrix with the
    R-diagonal phase folded back in to remove the QR sign ambiguity."""
    z = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _layer_pairs(
    n: int, layer_idx: int, pairing: str, rng: np.random.Generator
) -> list[tuple[int, int]]:
    if pairing == "random":
        order = [int(v) for v in rng.permutation(n)]
        return [(order[2 * i], order[2 * i + 1]) for i in range(n // 2)]
    offset = layer_idx % 2 if pairing == "brick" else 0
    pairs = [(i, i + 1) for i in range(offset, n - 1, 2)]
    if offset == 1 and n % 2 == 0:
        pairs.append((n - 1, 0))
    return pairs


def random_brickwork(
    n: int,
    layers: int,
    pairing: str = "brick",
    seed: int | np.random.SeedSequence | None = None,
) -> Circuit:
    """Brickwork of fresh Haar two-qubit gates; deterministic for fixed seed.

    Even n is covered completely each layer (the shifted layer wraps
    around); odd n leaves one qubit idle per layer.
    """
    if n < 2:
        raise ValueError("brickwork needs at least 2 qubits")
    if pairing not in ("brick", "fixed", "random"):
        raise ValueError(f"unknown pairing scheme {pairing!r}")
    rng = np.random.default_rng(seed)
    out = []
    for j in range(layers):
        gates = tuple(
            Gate("matrix", (a, b), matrix=haar_two_qubit(rng))
            for a, b in _layer_pairs(n, j, pairing, rng)
        )
        out.append(ElementaryLayer(gates))
    meta = {"generator": "brickwork", "seed": _seed_repr(seed), "pairing": pairing}
    return Circuit(n, tuple(out), registers={"main": (0, n - 1)}, metadata=meta)


def _seed_repr(seed) -> int | list | None:
    if isinstance(seed, np.random.SeedSequence):
        return list(seed.entropy) if isinstance(seed.entropy, (list, tuple)) else seed.entropy
    if isinstance(seed, np.integer):
        return int(seed)
    return seed


# ---------------------------------------------------------------------------
# Amplified majority-vote construction


def majority_gate(vote_qubits: Sequence[int], out_qubit: int) -> Gate:
    """Reversible gate flipping `out_qubit` iff the majority of the vote
    qubits is 1; realized as one basis permutation over all of them."""
    votes = tuple(vote_qubits)
    ell = len(votes)
    if ell % 2 == 0:
        raise ValueError("majority needs an odd number of voters")
    perm = []
    for j in range(2 ** (ell + 1)):
        v, q = j >> 1, j & 1
        if v.bit_count() > ell // 2:
            q ^= 1
        perm.append((v << 1) | q)
    return Gate("perm", (*votes, out_qubit), perm=tuple(perm))


def amplify(c_q: Circuit, copies: int) -> Circuit:
    """Run `copies` independent copies of c_q and coherently majority-vote
    their first qubits into a fresh ancilla (the last qubit)."""
    if copies < 1 or copies % 2 == 0:
        raise ValueError("copies must be odd so the majority is well-defined")
    m = c_q.n_qubits
    width = m * copies + 1
    q_maj = width - 1
    layers: list[Layer] = [
        BlockLayer(f"copy{i}", c_q, tuple(range(i * m, (i + 1) * m)))
        for i in range(copies)
    ]
    layers.append(ElementaryLayer((majority_gate([i * m for i in range(copies)], q_maj),)))
    registers = {"copies": (0, m * copies - 1), "q_maj": (q_maj, q_maj)}
    meta = {"generator": "amplify", "copies": copies, "m": m}
    return Circuit(width, tuple(layers), registers=registers, metadata=meta)


def default_depth(width: int) -> int:
    """Sufficient random-circuit depth for the advantage construction."""
    return 6 * width


def build_cnew(
    c_q: Circuit,
    n: int,
    depth: int | None = None,
    copies: int = 3,
    seed: int | np.random.SeedSequence | None = None,
    pairing: str = "brick",
) -> Circuit:
    """The detection circuit: amplified promise circuit on ancillas, an
    inverse random circuit on the main register controlled by the majority
    qubit, then the same random circuit applied openly.

    Width is n + m*copies + 1. The same seed generates both the controlled
    inverse and the trailing open layers, so on a firing control they cancel.
    """
    m = c_q.n_qubits
    width = n + m * copies + 1
    if depth is None:
        depth = default_depth(width)
    cext = amplify(c_q, copies)
    bw = random_brickwork(n, depth, pairing, seed)
    q_maj = width - 1
    layers: tuple[Layer, ...] = (
        BlockLayer("c_ext", cext, tuple(range(n, width))),
        BlockLayer("ctrl_inverse", bw.inverse(), tuple(range(n)), control=q_maj),
        *bw.layers,
    )
    registers = {
        "main": (0, n - 1),
        "ancilla": (n, width - 2),
        "q_maj": (q_maj, q_maj),
    }
    meta = {
        "generator": "cnew",
        "seed": _seed_repr(seed),
        "n": n,
        "m": m,
        "copies": copies,
        "depth": depth,
    }
    return Circuit(width, layers, registers=registers, metadata=meta)


# ---------------------------------------------------------------------------
# Promise-instance library


def promise_instance(kind: str, m: int, angle: float | None = None) -> tuple[Circuit, float]:
    """A labeled-success circuit on m qubits and its exact probability of
    measuring 1 on the first qubit from |0^m>.

    Kinds: "x" (probability 1), "identity" (0), "ry" (sin^2(angle/2)).
    """
    if kind == "x":
        gates = (Gate("X", (0,)),)
        prob = 1.0
    elif kind == "identity":
        gates = (Gate("I", (0,)),)
        prob = 0.0
    elif kind == "ry":
        if angle is None:
            raise ValueError("ry instance needs an angle")
        gates = (Gate("RY", (0,), param=float(angle)),)
        prob = math.sin(angle / 2) ** 2
    else:
        raise ValueError(f"unknown instance kind {kind!r}")
    meta = {"generator": "promise_instance", "kind": kind, "angle": angle}
    return Circuit(m, (ElementaryLayer(gates),), metadata=meta), prob


# ---------------------------------------------------------------------------
# Serialization


def _gate_to_dict(g: Gate) -> dict:
    out: dict = {"kind": g.kind, "targets": list(g.targets)}
    if g.param is not None:
        out["param"] = g.param
    if g.matrix is not None:
        out["matrix"] = [[[float(v.real), float(v.imag)] for v in row] for row in g.matrix]
    if g.perm is not None:
        out["perm"] = list(g.perm)
    return out


def _layer_to_dict(layer: Layer) -> dict:
    if isinstance(layer, ElementaryLayer):
        return {"type": "elementary", "gates": [_gate_to_dict(g) for g in layer.gates]}
    out = {
        "type": "block",
        "name": layer.name,
        "targets": list(layer.targets),
        "circuit": serialize(layer.circuit),
    }
    if layer.control is not None:
        out["control"] = layer.control
    return out


def serialize(c: Circuit) -> dict:
    return {
        "version": CIRCUIT_FORMAT_VERSION,
        "n_qubits": c.n_qubits,
        "endianness": ENDIANNESS,
        "registers": {k: list(v) for k, v in c.registers.items()},
        "layers": [_layer_to_dict(l) for l in c.layers],
        "metadata": c.metadata,
    }


def serialize_json(c: Circuit, indent: int | None = 2) -> str:
    return json.dumps(serialize(c), indent=indent, sort_keys=True)


def _parse_gate(obj: dict, path: str) -> Gate:
    try:
        kind = obj["kind"]
        targets = tuple(obj["targets"])
        matrix = None
        if "matrix" in obj:
            matrix = np.array(
                [[complex(re, im) for re, im in row] for row in obj["matrix"]]
            )
        perm = tuple(obj["perm"]) if "perm" in obj else None
        return Gate(kind, targets, param=obj.get("param"), matrix=matrix, perm=perm)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_layer(obj: dict, path: str) -> Layer:
    kind = obj.get("type")
    if kind == "elementary":
        gates = tuple(
            _parse_gate(g, f"{path}.gates[{i}]") for i, g in enumerate(obj.get("gates", []))
        )
        try:
            return ElementaryLayer(gates)
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    if kind == "block":
        sub = _parse_circuit(obj.get("circuit", {}), f"{path}.circuit")
        try:
            return BlockLayer(
                obj.get("name", "block"),
                sub,
                tuple(obj["targets"]),
                control=obj.get("control"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}.type: expected 'elementary' or 'block', got {kind!r}")


def _parse_circuit(obj: dict, path: str) -> Circuit:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected an object")
    if "n_qubits" not in obj:
        raise SchemaError(f"{path}.n_qubits: missing")
    if obj.get("version", CIRCUIT_FORMAT_VERSION) != CIRCUIT_FORMAT_VERSION:
        raise SchemaError(f"{path}.version: unsupported version {obj['version']}")
    if obj.get("endianness", ENDIANNESS) != ENDIANNESS:
        raise SchemaError(f"{path}.endianness: expected {ENDIANNESS!r}")
    layers = tuple(
        _parse_layer(l, f"{path}.layers[{i}]") for i, l in enumerate(obj.get("layers", []))
    )
    registers = {k: (int(v[0]), int(v[1])) for k, v in obj.get("registers", {}).items()}
    try:
        return Circuit(
            int(obj["n_qubits"]), layers, registers=registers, metadata=obj.get("metadata", {})
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def deserialize(data: dict | str) -> Circuit:
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: invalid JSON ({exc})") from exc
    return _parse_circuit(data, "$")


def load_circuit(path: str) -> Circuit:
    with open(path) as fh:
        return deserialize(fh.read())


def save_circuit(c: Circuit, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_json(c))
        fh.write("\n")
