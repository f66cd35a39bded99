import json
import math

import numpy as np
import pytest

from qadv import statevector as sv
from qadv.circuits import (
    BlockLayer,
    ElementaryLayer,
    amplify,
    build_cnew,
    deserialize,
    haar_two_qubit,
    majority_gate,
    promise_instance,
    random_brickwork,
    serialize_json,
)
from qadv.errors import SchemaError

from oracles import circuit_unitary


# ---------------------------------------------------------------------------
# Haar sampling


def test_haar_unitarity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = haar_two_qubit(rng)
        assert np.abs(u.conj().T @ u - np.eye(4)).max() < 1e-10


def test_haar_first_moment():
    # E |<00|U|00>|^2 = 1/d = 1/4 for Haar on dimension 4.
    rng = np.random.default_rng(1)
    vals = np.array([abs(haar_two_qubit(rng)[0, 0]) ** 2 for _ in range(100_000)])
    assert vals.mean() == pytest.approx(0.25, abs=0.005)


def test_haar_trace_moment():
    # E |Tr U|^2 = 1 for Haar, so the mean of |Tr U|^2 / 16 is 1/16.
    rng = np.random.default_rng(2)
    vals = np.array([abs(np.trace(haar_two_qubit(rng))) ** 2 / 16 for _ in range(100_000)])
    assert vals.mean() == pytest.approx(1 / 16, abs=0.003)


# ---------------------------------------------------------------------------
# Brickwork


def test_brickwork_shape():
    c = random_brickwork(4, 3, seed=0)
    assert len(c.layers) == 3
    for layer in c.layers:
        assert isinstance(layer, ElementaryLayer)
        assert len(layer.gates) == 2
        assert layer.support == frozenset(range(4))


def test_brickwork_deterministic():
    a = random_brickwork(6, 4, seed=123)
    b = random_brickwork(6, 4, seed=123)
    assert serialize_json(a) == serialize_json(b)
    c = random_brickwork(6, 4, seed=124)
    assert serialize_json(a) != serialize_json(c)


def test_brickwork_minimal():
    c = random_brickwork(2, 1, seed=5)
    assert len(c.layers) == 1
    (gate,) = c.layers[0].gates
    assert gate.targets == (0, 1)


def test_brickwork_covers_even_n_every_layer():
    for pairing in ("brick", "fixed", "random"):
        c = random_brickwork(8, 5, pairing=pairing, seed=7)
        for layer in c.layers:
            assert layer.support == frozenset(range(8))


def test_brickwork_odd_n_leaves_one_idle():
    c = random_brickwork(5, 4, seed=3)
    for layer in c.layers:
        assert len(layer.support) == 4


def test_brickwork_rejects_width_one():
    with pytest.raises(ValueError):
        random_brickwork(1, 1, seed=0)


# ---------------------------------------------------------------------------
# Majority vote and amplification


def _prob_qubit_one(state: sv.StateVector, qubit: int) -> float:
    probs = np.abs(state.amplitudes.reshape((2,) * state.n_qubits)) ** 2
    axes = tuple(i for i in range(state.n_qubits) if i != qubit)
    return float(probs.sum(axis=axes)[1])


def test_majority_gate_is_involution_on_votes():
    g = majority_gate([0, 1, 2], 3)
    u = g.unitary()
    assert np.allclose(u @ u, np.eye(16))


def test_amplify_single_copy_x():
    cq, _ = promise_instance("x", 1)
    amp = amplify(cq, 1)
    out = sv.apply_circuit(sv.prepare_basis(2, "00"), amp)
    assert _prob_qubit_one(out, 1) == pytest.approx(1.0)


def test_amplify_three_copies():
    cq, _ = promise_instance("x", 1)
    amp = amplify(cq, 3)
    assert amp.n_qubits == 4
    out = sv.apply_circuit(sv.prepare_basis(4, "0000"), amp)
    assert _prob_qubit_one(out, 3) == pytest.approx(1.0)

    ident, _ = promise_instance("identity", 1)
    out = sv.apply_circuit(sv.prepare_basis(4, "0000"), amplify(ident, 3))
    assert _prob_qubit_one(out, 3) == pytest.approx(0.0)


def test_amplify_rejects_even_copies():
    cq, _ = promise_instance("x", 1)
    with pytest.raises(ValueError):
        amplify(cq, 2)


@pytest.mark.parametrize("copies", [1, 3, 5])
def test_amplify_matches_binomial_majority(copies):
    # Per-copy success p = sin^2(angle/2); the majority-vote probability must
    # equal the exact binomial tail since copies are independent.
    angle = 2 * math.asin(math.sqrt(0.75))
    cq, p = promise_instance("ry", 1, angle=angle)
    amp = amplify(cq, copies)
    out = sv.apply_circuit(sv.prepare_basis(amp.n_qubits, "0" * amp.n_qubits), amp)
    got = _prob_qubit_one(out, amp.n_qubits - 1)
    want = sum(
        math.comb(copies, j) * p**j * (1 - p) ** (copies - j)
        for j in range(copies // 2 + 1, copies + 1)
    )
    assert got == pytest.approx(want, abs=1e-9)
    assert want >= 1 - 2 ** (-0.1 * copies)  # amplification only helps


# ---------------------------------------------------------------------------
# The detection circuit


def test_build_cnew_width_and_registers():
    cq, _ = promise_instance("x", 2)
    c = build_cnew(cq, n=4, depth=6, copies=3, seed=0)
    assert c.n_qubits == 4 + 2 * 3 + 1
    assert c.registers["main"] == (0, 3)
    assert c.registers["q_maj"] == (10, 10)
    assert c.input_register() == (0, 3)


def test_build_cnew_default_depth():
    cq, _ = promise_instance("x", 1)
    c = build_cnew(cq, n=3, copies=3, seed=0)
    assert c.metadata["depth"] == 6 * (3 + 1 * 3 + 1)
    assert len(c.layers) == 2 + 6 * 7


def test_build_cnew_zero_depth_acts_as_cext_only():
    cq, _ = promise_instance("x", 1)
    c = build_cnew(cq, n=2, depth=0, copies=1, seed=0)
    for x in ("00", "10"):
        expect = 1 - 2 * sv.output_prob(c, x)
        assert expect == pytest.approx((-1) ** int(x[0]), abs=1e-12)


def test_build_cnew_yes_instance_exact_expectation():
    cq, _ = promise_instance("x", 1)
    c = build_cnew(cq, n=3, depth=6, copies=3, seed=4)
    for x in ("000", "100", "011", "111"):
        expect = 1 - 2 * sv.output_prob(c, x)
        assert expect == pytest.approx((-1) ** int(x[0]), abs=1e-9)


def test_build_cnew_no_instance_matches_bare_random_circuit():
    cq, _ = promise_instance("identity", 1)
    c = build_cnew(cq, n=3, depth=6, copies=3, seed=4)
    bare = random_brickwork(3, 6, seed=4)
    for x in ("000", "101"):
        via_cnew = 1 - 2 * sv.output_prob(c, x)
        direct = 1 - 2 * sv.output_prob(bare, x)
        assert via_cnew == pytest.approx(direct, abs=1e-9)


def test_build_cnew_controlled_block_is_adjoint_reversed():
    cq, _ = promise_instance("x", 1)
    c = build_cnew(cq, n=4, depth=5, copies=1, seed=9)
    ctrl = c.layers[1]
    assert isinstance(ctrl, BlockLayer) and ctrl.control == c.n_qubits - 1
    trailing = c.layers[2:]
    assert len(ctrl.circuit.layers) == len(trailing)
    for inv_layer, fwd_layer in zip(ctrl.circuit.layers, reversed(trailing)):
        for gi, gf in zip(inv_layer.gates, fwd_layer.gates):
            assert gi.targets == gf.targets
            assert np.allclose(gi.matrix, gf.matrix.conj().T)


def test_build_cnew_unitary_identity_when_control_fires():
    # With the ancilla block forcing q_maj = 1, the controlled inverse and
    # the trailing layers cancel on the main register.
    cq, _ = promise_instance("x", 1)
    c = build_cnew(cq, n=2, depth=4, copies=1, seed=2)
    u = circuit_unitary(c)
    state = np.zeros(2**c.n_qubits, dtype=complex)
    state[0] = 1.0
    out = u @ state
    # q_maj fired: the main register must still be |00>; the ancilla holds |11>.
    nonzero = np.nonzero(np.abs(out) > 1e-12)[0]
    assert len(nonzero) == 1
    idx = nonzero[0]
    bits = format(idx, f"0{c.n_qubits}b")
    assert bits[:2] == "00"
    assert bits[-1] == "1"


# ---------------------------------------------------------------------------
# Promise instances


def test_promise_instance_probabilities():
    for kind, angle, want in (
        ("x", None, 1.0),
        ("identity", None, 0.0),
        ("ry", 1.0, math.sin(0.5) ** 2),
    ):
        c, p = promise_instance(kind, 2, angle=angle)
        assert p == pytest.approx(want)
        assert sv.output_prob(c, "00") == pytest.approx(want, abs=1e-12)


# ---------------------------------------------------------------------------
# Serialization


def test_round_trip_brickwork():
    c = random_brickwork(4, 3, seed=77)
    again = deserialize(serialize_json(c))
    assert serialize_json(again) == serialize_json(c)


def test_round_trip_nested_blocks_and_perm():
    cq, _ = promise_instance("ry", 1, angle=0.3)
    c = build_cnew(cq, n=2, depth=3, copies=3, seed=8)
    again = deserialize(serialize_json(c))
    assert serialize_json(again) == serialize_json(c)
    # Matrices survive the decimal round trip to full precision.
    g = c.layers[-1].gates[0]
    g2 = again.layers[-1].gates[0]
    assert np.abs(g.matrix - g2.matrix).max() < 1e-15


def test_deserialize_rejects_overlapping_supports():
    doc = {
        "version": 1,
        "n_qubits": 2,
        "layers": [
            {
                "type": "elementary",
                "gates": [
                    {"kind": "X", "targets": [0]},
                    {"kind": "H", "targets": [0]},
                ],
            }
        ],
    }
    with pytest.raises(SchemaError, match=r"layers\[0\]"):
        deserialize(doc)


def test_deserialize_rejects_non_unitary_matrix():
    doc = {
        "version": 1,
        "n_qubits": 1,
        "layers": [
            {
                "type": "elementary",
                "gates": [
                    {
                        "kind": "matrix",
                        "targets": [0],
                        "matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],
                    }
                ],
            }
        ],
    }
    with pytest.raises(SchemaError, match=r"gates\[0\]"):
        deserialize(doc)


def test_deserialize_rejects_bad_endianness():
    with pytest.raises(SchemaError, match="endianness"):
        deserialize({"version": 1, "n_qubits": 1, "endianness": "q1-lsb", "layers": []})


def test_deserialize_rejects_bad_perm():
    doc = {
        "version": 1,
        "n_qubits": 2,
        "layers": [
            {
                "type": "elementary",
                "gates": [{"kind": "perm", "targets": [0, 1], "perm": [0, 0, 1, 2]}],
            }
        ],
    }
    with pytest.raises(SchemaError, match="bijection"):
        deserialize(doc)


def test_serialized_matrices_have_full_precision():
    c = random_brickwork(2, 1, seed=1)
    text = serialize_json(c)
    doc = json.loads(text)
    entry = doc["layers"][0]["gates"][0]["matrix"][0][0]
    # json round-trips Python floats exactly (repr with up to 17 digits).
    assert entry[0] == c.layers[0].gates[0].matrix[0, 0].real
