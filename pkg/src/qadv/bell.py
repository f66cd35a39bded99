"""Bell-game experiments: the shared-bit socks protocol that reproduces
single-basis statistics exactly, exhaustive deterministic strategy search,
and two-qubit correlators at tunable measurement angles.

Measurement settings are basis-rotation angles in the real (X-Z) plane: a
setting t measures the observable cos(2t) Z + sin(2t) X, the +-1 observable
of the standard basis rotated by t. The shared state is (|00> + |11>)/sqrt(2).
The combination E(a0,b0) + E(a0,b1) + E(a1,b0) - E(a1,b1) is capped at 2 for
every local deterministic strategy and reaches 2*sqrt(2) quantum-mechanically.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import statevector
from .circuits import Circuit, ElementaryLayer, Gate
from .pauli import PauliMap, PauliString

#: Settings achieving the quantum maximum under this angle convention:
#: (a0, a1, b0, b1) = (0, pi/4, pi/8, -pi/8).
OPTIMAL_ANGLES = (0.0, math.pi / 4, math.pi / 8, -math.pi / 8)

TSIRELSON_BOUND = 2 * math.sqrt(2)


@dataclass(frozen=True)
class SocksStats:
    trials: int
    joint: dict[str, float]  # empirical frequencies of (alice, bob) outcomes
    alice_marginal: float  # frequency of outcome 1
    bob_marginal: float
    correlation: float  # mean of product of +-1 outcomes

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "joint": self.joint,
            "alice_marginal": self.alice_marginal,
            "bob_marginal": self.bob_marginal,
            "correlation": self.correlation,
        }


def socks_simulation(trials: int, rng: np.random.Generator) -> SocksStats:
    """Shared uniform bit, both parties report it: perfectly correlated
    uniform outcomes, the classical twin of single-basis entanglement."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    bits = rng.integers(0, 2, size=trials)
    ones = float(bits.mean())
    return SocksStats(
        trials=trials,
        joint={"00": 1.0 - ones, "01": 0.0, "10": 0.0, "11": ones},
        alice_marginal=ones,
        bob_marginal=ones,
        correlation=1.0,
    )


@functools.lru_cache(maxsize=1)
def _bell_pair() -> statevector.StateVector:
    prep = Circuit(
        2,
        (
            ElementaryLayer((Gate("H", (0,)),)),
            ElementaryLayer((Gate("CNOT", (0, 1)),)),
        ),
    )
    return statevector.apply_circuit(statevector.prepare_basis(2, "00"), prep)


def quantum_single_basis_distribution() -> dict[str, float]:
    """Joint outcome distribution when both parties measure the standard
    basis on the shared pair."""
    state = _bell_pair()
    probs = np.abs(state.amplitudes) ** 2
    return {format(i, "02b"): float(p) for i, p in enumerate(probs)}


# ---------------------------------------------------------------------------
# Classical side: exhaustive deterministic strategies

#: A deterministic local strategy: for each party, an outcome in {+1, -1}
#: per basis choice, packed as (a0, a1, b0, b1).
LocalStrategy = tuple[int, int, int, int]


def all_strategies() -> list[LocalStrategy]:
    return [s for s in product((1, -1), repeat=4)]


def strategy_value(strategy: LocalStrategy) -> int:
    a0, a1, b0, b1 = strategy
    return a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1


def strategy_table() -> list[tuple[LocalStrategy, int]]:
    return [(s, strategy_value(s)) for s in all_strategies()]


def classical_chsh_max() -> float:
    """Exhaustive maximum over all 16 deterministic strategies; shared
    randomness mixes strategies and cannot exceed it."""
    return float(max(strategy_value(s) for s in all_strategies()))


# ---------------------------------------------------------------------------
# Quantum side: correlators on the shared pair


def measurement_observable(angle: float, qubit: int, n_qubits: int = 2) -> PauliMap:
    """The +-1 observable of the standard basis rotated by `angle`."""
    z = PauliString.identity(n_qubits).with_digit(qubit, 3)
    x = PauliString.identity(n_qubits).with_digit(qubit, 1)
    return PauliMap(n_qubits, {z: math.cos(2 * angle), x: math.sin(2 * angle)})


def quantum_correlator(alpha: float, beta: float) -> float:
    """E(alpha, beta): expectation of the product observable on the pair."""
    terms: dict[PauliString, float] = {}
    a = measurement_observable(alpha, 0)
    b = measurement_observable(beta, 1)
    for pa, ca in a.terms.items():
        for pb, cb in b.terms.items():
            combined = PauliString(2, pa.x | pb.x, pa.z | pb.z)
            terms[combined] = terms.get(combined, 0.0) + ca * cb
    return statevector.expectation(_bell_pair(), PauliMap(2, terms))


def quantum_chsh_value(angles: tuple[float, float, float, float]) -> float:
    a0, a1, b0, b1 = angles
    return (
        quantum_correlator(a0, b0)
        + quantum_correlator(a0, b1)
        + quantum_correlator(a1, b0)
        - quantum_correlator(a1, b1)
    )
