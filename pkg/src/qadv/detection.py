"""Advantage-detection experiments: heuristic-vs-exact comparison over
sampled inputs, the Frobenius-decay Monte Carlo, and labeled instance
suites with confusion counts."""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import circuits, statevector
from .errors import PromiseViolation
from .propagation import PropagationConfig, backpropagate, evaluate_product_state, z_first

#: A heuristic and an exact value disagree when they differ by at least this.
DISAGREEMENT_GAP = 1.0 / 3.0


def circuit_id(c: circuits.Circuit) -> str:
    blob = circuits.serialize_json(c, indent=None).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class InputRecord:
    x: str
    exact: float
    heuristic: float
    difference: float


@dataclass(frozen=True)
class DetectionReport:
    circuit_id: str
    s: int
    k: int
    seed: int | None
    records: tuple[InputRecord, ...]
    disagree_fraction: float
    verdict: str  # "advantage" iff disagree_fraction > 1/2, else "no-advantage"
    promise_violated: bool  # disagree_fraction strictly inside (1/3, 2/3)
    heuristic_norm: float  # normalized squared Frobenius norm of O_0

    def to_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "s": self.s,
            "k": self.k,
            "seed": self.seed,
            "disagree_fraction": self.disagree_fraction,
            "verdict": self.verdict,
            "promise_violated": self.promise_violated,
            "heuristic_norm": self.heuristic_norm,
            "records": [
                {
                    "x": r.x,
                    "exact": r.exact,
                    "heuristic": r.heuristic,
                    "difference": r.difference,
                }
                for r in self.records
            ],
        }


def detect(
    c: circuits.Circuit,
    s: int = 32,
    k: int = 1,
    seed: int | np.random.SeedSequence | None = None,
    shots: int | None = None,
    cfg: PropagationConfig | None = None,
) -> DetectionReport:
    """Sample s uniform inputs over the main register, compare the exact
    first-qubit expectation against the weight-k heuristic, and classify.

    The exact side is 1 - 2*C(x) from the statevector oracle; passing
    `shots` switches it to an empirical estimate from that many Bernoulli
    draws per input, matching the repeated-measurement procedure. One
    backward propagation serves every sampled input.
    """
    if s < 1:
        raise ValueError("sample count must be at least 1")
    cfg = cfg or PropagationConfig(k=k)
    if cfg.k != k:
        raise ValueError("k disagrees with the supplied PropagationConfig")
    rng = np.random.default_rng(seed)
    lo, hi = c.input_register()
    width = hi - lo + 1

    o0 = backpropagate(c, z_first(c.n_qubits), cfg)

    records = []
    for _ in range(s):
        x = "".join(str(int(b)) for b in rng.integers(0, 2, size=width))
        prob = statevector.output_prob(c, x)
        if shots is not None:
            prob = rng.binomial(shots, prob) / shots
        exact = 1.0 - 2.0 * prob
        full = ["0"] * c.n_qubits
        full[lo : hi + 1] = list(x)
        heur = evaluate_product_state(o0, "".join(full))
        records.append(InputRecord(x, exact, heur, abs(exact - heur)))

    disagree = sum(r.difference >= DISAGREEMENT_GAP for r in records) / s
    return DetectionReport(
        circuit_id=circuit_id(c),
        s=s,
        k=k,
        seed=seed if isinstance(seed, int) else None,
        records=tuple(records),
        disagree_fraction=disagree,
        verdict="advantage" if disagree > 0.5 else "no-advantage",
        promise_violated=DISAGREEMENT_GAP < disagree < 1.0 - DISAGREEMENT_GAP,
        heuristic_norm=o0.frobenius_normalized(),
    )


# ---------------------------------------------------------------------------
# Frobenius-decay Monte Carlo


@dataclass(frozen=True)
class DecayResult:
    n: int
    layers: int
    trials: int
    seed: int | None
    layer_means: tuple[float, ...]  # index j = after j layer steps; [0] = 1
    ratios: tuple[float, ...]  # ratios[j] = layer_means[j+1] / layer_means[j]
    final_mean: float
    final_stderr: float
    expected_final: float  # (2/5)^layers

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "layers": self.layers,
            "trials": self.trials,
            "seed": self.seed,
            "layer_means": list(self.layer_means),
            "ratios": list(self.ratios),
            "final_mean": self.final_mean,
            "final_stderr": self.final_stderr,
            "expected_final": self.expected_final,
            "expected_ratio": 0.4,
        }


def _decay_trial(args) -> list[float]:
    n, layers, ss, drop_tolerance = args
    c = circuits.random_brickwork(n, layers, pairing="brick", seed=ss)
    cfg = PropagationConfig(k=1, drop_tolerance=drop_tolerance)
    _, norms = backpropagate(c, z_first(n), cfg, record_norms=True)
    return norms


def decay_experiment(
    n: int,
    layers: int,
    trials: int,
    seed: int | None = None,
    jobs: int = 1,
    drop_tolerance: float = 1e-12,
) -> DecayResult:
    """Mean normalized norm of the k=1 heuristic observable after each
    brickwork layer, over fresh random circuits.

    Requires even n: the per-layer decay law needs every qubit covered by
    exactly one two-qubit gate per layer.
    """
    if n % 2 != 0:
        raise ValueError("decay experiment requires an even qubit count")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = base.spawn(trials)
    work = [(n, layers, ss, drop_tolerance) for ss in children]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            all_norms = list(pool.map(_decay_trial, work, chunksize=8))
    else:
        all_norms = [_decay_trial(w) for w in work]
    norms = np.array(all_norms)  # (trials, layers + 1)
    means = norms.mean(axis=0)
    ratios = tuple(float(means[j + 1] / means[j]) for j in range(layers))
    final = norms[:, -1]
    stderr = float(final.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return DecayResult(
        n=n,
        layers=layers,
        trials=trials,
        seed=seed,
        layer_means=tuple(float(v) for v in means),
        ratios=ratios,
        final_mean=float(final.mean()),
        final_stderr=stderr,
        expected_final=0.4**layers,
    )


# ---------------------------------------------------------------------------
# Labeled instance suites


@dataclass(frozen=True)
class PromiseInstance:
    name: str
    label: str  # "YES" or "NO"
    circuit: circuits.Circuit
    claimed_probability: float


def verify_promise(inst: PromiseInstance) -> float:
    """Exact success probability of the instance; raises PromiseViolation
    when it falls in the forbidden (1/3, 2/3) band or contradicts the label."""
    prob = statevector.output_prob(inst.circuit, "0" * inst.circuit.n_qubits)
    if abs(prob - inst.claimed_probability) > 1e-9:
        raise PromiseViolation(
            f"{inst.name}: claimed probability {inst.claimed_probability} "
            f"but exact value is {prob}"
        )
    if inst.label == "YES" and prob < 2 / 3:
        raise PromiseViolation(f"{inst.name}: YES label needs probability >= 2/3, got {prob}")
    if inst.label == "NO" and prob > 1 / 3:
        raise PromiseViolation(f"{inst.name}: NO label needs probability <= 1/3, got {prob}")
    if inst.label not in ("YES", "NO"):
        raise PromiseViolation(f"{inst.name}: unknown label {inst.label!r}")
    return prob


def default_instances(
    n_yes: int, n_no: int, m: int, seed: int | None = None
) -> list[PromiseInstance]:
    """A labeled corpus: one X and one identity instance, the rest Y-rotations.

    NO-instance probabilities are kept near 0. At desk sizes a borderline
    NO instance (probability near 1/3) leaves a majority-vote residual that
    is not yet negligible and would blur the separation the suite asserts.
    """
    rng = np.random.default_rng(seed)
    out: list[PromiseInstance] = []
    for i in range(n_yes):
        if i == 0:
            circ, p = circuits.promise_instance("x", m)
        else:
            target = rng.uniform(5 / 6, 0.995)
            circ, p = circuits.promise_instance("ry", m, angle=2 * np.arcsin(np.sqrt(target)))
        out.append(PromiseInstance(f"yes{i:02d}", "YES", circ, p))
    for i in range(n_no):
        if i == 0:
            circ, p = circuits.promise_instance("identity", m)
        else:
            target = rng.uniform(0.002, 0.05)
            circ, p = circuits.promise_instance("ry", m, angle=2 * np.arcsin(np.sqrt(target)))
        out.append(PromiseInstance(f"no{i:02d}", "NO", circ, p))
    return out


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    label: str
    exact_probability: float
    report: DetectionReport
    correct: bool
    markov_outlier: bool


@dataclass(frozen=True)
class SuiteResult:
    entries: tuple[SuiteEntry, ...]
    confusion: dict[str, int]
    correct: int
    total: int

    def to_dict(self) -> dict:
        return {
            "correct": self.correct,
            "total": self.total,
            "confusion": self.confusion,
            "entries": [
                {
                    "name": e.name,
                    "label": e.label,
                    "exact_probability": e.exact_probability,
                    "correct": e.correct,
                    "markov_outlier": e.markov_outlier,
                    "report": e.report.to_dict(),
                }
                for e in self.entries
            ],
        }


def _suite_entry(args) -> SuiteEntry:
    inst, n, depth, copies, s, k, ss, drop_tolerance = args
    prob = verify_promise(inst)
    u_seed, detect_seed = ss.spawn(2)
    cnew = circuits.build_cnew(inst.circuit, n=n, depth=depth, copies=copies, seed=u_seed)
    cfg = PropagationConfig(k=k, drop_tolerance=drop_tolerance)
    report = detect(cnew, s=s, k=k, seed=detect_seed, cfg=cfg)
    expected = "advantage" if inst.label == "YES" else "no-advantage"
    # Markov budget on the final heuristic norm: exceeded for at most a
    # 2^-n fraction of random circuits; an exceedance is flagged, not fatal.
    budget = 0.4**depth * 2**n
    return SuiteEntry(
        name=inst.name,
        label=inst.label,
        exact_probability=prob,
        report=report,
        correct=report.verdict == expected,
        markov_outlier=report.heuristic_norm > budget,
    )


def instance_suite(
    instances: Sequence[PromiseInstance],
    n: int,
    depth: int | None = None,
    copies: int = 3,
    s: int = 32,
    k: int = 1,
    seed: int | None = None,
    jobs: int = 1,
    drop_tolerance: float = 1e-12,
) -> SuiteResult:
    """Verify labels, build one detection circuit per instance with a fresh
    random-circuit seed, run detect, and tally verdict-vs-label counts."""
    for inst in instances:
        verify_promise(inst)
    if instances and depth is None:
        m = instances[0].circuit.n_qubits
        depth = circuits.default_depth(n + m * copies + 1)
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = base.spawn(len(instances))
    work = [
        (inst, n, depth, copies, s, k, ss, drop_tolerance)
        for inst, ss in zip(instances, children)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = tuple(pool.map(_suite_entry, work))
    else:
        entries = tuple(_suite_entry(w) for w in work)
    confusion: dict[str, int] = {}
    for e in entries:
        key = f"{e.label}:{e.report.verdict}"
        confusion[key] = confusion.get(key, 0) + 1
    correct = sum(e.correct for e in entries)
    return SuiteResult(entries=entries, confusion=confusion, correct=correct, total=len(entries))
