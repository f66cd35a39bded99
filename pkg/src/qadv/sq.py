"""Sample-and-query access over classical vectors.

An SQVector keeps a unit-norm real vector together with a prefix-sum
binary tree over the squared entries, giving O(1) entry reads and
O(log N) draws of index i with probability values[i]^2. On top of that
sits the unbiased importance-sampling inner-product estimator
X = y_i / x_i with i ~ x_i^2, whose variance is at most 1 for unit vectors.

Boundary convention: a uniform draw r in [0, 1) selects the unique index i
with F(i-1) <= r < F(i); exact ties between r and a stored prefix resolve
to the right child. Zero-probability leaves (including power-of-two
padding) are unreachable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation

_NORM_TOL = 1e-9


class SQVector:
    """Immutable sample-and-query wrapper around a unit vector."""

    __slots__ = ("dim", "values", "tree")

    def __init__(self, dim: int, values: np.ndarray, tree: np.ndarray) -> None:
        self.dim = dim
        self.values = values
        self.tree = tree

    def query(self, i: int) -> float:
        return float(self.values[i])

    def probability(self, i: int) -> float:
        return float(self.tree[self.dim + i])

    def check_tree(self) -> None:
        """Re-verify the prefix-sum invariants in O(N)."""
        if abs(self.tree[1] - 1.0) > _NORM_TOL:
            raise InvariantViolation(f"root sum {self.tree[1]} deviates from 1")
        for node in range(1, self.dim):
            if abs(self.tree[node] - (self.tree[2 * node] + self.tree[2 * node + 1])) > 1e-12:
                raise InvariantViolation(f"node {node} does not match its children")


def build(v, normalize: bool = False) -> SQVector:
    """Build sample-and-query access in O(N); pads to a power of two."""
    values = np.asarray(v, dtype=float).reshape(-1)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise ValueError("cannot build sample access over the zero vector")
    if normalize:
        values = values / norm
    elif abs(norm - 1.0) > _NORM_TOL:
        raise ValueError(f"vector norm {norm} deviates from 1; pass normalize=True")
    dim = 1 << (len(values) - 1).bit_length()
    if dim != len(values):
        values = np.concatenate([values, np.zeros(dim - len(values))])
    tree = np.zeros(2 * dim)
    tree[dim:] = values**2
    for node in range(dim - 1, 0, -1):
        tree[node] = tree[2 * node] + tree[2 * node + 1]
    return SQVector(dim, values, tree)


def sample(sq: SQVector, r: float) -> int:
    """Index i with F(i-1) <= r < F(i); exactly log2(N) tree steps."""
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    node = 1
    while node < sq.dim:
        left = sq.tree[2 * node]
        if r < left:
            node = 2 * node
        else:
            r -= left
            node = 2 * node + 1
    return node - sq.dim


def sample_many(sq: SQVector, rs: np.ndarray) -> np.ndarray:
    """Vectorized sample() over an array of uniforms."""
    rs = np.asarray(rs, dtype=float)
    if rs.size == 0:
        return np.zeros(0, dtype=np.int64)
    if rs.min() < 0.0 or rs.max() >= 1.0:
        raise ValueError("r must lie in [0, 1)")
    r = rs.copy()
    node = np.ones(len(rs), dtype=np.int64)
    # All lanes descend in lockstep (one level per iteration), so checking
    # the first lane decides for every lane.
    while node[0] < sq.dim:
        left = sq.tree[2 * node]
        go_right = r >= left
        r -= np.where(go_right, left, 0.0)
        node = 2 * node + go_right
    return node - sq.dim


@dataclass(frozen=True)
class InnerProductEstimate:
    estimate: float
    stderr: float
    n_samples: int
    sample_variance: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "sample_variance": self.sample_variance,
        }


def inner_product_estimate(
    sq_x: SQVector,
    y,
    n_samples: int,
    rng: np.random.Generator,
) -> InnerProductEstimate:
    """Unbiased estimate of x . y from n_samples importance draws.

    y is query access to a unit vector: any indexable array (or SQVector).
    A sampled index with x_i = 0 is impossible by construction and raises.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    yv = y.values if isinstance(y, SQVector) else np.asarray(y, dtype=float)
    if abs(np.linalg.norm(yv) - 1.0) > _NORM_TOL:
        raise ValueError("query vector must have unit norm")
    if len(yv) != sq_x.dim:
        raise ValueError("vector dimensions differ")
    idx = sample_many(sq_x, rng.random(n_samples))
    xi = sq_x.values[idx]
    if np.any(xi == 0.0):
        raise InvariantViolation("sampled an index with zero probability mass")
    draws = yv[idx] / xi
    est = float(draws.mean())
    var = float(draws.var(ddof=1)) if n_samples > 1 else 0.0
    return InnerProductEstimate(
        estimate=est,
        stderr=float(np.sqrt(var / n_samples)),
        n_samples=n_samples,
        sample_variance=var,
    )


def load_vector(path: str) -> np.ndarray:
    """Read a vector from .npy or a whitespace/comma text file."""
    if path.endswith(".npy"):
        return np.load(path).reshape(-1).astype(float)
    try:
        return np.loadtxt(path).reshape(-1)
    except ValueError:
        return np.loadtxt(path, delimiter=",").reshape(-1)
