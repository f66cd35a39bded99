import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadv import sq
from qadv.errors import InvariantViolation


def test_build_point_mass():
    v = sq.build([1.0, 0.0, 0.0, 0.0])
    assert v.tree[1] == pytest.approx(1.0)
    assert v.probability(0) == pytest.approx(1.0)
    assert v.query(0) == 1.0


def test_build_uniform():
    v = sq.build(np.ones(4) / 2)
    assert [v.probability(i) for i in range(4)] == pytest.approx([0.25] * 4)
    assert v.tree[2] == pytest.approx(0.5)
    assert v.tree[3] == pytest.approx(0.5)
    assert v.tree[1] == pytest.approx(1.0)


def test_build_two_entry_probs():
    v = sq.build([0.6, 0.8])
    assert v.probability(0) == pytest.approx(0.36)
    assert v.probability(1) == pytest.approx(0.64)
    v.check_tree()


def test_build_rejects_zero_vector():
    with pytest.raises(ValueError):
        sq.build(np.zeros(4))


def test_build_requires_unit_norm_unless_normalizing():
    with pytest.raises(ValueError):
        sq.build([1.0, 1.0])
    v = sq.build([1.0, 1.0], normalize=True)
    assert v.probability(0) == pytest.approx(0.5)


def test_build_pads_to_power_of_two():
    v = sq.build([0.6, 0.8, 0.0], normalize=True)
    assert v.dim == 4
    assert v.probability(3) == 0.0
    v.check_tree()


def test_sample_point_mass():
    v = sq.build([1.0, 0.0, 0.0, 0.0])
    for r in (0.0, 0.3, 0.999):
        assert sq.sample(v, r) == 0


def test_sample_uniform_cdf_walk():
    # CDF is (0.25, 0.5, 0.75, 1.0); r = 0.6 falls in the third interval
    # (index 2 counting from 0).
    v = sq.build(np.ones(4) / 2)
    assert sq.sample(v, 0.6) == 2
    assert sq.sample(v, 0.0) == 0
    assert sq.sample(v, 0.25) == 1  # tie resolves right
    assert sq.sample(v, 0.999) == 3


def test_sample_validates_range():
    v = sq.build([1.0, 0.0])
    with pytest.raises(ValueError):
        sq.sample(v, 1.0)
    with pytest.raises(ValueError):
        sq.sample(v, -0.1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_sample_matches_cdf_inverse(seed):
    rng = np.random.default_rng(seed)
    dim = int(2 ** rng.integers(1, 7))
    v = sq.build(rng.standard_normal(dim), normalize=True)
    probs = v.values**2
    cdf = np.concatenate([[0.0], np.cumsum(probs)])
    r = float(rng.random())
    i = sq.sample(v, r)
    assert cdf[i] <= r + 1e-12
    assert r < cdf[i + 1] + 1e-12
    assert probs[i] > 0
    # Purity: the same r always lands on the same index.
    assert sq.sample(v, r) == i


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_sample_many_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    v = sq.build(rng.standard_normal(16), normalize=True)
    rs = rng.random(64)
    vec = sq.sample_many(v, rs)
    assert [sq.sample(v, float(r)) for r in rs] == list(vec)


def test_empirical_tv_distance_small():
    rng = np.random.default_rng(1234)
    v = sq.build(rng.standard_normal(256), normalize=True)
    draws = sq.sample_many(v, rng.random(100_000))
    freq = np.bincount(draws, minlength=256) / 100_000
    tv = 0.5 * np.abs(freq - v.values**2).sum()
    assert tv < 0.02


# ---------------------------------------------------------------------------
# Inner-product estimator


def test_estimate_self_is_exactly_one():
    rng = np.random.default_rng(3)
    x = sq.build(rng.standard_normal(64), normalize=True)
    est = sq.inner_product_estimate(x, x.values, 100, rng)
    assert est.estimate == pytest.approx(1.0)
    assert est.stderr == pytest.approx(0.0)


def test_estimate_orthogonal_basis_vectors():
    e1 = np.zeros(4)
    e1[0] = 1.0
    e2 = np.zeros(4)
    e2[1] = 1.0
    est = sq.inner_product_estimate(sq.build(e1), e2, 50, np.random.default_rng(0))
    assert est.estimate == 0.0


def test_estimate_accuracy_and_variance_bound():
    rng = np.random.default_rng(99)
    dim, samples = 1024, 4000
    x = rng.standard_normal(dim)
    y = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    y /= np.linalg.norm(y)
    sqx = sq.build(x)
    est = sq.inner_product_estimate(sqx, y, samples, rng)
    exact = float(x @ y)
    assert abs(est.estimate - exact) <= 4 / np.sqrt(samples)
    # Var[X] = 1 - (x.y)^2 <= 1 for unit vectors.
    assert est.sample_variance <= 1.1


def test_estimate_unbiased_over_batches():
    rng = np.random.default_rng(17)
    dim = 256
    x = rng.standard_normal(dim)
    y = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    y /= np.linalg.norm(y)
    sqx = sq.build(x)
    exact = float(x @ y)
    batches = [sq.inner_product_estimate(sqx, y, 2000, rng) for _ in range(30)]
    grand = np.mean([b.estimate for b in batches])
    pooled_se = np.sqrt(np.mean([b.stderr**2 for b in batches]) / len(batches))
    assert abs(grand - exact) < 5 * pooled_se


def test_estimate_requires_unit_y():
    x = sq.build([0.6, 0.8])
    with pytest.raises(ValueError):
        sq.inner_product_estimate(x, np.array([2.0, 0.0]), 10, np.random.default_rng(0))


def test_estimate_never_divides_by_zero():
    # Padding indices carry zero probability, so they are never sampled
    # even over many draws.
    rng = np.random.default_rng(5)
    x = sq.build([0.6, 0.8, 0.0], normalize=True)
    y = np.zeros(4)
    y[0] = 1.0
    est = sq.inner_product_estimate(x, y, 5000, rng)
    assert np.isfinite(est.estimate)


def test_sqvector_accepted_as_query_side():
    rng = np.random.default_rng(7)
    x = sq.build(rng.standard_normal(32), normalize=True)
    y = sq.build(rng.standard_normal(32), normalize=True)
    est = sq.inner_product_estimate(x, y, 500, rng)
    assert abs(est.estimate - float(x.values @ y.values)) < 0.2


def test_check_tree_detects_corruption():
    v = sq.build([0.6, 0.8])
    v.tree[2] += 1e-6
    with pytest.raises(InvariantViolation):
        v.check_tree()


def test_load_vector_formats(tmp_path):
    arr = np.array([0.1, -0.2, 0.3])
    npy = tmp_path / "v.npy"
    np.save(npy, arr)
    assert np.allclose(sq.load_vector(str(npy)), arr)
    txt = tmp_path / "v.txt"
    txt.write_text("0.1 -0.2 0.3\n")
    assert np.allclose(sq.load_vector(str(txt)), arr)
    csvf = tmp_path / "v.csv"
    csvf.write_text("0.1,-0.2,0.3\n")
    assert np.allclose(sq.load_vector(str(csvf)), arr)
