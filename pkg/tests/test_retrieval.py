import numpy as np
import pytest

from seqblend import ContractError, concat_ensemble_embeddings, rank_of, score_catalog, top_k
from seqblend.retrieval import (
    l2_normalize,
    ranks_of_targets,
    read_score_dump,
    score_catalog_batch,
    write_score_dump,
)


def sort_oracle(scores):
    """Full sort with the shared tie rule: descending score, ascending index."""
    return sorted(range(len(scores)), key=lambda j: (-scores[j], j))


# ---------------------------------------------------------------------------
# score_catalog
# ---------------------------------------------------------------------------

def test_score_orthonormal():
    items = np.eye(2)
    sv = score_catalog(np.array([1.0, 0.0]), items)
    np.testing.assert_allclose(sv.scores, [1.0, 0.0], atol=1e-7)


def test_score_negation():
    items = np.array([[2.0, 0.0]])
    sv = score_catalog(np.array([-3.0, 0.0]), items)
    assert sv.scores[0] == pytest.approx(-1.0, abs=1e-6)


def test_score_scale_invariance():
    rng = np.random.default_rng(1)
    u = rng.normal(size=8)
    items = rng.normal(size=(20, 8))
    a = score_catalog(u, items).scores
    b = score_catalog(7.0 * u, items).scores
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-6)


def test_score_dimension_mismatch():
    with pytest.raises(ContractError):
        score_catalog(np.ones(3), np.ones((4, 5)))


def test_score_bounds():
    rng = np.random.default_rng(2)
    scores = score_catalog(rng.normal(size=16), rng.normal(size=(100, 16))).scores
    assert (np.abs(scores) <= 1.0 + 1e-5).all()


# ---------------------------------------------------------------------------
# rank_of / top_k
# ---------------------------------------------------------------------------

def test_rank_of_examples():
    assert rank_of(np.array([0.9, 0.5, 0.7]), 2) == 2
    assert rank_of(np.array([0.5, 0.5, 0.5]), 0) == 1


def test_rank_of_random_matches_oracle():
    rng = np.random.default_rng(3)
    scores = rng.normal(size=50)
    order = sort_oracle(scores)
    for target in range(50):
        assert rank_of(scores, target) == order.index(target) + 1


def test_top_k_examples():
    scores = np.zeros(10)
    scores[5] = 1.0
    assert list(top_k(scores, 1)) == [5]
    rng = np.random.default_rng(4)
    s = rng.normal(size=30)
    assert sorted(top_k(s, 30)) == list(range(30))
    assert list(top_k(s, 10)) == sort_oracle(s)[:10]


def test_rank_topk_exhaustive_small_catalogs():
    rng = np.random.default_rng(5)
    for n in range(1, 65):
        scores = rng.normal(size=n)
        if n > 2:  # inject deliberate ties
            scores[1] = scores[0]
            scores[n // 2] = scores[0]
        order = sort_oracle(scores)
        for target in range(n):
            assert rank_of(scores, target) == order.index(target) + 1
        for k in {1, min(10, n), n}:
            assert list(top_k(scores, k)) == order[:k]


def test_ranks_of_targets_vectorized_matches_scalar():
    rng = np.random.default_rng(6)
    S = rng.normal(size=(40, 25)).round(1)  # rounding forces ties
    targets = rng.integers(25, size=40)
    expected = [rank_of(S[i], targets[i]) for i in range(40)]
    np.testing.assert_array_equal(ranks_of_targets(S, targets), expected)


def test_top_k_bad_k():
    with pytest.raises(ContractError):
        top_k(np.ones(5), 0)
    with pytest.raises(ContractError):
        top_k(np.ones(5), 6)


# ---------------------------------------------------------------------------
# concat_ensemble_embeddings
# ---------------------------------------------------------------------------

def test_concat_one_dimensional_case():
    users, items = concat_ensemble_embeddings(
        np.array([[1.0]]), np.array([[1.0]]),
        np.array([[1.0], [1.0]]), np.array([[1.0], [-1.0]]),
    )
    dots = items @ users[0]
    np.testing.assert_allclose(dots, [2.0, 0.0], atol=1e-7)


def test_concat_identical_parts_reduce_to_single_model():
    rng = np.random.default_rng(7)
    u = rng.normal(size=(1, 6))
    items = rng.normal(size=(50, 6))
    users_c, items_c = concat_ensemble_embeddings(u, u, items, items)
    single = score_catalog_batch(u, items)[0]
    concat_scores = score_catalog_batch(users_c, items_c)[0]
    assert sort_oracle(concat_scores) == sort_oracle(single)


def test_concat_equivalence_with_score_sum():
    rng = np.random.default_rng(8)
    n, d1, d2 = 1000, 8, 8
    users_id = rng.normal(size=(5, d1))
    users_tx = rng.normal(size=(5, d2))
    items_id = rng.normal(size=(n, d1))
    items_tx = rng.normal(size=(n, d2))
    users_c, items_c = concat_ensemble_embeddings(users_id, users_tx, items_id, items_tx)
    concat_cos = score_catalog_batch(users_c, items_c)
    s_sum = score_catalog_batch(users_id, items_id) + score_catalog_batch(users_tx, items_tx)
    # cosine over the concatenation is exactly half the score sum
    np.testing.assert_allclose(concat_cos, s_sum / 2.0, atol=1e-6)
    for row_c, row_s in zip(concat_cos, s_sum):
        assert sort_oracle(row_c)[:100] == sort_oracle(row_s)[:100]


def test_concat_shape_validation():
    with pytest.raises(ContractError):
        concat_ensemble_embeddings(np.ones((2, 3)), np.ones((3, 3)),
                                   np.ones((4, 3)), np.ones((4, 3)))


# ---------------------------------------------------------------------------
# score dump
# ---------------------------------------------------------------------------

def test_score_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    n, k = 7, 5
    uids = tuple(f"user{i}" for i in range(n))
    targets = rng.integers(100, size=n)
    ranks = rng.integers(1, 100, size=n)
    tki = rng.integers(100, size=(n, k))
    tks = rng.normal(size=(n, k)).astype(np.float32)
    path = tmp_path / "scores.bin"
    write_score_dump(path, uids, targets, ranks, tki, tks)
    u2, t2, r2, i2, s2 = read_score_dump(path)
    assert u2 == uids
    np.testing.assert_array_equal(t2, targets)
    np.testing.assert_array_equal(r2, ranks)
    np.testing.assert_array_equal(i2, tki)
    np.testing.assert_array_equal(s2, tks)


def test_l2_normalize_zero_vector_guard():
    out = l2_normalize(np.zeros((2, 3)))
    assert np.isfinite(out).all() and (out == 0).all()
