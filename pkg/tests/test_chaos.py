import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaos_swr import eval_chaos, eval_chaos_batch, from_dense, symmetric_part
from chaos_swr.oracle import balanced_array
from conftest import random_matrix


def _loop(A, s):
    a = A.entries
    n = len(s)
    return sum(s[i] * s[j] * a[i, j] for i in range(n) for j in range(n) if i != j)


def test_zero_matrix():
    assert eval_chaos(from_dense(np.zeros((4, 4))), [1, -1, 1, -1]) == 0


def test_pair_balanced(pair2):
    assert eval_chaos(pair2, [1, -1]) == -2
    assert eval_chaos(pair2, [-1, 1]) == -2


def test_ones_balanced(ones4):
    for s in balanced_array(4):
        assert eval_chaos(ones4, s) == -4


def test_length_mismatch(ones4):
    with pytest.raises(ValueError):
        eval_chaos(ones4, [1, -1])
    with pytest.raises(ValueError):
        eval_chaos_batch(ones4, [[1, -1, 1, -1], [1, -1]])


def test_batch_examples(ones4):
    assert eval_chaos_batch(ones4, []).size == 0
    assert eval_chaos_batch(ones4, balanced_array(4)).tolist() == [-4.0] * 6


def test_batch_matches_loop():
    rng = np.random.default_rng(0)
    A = random_matrix(7, 1)
    S = rng.choice([-1, 1], size=(40, 7))
    batch = eval_chaos_batch(A, S)
    for s, v in zip(S, batch):
        assert v == pytest.approx(_loop(A, s), rel=1e-12, abs=1e-12)
        assert v == pytest.approx(eval_chaos(A, s), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10), data=st.data())
def test_chaos_properties(seed, n, data):
    A = random_matrix(n, seed)
    B = random_matrix(n, seed + 1)
    s = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    z = eval_chaos(A, s)
    scale = np.abs(A.entries).sum() + np.abs(B.entries).sum()
    assert eval_chaos(A + B, s) == pytest.approx(z + eval_chaos(B, s), rel=1e-12, abs=1e-12 * scale)
    assert eval_chaos(A, -s) == pytest.approx(z, rel=1e-12, abs=1e-12 * scale)
    assert eval_chaos(symmetric_part(A), s) == pytest.approx(z, rel=1e-12, abs=1e-12 * scale)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
@pytest.mark.parametrize("M", [1.0, -2.5, 0.3])
def test_constant_matrix(n, M):
    A = from_dense(np.full((n, n), M))
    for s in balanced_array(n):
        assert eval_chaos(A, s) == pytest.approx(-n * M, rel=1e-14)
