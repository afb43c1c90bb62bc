from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osdkit.codes import random_code
from osdkit.gf2 import (
    Gf2Matrix,
    NotAGeneratorError,
    compose,
    encode,
    invert_permutation,
    is_codeword,
    load_matrix,
    pack_rows,
    rank,
    save_matrix,
    systematic_form,
    unpack_rows,
)


def codeword_set(bits):
    k = bits.shape[0]
    msgs = np.array(list(product([0, 1], repeat=k)), dtype=np.int64)
    return {tuple(r) for r in (msgs @ bits.astype(np.int64) % 2)}


def test_fixed_point():
    G = Gf2Matrix([[1, 0, 1, 1], [0, 1, 0, 1]])
    Gs, pi = systematic_form(G)
    assert Gs == G
    assert np.array_equal(pi, np.arange(4))


def test_manual_reduction():
    Gs, pi = systematic_form(Gf2Matrix([[1, 1, 0], [0, 1, 1]]))
    assert Gs.bits.tolist() == [[1, 0, 1], [0, 1, 1]]
    assert np.array_equal(pi, [0, 1, 2])


def test_dependent_column_swaps_nearest_right():
    # columns 0 and 1 identical: pivot 1 must come from column 2, the nearest independent one
    G = Gf2Matrix([[1, 1, 0, 1], [0, 0, 1, 1]])
    Gs, pi = systematic_form(G)
    assert pi.tolist() == [0, 2, 1, 3]
    assert Gs.bits[:, :2].tolist() == [[1, 0], [0, 1]]


def test_transform_reproduces_reduction():
    G = random_code(20, 8, seed=3)
    Gs, pi, T = systematic_form(G, np.random.default_rng(0).permutation(20), return_transform=True)
    assert np.array_equal(T.astype(np.int64) @ G.bits[:, pi] % 2, Gs.bits)


def test_rank_deficient():
    with pytest.raises(NotAGeneratorError, match="not a generator matrix"):
        systematic_form(Gf2Matrix([[1, 0, 1], [1, 0, 1]]))


def test_encode_examples():
    Gs = Gf2Matrix([[1, 0, 1], [0, 1, 1]])
    assert encode([0, 0], Gs).tolist() == [0, 0, 0]
    assert encode([1, 0], Gs).tolist() == [1, 0, 1]
    assert encode([1, 1], Gs).tolist() == [1, 1, 0]
    with pytest.raises(ValueError):
        encode([1, 0, 1], Gs)


@given(st.integers(1, 12), st.integers(0, 20), st.integers(0, 2**31 - 1))
def test_codeword_set_preserved(k, extra, seed):
    n = k + extra
    G = random_code(n, k, seed)
    pi = np.random.default_rng(seed).permutation(n)
    Gs, pf = systematic_form(G, pi)
    assert np.array_equal(Gs.bits[:, :k], np.eye(k, dtype=np.uint8))
    assert codeword_set(Gs.bits) == codeword_set(G.bits[:, pf])


@given(st.integers(1, 32), st.integers(0, 32), st.integers(0, 2**31 - 1))
def test_idempotent_and_linear(k, extra, seed):
    n = k + extra
    Gs, _ = systematic_form(random_code(n, k, seed))
    again, pi = systematic_form(Gs)
    assert again == Gs and np.array_equal(pi, np.arange(n))
    r = np.random.default_rng(seed)
    a, b = r.integers(0, 2, (2, k), dtype=np.uint8)
    assert np.array_equal(encode(a ^ b, Gs), encode(a, Gs) ^ encode(b, Gs))
    assert np.array_equal(encode(a, Gs)[:k], a)


@given(st.integers(1, 5), st.integers(1, 150), st.integers(0, 2**31 - 1))
def test_pack_roundtrip(rows, cols, seed):
    bits = np.random.default_rng(seed).integers(0, 2, (rows, cols), dtype=np.uint8)
    p = pack_rows(bits)
    assert p.shape == (rows, (cols + 63) // 64)
    assert np.array_equal(unpack_rows(p, cols), bits)


def test_permutation_algebra(rng):
    p, q = rng.permutation(9), rng.permutation(9)
    x = rng.random(9)
    assert np.array_equal(x[compose(p, q)], x[q][p])
    assert np.array_equal(compose(p, invert_permutation(p)), np.arange(9))


def test_file_roundtrip(tmp_path):
    G = random_code(17, 5, 1)
    path = tmp_path / "g.txt"
    save_matrix(path, G)
    assert path.read_text().splitlines()[0] == "17 5"
    assert load_matrix(path) == G
    path.write_text("3 1\n10\n")
    with pytest.raises(ValueError):
        load_matrix(path)


def test_matrix_immutable():
    G = Gf2Matrix([[1, 0]])
    with pytest.raises(ValueError):
        G.bits[0, 0] = 0
    assert is_codeword([1, 0], G) and not is_codeword([0, 1], G)
    assert rank([[1, 1], [1, 1]]) == 1
