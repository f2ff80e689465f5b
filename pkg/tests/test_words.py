import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaplab.words import (
    EMPTY,
    ResourceCapError,
    concat,
    count_reduced_words,
    enumerate_reduced_words,
    invert,
    is_reduced,
    reduce_word,
    word_length,
)

letters = st.tuples(st.integers(0, 2), st.sampled_from([1, -1]))
raw_words = st.lists(letters, max_size=20).map(tuple)


def test_reduce_cancels_adjacent_inverses():
    assert reduce_word([(0, 1), (0, -1)]) == EMPTY
    assert reduce_word([(0, 1), (1, 1), (1, -1), (0, -1)]) == EMPTY
    assert reduce_word([(0, 1), (1, -1), (1, 1), (2, 1)]) == ((0, 1), (2, 1))


@given(raw_words)
def test_reduce_output_is_reduced_and_idempotent(w):
    r = reduce_word(w)
    assert is_reduced(r)
    assert reduce_word(r) == r


@given(raw_words)
def test_concat_with_inverse_is_identity(w):
    r = reduce_word(w)
    assert concat(r, invert(r)) == EMPTY
    assert concat(invert(r), r) == EMPTY


@given(raw_words, raw_words)
def test_concat_matches_reduce_of_concatenation(u, v):
    ru, rv = reduce_word(u), reduce_word(v)
    assert concat(ru, rv) == reduce_word(tuple(u) + tuple(v))


def test_invert_reverses_and_flips():
    w = ((0, 1), (1, -1), (0, 1))
    assert invert(w) == ((0, -1), (1, 1), (0, -1))
    assert word_length(w) == 3


def test_count_reduced_words_small_cases():
    # 2k(2k-1)^{n-1} for k = 2
    assert [count_reduced_words(2, n) for n in range(5)] == [1, 4, 12, 36, 108]
    assert count_reduced_words(3, 2) == 30


@pytest.mark.parametrize("n", range(1, 6))
def test_enumeration_matches_count(n):
    ws = list(enumerate_reduced_words(2, n))
    assert len(ws) == count_reduced_words(2, n)
    assert len(set(ws)) == len(ws)
    assert all(is_reduced(w) and word_length(w) == n for w in ws)


def test_enumeration_upto_mode():
    ws = list(enumerate_reduced_words(2, 3, mode="upto"))
    assert len(ws) == 1 + 4 + 12 + 36
    assert EMPTY in ws


def test_enumeration_respects_cap():
    with pytest.raises(ResourceCapError):
        next(enumerate_reduced_words(2, 20, cap=1000))
