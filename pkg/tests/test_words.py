import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_counts, naive_occurrences
from pgeneric.digits import DigitBuffer, from_text, stream_debruijn, stream_random
from pgeneric.errors import PreconditionError
from pgeneric.words import (
    SATURATION,
    OccurrenceTable,
    WindowSpec,
    count_occurrences,
    count_words,
    decode_word,
    encode_word,
    fresh_word_count,
    histogram,
)


def table_as_counter(table: OccurrenceTable) -> dict:
    exact = table.exact_counts()
    return {decode_word(int(c), table.k, table.base): int(exact[c]) for c in np.flatnonzero(exact)}


def test_encode_decode():
    assert encode_word((1, 0, 1), 2) == 5
    assert decode_word(5, 3, 2) == (1, 0, 1)
    assert decode_word(0, 4, 3) == (0, 0, 0, 0)
    with pytest.raises(PreconditionError):
        encode_word((2,), 2)


@settings(max_examples=100, deadline=None)
@given(base=st.integers(2, 40), word=st.lists(st.integers(0, 10**6), min_size=1, max_size=8))
def test_encode_decode_round_trip(base, word):
    word = tuple(d % base for d in word)
    assert decode_word(encode_word(word, base), len(word), base) == word


def test_overlap_examples():
    t = count_words(from_text("0101", 2), WindowSpec(2, 1, 3))
    assert [t.count(w) for w in [(0, 1), (1, 0), (0, 0), (1, 1)]] == [2, 1, 0, 0]
    assert count_words(from_text("1111", 2), WindowSpec(2, 1, 3)).count((1, 1)) == 3


def test_window_spec_bounds():
    buf = from_text("01010", 2)
    with pytest.raises(PreconditionError):
        count_words(buf, WindowSpec(3, 2, 3))  # needs digit 6
    count_words(buf, WindowSpec(3, 2, 2))


def test_word_length_limit():
    buf = from_text("0" * 70, 2)
    with pytest.raises(PreconditionError):
        count_words(buf, WindowSpec(63, 1, 2))
    count_words(buf, WindowSpec(62, 1, 2))


def test_random_instances_match_naive_scan():
    rng = np.random.default_rng(1)
    for _ in range(60):
        base = int(rng.integers(2, 4))
        k = int(rng.integers(1, 7))
        n = int(rng.integers(k, 800))
        digits = rng.integers(0, base, n)
        buf = DigitBuffer(base, digits)
        first = int(rng.integers(1, n - k + 2))
        count = int(rng.integers(0, n - k - first + 3))
        t = count_words(buf, WindowSpec(k, first, count))
        assert table_as_counter(t) == dict(naive_counts(digits, k, first, count))
        assert t.windows == count


@pytest.mark.parametrize("threads", [1, 3])
@pytest.mark.parametrize("representation", ["dense", "sparse"])
def test_threads_and_representations_agree(threads, representation):
    buf = stream_random(3, 11).buffer(300_000)
    spec = WindowSpec(7, 5, 299_000)
    ref = count_words(buf, spec)
    t = count_words(buf, spec, threads=threads, representation=representation)
    assert t.representation == representation
    assert np.array_equal(t.exact_counts(), ref.exact_counts())
    assert np.array_equal(histogram(t, 20).counts, histogram(ref, 20).counts)


def test_dense_cap_env_switches_to_sparse(monkeypatch):
    buf = stream_random(2, 1).buffer(5000)
    monkeypatch.setenv("PG_DENSE_CAP", "16")
    assert count_words(buf, WindowSpec(5, 1, 100)).representation == "sparse"
    assert count_words(buf, WindowSpec(4, 1, 100)).representation == "dense"


def test_saturation_ledger_is_exact():
    n = SATURATION + 500
    buf = DigitBuffer(2, np.zeros(n, dtype=np.uint8))
    t = count_words(buf, WindowSpec(1, 1, n))
    assert t.dense[0] == SATURATION
    assert t.overflow == {0: n}
    assert t.count((0,)) == n
    assert t.to_sparse().count((0,)) == n
    assert histogram(t, 3).above == 1


def test_histogram_examples():
    h = histogram(count_words(DigitBuffer(2, np.zeros(6, np.uint8)), WindowSpec(2, 1, 5)), 6)
    assert h.counts[5] == 1 and h.counts[0] == 3 and h.total == 4
    d = stream_debruijn(2, 3).buffer(10)
    h = histogram(count_words(d, WindowSpec(3, 1, 8)), 4)
    assert h.counts[1] == 8 and h.counts[0] == 0


@settings(max_examples=80, deadline=None)
@given(
    base=st.integers(2, 5),
    k=st.integers(1, 4),
    data=st.lists(st.integers(0, 4), min_size=4, max_size=300),
    j_max=st.integers(0, 10),
)
def test_histogram_partitions_words(base, k, data, j_max):
    digits = np.array([d % base for d in data])
    if len(digits) < k:
        return
    spec = WindowSpec.prefix(k, len(digits))
    for rep in ("dense", "sparse"):
        t = count_words(DigitBuffer(base, digits), spec, representation=rep)
        h = histogram(t, j_max)
        assert h.total == base**k
        assert t.present + t.absent == base**k
        assert int(t.exact_counts().sum()) == spec.count


def test_count_occurrences_examples():
    assert count_occurrences(from_text("00110", 2), (0,), 5) == 3
    assert count_occurrences(from_text("0101", 2), (0, 1), 4) == 2
    with pytest.raises(PreconditionError):
        count_occurrences(from_text("01", 2), (0, 1, 1), 2)


def test_count_occurrences_matches_oracle_and_table():
    rng = np.random.default_rng(3)
    for _ in range(50):
        base = int(rng.integers(2, 4))
        digits = rng.integers(0, base, int(rng.integers(5, 400)))
        buf = DigitBuffer(base, digits)
        k = int(rng.integers(1, 5))
        n = int(rng.integers(k, len(digits) + 1))
        word = tuple(int(v) for v in rng.integers(0, base, k))
        got = count_occurrences(buf, word, n)
        assert got == naive_occurrences(digits, word, n)
        assert got == count_words(buf, WindowSpec.prefix(k, n)).count(word)


# --- fresh words -------------------------------------------------------------

def naive_fresh(digits, k, a, m, e):
    def words(lo, hi):
        return {tuple(digits[p - 1 : p - 1 + k]) for p in range(lo, hi - k + 1)}

    return len(words(m, e) - words(a, m))


def test_fresh_words_match_definition():
    rng = np.random.default_rng(4)
    for _ in range(40):
        digits = rng.integers(0, 2, 300)
        k = int(rng.integers(1, 7))
        a = int(rng.integers(1, 100))
        m = int(rng.integers(a + 1, 200))
        e = int(rng.integers(m + 1, 302))
        assert fresh_word_count(DigitBuffer(2, digits), k, a, m, e) == naive_fresh(list(digits), k, a, m, e)


def test_copied_segment_has_no_fresh_words():
    x = stream_random(2, 8).take(400)
    digits = np.concatenate([x, x[50:150]])
    assert fresh_word_count(DigitBuffer(2, digits), 9, 1, 401, 501) == 0


def test_fresh_words_empty_range():
    buf = stream_random(2, 8).buffer(100)
    assert fresh_word_count(buf, 8, 1, 94, 100) == 0  # [94, 100) holds no full 8-window


def test_fresh_fraction_random_formula():
    buf = stream_random(2, 42).buffer(2**8)
    h = fresh_word_count(buf, 8, 2**7, 3 * 2**8 // 4, 2**8)
    assert abs(h / 2**8 - (1 - np.exp(-0.25)) * np.exp(-0.75)) < 0.1


def test_fresh_words_bounds():
    buf = stream_random(2, 8).buffer(100)
    with pytest.raises(PreconditionError):
        fresh_word_count(buf, 3, 10, 10, 20)
    with pytest.raises(PreconditionError):
        fresh_word_count(buf, 3, 1, 10, 102)
