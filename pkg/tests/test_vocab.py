"""Vocabulary counting and pretrained-table loading."""
import io
import logging

import numpy as np
import pytest

from dualpointer.conll import Sentence, Token
from dualpointer.vocab import UNKNOWN_ID, build_vocab, load_pretrained


def sent(words, heads=None):
    heads = heads or [0] + [1] * (len(words) - 1)
    return Sentence([Token(i + 1, w, None, h) for i, (w, h) in enumerate(zip(words, heads))])


def test_counts():
    v = build_vocab([sent(["a", "a", "b"])])
    assert v.frequency(v.lookup("a")) == 2
    assert v.frequency(v.lookup("b")) == 1


def test_unseen_maps_to_unknown():
    v = build_vocab([sent(["a", "b", "c"])])
    assert v.lookup("zzz") == UNKNOWN_ID
    assert "zzz" not in v


def test_lookup_is_lowercased():
    v = build_vocab([sent(["The", "the", "cat"])])
    assert v.lookup("THE") == v.lookup("the")
    assert v.frequency(v.lookup("the")) == 2


def test_size_counts_distinct_lowercased_forms_plus_reserved():
    corpus = [
        sent(["The", "cat", "sat"]),
        sent(["the", "dog", "sat"]),
        sent(["A", "cat", "ran"]),
    ]
    # distinct lowercased: the, cat, sat, dog, a, ran = 6
    v = build_vocab(corpus)
    assert len(v) == 6 + 1


def test_frequencies_sum_to_token_count():
    corpus = [sent(["a", "b", "a"]), sent(["c", "b"])]
    v = build_vocab(corpus)
    assert sum(v.counts) == 5


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        build_vocab([])


def test_every_nonreserved_frequency_positive():
    v = build_vocab([sent(["x", "y"])])
    assert all(c >= 1 for c in v.counts[1:])
    assert v.counts[UNKNOWN_ID] == 0


EMB = "hello 0.1 0.2 0.3\nworld -1.0 0.0 1.0\n"


class TestPretrained:
    def test_basic_load(self):
        t = load_pretrained(io.StringIO(EMB))
        assert t.dim == 3
        assert t.size == 3  # two words + unknown row
        np.testing.assert_allclose(t.weights.data[t.row_of("hello")], [0.1, 0.2, 0.3])

    def test_header_tolerated(self):
        t = load_pretrained(io.StringIO("2 3\n" + EMB))
        assert t.dim == 3 and t.size == 3

    def test_unknown_row_zero_and_trainable(self):
        t = load_pretrained(io.StringIO(EMB))
        np.testing.assert_array_equal(t.weights.data[UNKNOWN_ID], np.zeros(3))
        assert t.weights.requires_grad

    def test_raw_then_lowercase_lookup(self):
        t = load_pretrained(io.StringIO("Paris 1 1\nparis 2 2\nLondon 3 3\n"))
        assert t.row_of("Paris") != t.row_of("paris")
        # raw miss, lowercase miss: "london" itself is not in the table
        assert t.row_of("LONDON") == UNKNOWN_ID

    def test_case_fallback(self):
        t = load_pretrained(io.StringIO("london 3 3\n"))
        assert t.row_of("London") == t.row_of("london")

    def test_oov_gets_unknown_row(self):
        t = load_pretrained(io.StringIO(EMB))
        assert t.row_of("missing") == UNKNOWN_ID

    def test_dimension_mismatch_names_line(self):
        bad = "a 1 2 3\nb 1 2 3\nc 1 2\n"
        with pytest.raises(ValueError, match="line 3"):
            load_pretrained(io.StringIO(bad))

    def test_duplicate_last_wins_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            t = load_pretrained(io.StringIO("a 1 1\na 2 2\n"))
        assert "duplicate" in caplog.text
        np.testing.assert_allclose(t.weights.data[t.row_of("a")], [2.0, 2.0])
        assert t.size == 2

    def test_empty_file_rejected(self):
        with pytest.raises(ValueError):
            load_pretrained(io.StringIO(""))
