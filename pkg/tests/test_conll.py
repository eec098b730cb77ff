"""Treebank reader/writer: column handling, error lines, round trips."""
import io

import pytest

from dualpointer.conll import ConllError, Sentence, Token, read_conll, write_conll

TWO_TOKENS = (
    "1\tdogs\t_\tNOUN\t_\t_\t2\t_\t_\t_\n"
    "2\tbark\t_\tVERB\t_\t_\t0\t_\t_\t_\n"
    "\n"
)

FIXTURE = (
    "# sent_id = 1\n"
    "# text = dogs bark loudly .\n"
    "1\tdogs\tdog\tNOUN\tNNS\t_\t2\tnsubj\t_\t_\n"
    "2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t_\t_\n"
    "3\tloudly\tloudly\tADV\tRB\t_\t2\tadvmod\t_\t_\n"
    "4\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_\n"
    "\n"
    "1\tIt\tit\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n"
    "2\trains\train\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
    "\n"
)


def test_two_token_sentence():
    sents = read_conll(io.StringIO(TWO_TOKENS))
    assert len(sents) == 1
    s = sents[0]
    assert s.forms() == ["dogs", "bark"]
    assert s.gold_heads() == [2, 0]
    assert [t.pos for t in s] == ["NOUN", "VERB"]
    assert s.tokens[1].head == 0  # top


def test_empty_input():
    assert read_conll(io.StringIO("")) == []
    assert read_conll(io.StringIO("\n\n\n")) == []


def test_multiword_range_skipped():
    text = (
        "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tde\t_\tADP\t_\t_\t2\t_\t_\t_\n"
        "2\tel\t_\tDET\t_\t_\t0\t_\t_\t_\n"
        "\n"
    )
    (s,) = read_conll(io.StringIO(text))
    assert s.forms() == ["de", "el"]


def test_empty_node_skipped():
    text = (
        "1\ta\t_\tX\t_\t_\t0\t_\t_\t_\n"
        "1.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "\n"
    )
    (s,) = read_conll(io.StringIO(text))
    assert s.forms() == ["a"]


def test_pos_falls_back_to_fifth_column():
    text = "1\tword\t_\t_\tNN\t_\t0\t_\t_\t_\n\n"
    (s,) = read_conll(io.StringIO(text))
    assert s.tokens[0].pos == "NN"


def test_unannotated_head_allowed_for_parse_input():
    text = "1\tword\t_\tNOUN\t_\t_\t_\t_\t_\t_\n\n"
    (s,) = read_conll(io.StringIO(text))
    assert s.tokens[0].head is None
    assert not s.has_gold_heads()
    with pytest.raises(ValueError):
        s.gold_heads()


class TestErrors:
    def test_too_few_columns_names_line(self):
        with pytest.raises(ConllError, match="line 1"):
            read_conll(io.StringIO("1\tword\n\n"))

    def test_non_integer_head_names_line(self):
        bad = TWO_TOKENS.replace("2\tbark\t_\tVERB\t_\t_\t0", "2\tbark\t_\tVERB\t_\t_\tx")
        with pytest.raises(ConllError, match="line 2.*head"):
            read_conll(io.StringIO(bad))

    def test_head_out_of_range(self):
        bad = "1\ta\t_\tX\t_\t_\t5\t_\t_\t_\n\n"
        with pytest.raises(ConllError, match="outside"):
            read_conll(io.StringIO(bad))

    def test_self_head(self):
        bad = "1\ta\t_\tX\t_\t_\t1\t_\t_\t_\n\n"
        with pytest.raises(ConllError):
            read_conll(io.StringIO(bad))

    def test_id_out_of_sequence(self):
        bad = "1\ta\t_\tX\t_\t_\t0\t_\t_\t_\n3\tb\t_\tX\t_\t_\t1\t_\t_\t_\n\n"
        with pytest.raises(ConllError, match="sequence"):
            read_conll(io.StringIO(bad))

    def test_write_rejects_missing_head(self):
        s = Sentence([Token(1, "a", "X", None)])
        with pytest.raises(ValueError, match="no head"):
            write_conll([s], io.StringIO())


class TestRoundTrip:
    def test_read_write_byte_stable(self):
        sents = read_conll(io.StringIO(FIXTURE))
        out = io.StringIO()
        write_conll(sents, out)
        assert out.getvalue() == FIXTURE

    def test_write_read_write_byte_stable(self):
        once = io.StringIO()
        write_conll(read_conll(io.StringIO(FIXTURE)), once)
        twice = io.StringIO()
        write_conll(read_conll(io.StringIO(once.getvalue())), twice)
        assert once.getvalue() == twice.getvalue()

    def test_comments_preserved(self):
        sents = read_conll(io.StringIO(FIXTURE))
        assert sents[0].comments == ["# sent_id = 1", "# text = dogs bark loudly ."]

    def test_with_heads_replaces_column_only(self):
        (s, _) = read_conll(io.StringIO(FIXTURE))
        s2 = s.with_heads([2, 0, 2, 3])
        assert s2.gold_heads() == [2, 0, 2, 3]
        assert s2.forms() == s.forms()
        # original untouched
        assert s.gold_heads() == [2, 0, 2, 2]
        out = io.StringIO()
        write_conll([s2], out)
        assert "4\t.\t.\tPUNCT\t.\t_\t3\tpunct\t_\t_" in out.getvalue()


class TestGoldTreeCheck:
    def test_valid_tree(self):
        sents = read_conll(io.StringIO(FIXTURE))
        assert all(s.is_gold_tree() for s in sents)

    def test_two_tops_rejected(self):
        s = Sentence([Token(1, "a", None, 0), Token(2, "b", None, 0)])
        assert not s.is_gold_tree()

    def test_cycle_rejected(self):
        s = Sentence([
            Token(1, "a", None, 2),
            Token(2, "b", None, 1),
            Token(3, "c", None, 0),
        ])
        assert not s.is_gold_tree()
