"""Tests for normalization, splitting, tokenization, and encoding."""

import numpy as np
import pytest

from phishloc.errors import EmptyEmailError, VocabularyError
from phishloc.text import (MAX_SENTENCES, MAX_TOKENS, PAD_ID, UNK_ID, RawEmail, Vocabulary,
                           build_vocabulary, decode_row, encode_email, load_corpus_jsonl,
                           normalize_text, split_sentences, tokenize_sentence,
                           write_corpus_jsonl)


class TestNormalize:
    def test_drops_non_ascii_and_collapses(self):
        assert normalize_text("Héllo  World") == "hllo world"

    def test_fixed_point(self):
        assert normalize_text("abc") == "abc"

    def test_strips_markup(self):
        assert normalize_text("<b>Hi</b>") == "hi"

    def test_newlines_survive_as_boundaries(self):
        assert normalize_text("a   \n\n  b") == "a\nb"

    def test_empty_after_normalization(self):
        with pytest.raises(EmptyEmailError):
            normalize_text("<div>éè</div>")


class TestSplitSentences:
    def test_two_terminators(self):
        assert split_sentences("act now! your account is locked.") == \
            ["act now!", "your account is locked."]

    def test_no_terminator_whole_text(self):
        assert split_sentences("no terminator") == ["no terminator"]

    def test_three_periods(self):
        assert split_sentences("a. b. c.") == ["a.", "b.", "c."]

    def test_newline_boundary(self):
        assert split_sentences("first line\nsecond line") == ["first line", "second line"]

    def test_empty_text(self):
        with pytest.raises(EmptyEmailError):
            split_sentences("")


class TestTokenize:
    def test_reference_sentence(self):
        assert tokenize_sentence("your account has been suspended.") == \
            ["your", "account", "has", "been", "suspended", "."]

    def test_empty(self):
        assert tokenize_sentence("") == []

    def test_punctuation_split(self):
        assert tokenize_sentence("don't stop") == ["don", "'", "t", "stop"]


class TestVocabulary:
    def test_frequency_then_lexicographic(self):
        vocab = build_vocabulary([RawEmail("1", "a a b", 0)], cap=10)
        assert vocab.encode_token("a") == 2
        assert vocab.encode_token("b") == 3
        assert vocab.encode_token("<pad>") == PAD_ID
        assert vocab.encode_token("<unk>") == UNK_ID

    def test_unknown_token_maps_to_unk(self):
        vocab = build_vocabulary([RawEmail("1", "a a b", 0)], cap=10)
        assert vocab.encode_token("zebra") == UNK_ID

    def test_cap_keeps_most_frequent(self):
        vocab = build_vocabulary([RawEmail("1", "a a b c c c", 0)], cap=3)
        assert vocab.size == 3
        assert vocab.encode_token("c") == 2
        assert vocab.encode_token("a") == UNK_ID

    def test_no_tokens_errors(self):
        with pytest.raises((VocabularyError, EmptyEmailError)):
            build_vocabulary([], cap=10)

    def test_save_load_roundtrip(self, tmp_path):
        vocab = build_vocabulary([RawEmail("1", "hello world hello", 0)], cap=10)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.token_to_id == vocab.token_to_id
        # line index equals id
        lines = path.read_text().splitlines()
        assert lines[0] == "<pad>"
        assert lines[vocab.encode_token("hello")] == "hello"


class TestEncodeEmail:
    def setup_method(self):
        self.vocab = build_vocabulary(
            [RawEmail("t", "alpha beta gamma delta. epsilon zeta.", 0)], cap=100)

    def test_three_sentences_pads_rest(self):
        email = RawEmail("e", "alpha beta. gamma delta. epsilon zeta.", 0)
        tok = encode_email(email, self.vocab)
        assert tok.ids.shape == (MAX_SENTENCES, MAX_TOKENS)
        assert tok.real_sentence_count == 3
        assert np.all(tok.ids[3:] == PAD_ID)
        assert np.any(tok.ids[2] != PAD_ID)

    def test_sentence_overflow_keeps_first_hundred(self):
        email = RawEmail("e", " ".join("alpha beta." for _ in range(150)), 0)
        tok = encode_email(email, self.vocab)
        assert tok.real_sentence_count == MAX_SENTENCES

    def test_long_sentence_truncated_to_token_budget(self):
        email = RawEmail("e", " ".join(["alpha"] * 40) + ".", 0)
        tok = encode_email(email, self.vocab)
        assert np.all(tok.ids[0] != PAD_ID)
        assert tok.ids[0, -1] == self.vocab.encode_token("alpha")

    def test_deterministic(self):
        email = RawEmail("e", "alpha beta. gamma!", 0)
        a = encode_email(email, self.vocab).ids
        b = encode_email(email, self.vocab).ids
        np.testing.assert_array_equal(a, b)

    def test_roundtrip_decode(self):
        email = RawEmail("e", "alpha beta gamma. zeta epsilon.", 0)
        tok = encode_email(email, self.vocab)
        sentences = split_sentences(normalize_text(email.text))
        for row in range(tok.real_sentence_count):
            expected = tokenize_sentence(sentences[row])[:MAX_TOKENS]
            decoded = decode_row(tok.ids[row], self.vocab)
            assert len(decoded) == len(expected)
            for d, e in zip(decoded, expected):
                assert d == e or d == "<unk>"

    def test_real_count_matches_nonpad_rows(self):
        email = RawEmail("e", "alpha. beta. gamma. delta.", 0)
        tok = encode_email(email, self.vocab)
        non_pad_rows = int(np.sum(np.any(tok.ids != PAD_ID, axis=1)))
        assert tok.real_sentence_count == non_pad_rows

    def test_empty_email_propagates(self):
        with pytest.raises(EmptyEmailError):
            encode_email(RawEmail("e", "éé", 0), self.vocab)


class TestCorpusIo:
    def test_roundtrip_and_duplicate_removal(self, tmp_path):
        emails = [RawEmail("a", "hello there.", 0), RawEmail("b", "act now.", 1),
                  RawEmail("c", "hello there.", 0)]
        path = tmp_path / "corpus.jsonl"
        write_corpus_jsonl(path, emails)
        loaded = load_corpus_jsonl(path)
        assert [e.id for e in loaded] == ["a", "b"]
        assert loaded[1].label == 1

    def test_unknown_fields_ignored(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "x", "text": "hi there.", "label": 1, "extra": 42}\n')
        loaded = load_corpus_jsonl(path)
        assert loaded[0].id == "x"

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "x", "text": "hi.", "label": 3}\n')
        with pytest.raises(ValueError):
            load_corpus_jsonl(path)
