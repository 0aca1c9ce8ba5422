import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atds.errors import ValidationError
from atds.quantizer import ClusterSequence
from atds.tokenizer import (
    UNK_ID,
    CharString,
    SubwordVocab,
    clusters_to_chars,
    dedup,
    encode,
    load_vocab,
    save_vocab,
    token_spans,
    train_subword,
)

ABC = ord("a")  # 3-char test alphabet a, b, c


def cluster_seq(indices, utt_id="u"):
    return ClusterSequence(utt_id, np.asarray(indices, dtype=np.int64))


class TestClustersToChars:
    def test_cjk_block_mapping(self):
        s = clusters_to_chars(cluster_seq([0, 1, 2]), 0x4E00, k=500)
        assert [ord(c) for c in s.chars] == [0x4E00, 0x4E01, 0x4E02]

    def test_empty(self):
        assert clusters_to_chars(cluster_seq([]), 0x4E00, k=500).chars == ""

    def test_index_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            clusters_to_chars(cluster_seq([500]), 0x4E00, k=500)

    def test_surrogate_range_rejected(self):
        with pytest.raises(ValidationError, match="surrogate"):
            clusters_to_chars(cluster_seq([0]), 0xD7FF, k=10)


class TestDedup:
    def test_collapses_runs(self):
        d = dedup(CharString("u", "aaabba"))
        assert d.chars == "aba"
        assert d.run_lengths == (3, 2, 1)

    def test_fixed_point(self):
        assert dedup(CharString("u", "abc")).chars == "abc"

    def test_empty(self):
        d = dedup(CharString("u", ""))
        assert d.chars == "" and d.run_lengths == ()

    @given(st.text(alphabet="abcd", max_size=60))
    def test_properties(self, text):
        d = dedup(CharString("u", text))
        # idempotent
        assert dedup(CharString("u", d.chars)).chars == d.chars
        # no adjacent equals
        assert all(x != y for x, y in zip(d.chars, d.chars[1:]))
        # run lengths partition the input
        assert sum(d.run_lengths) == len(text)
        # subsequence of the input
        it = iter(text)
        assert all(ch in it for ch in d.chars)


def brute_force_top_pair(strings):
    """Most frequent adjacent pair, ties to lexicographically smallest."""
    counts = {}
    for s in strings:
        for pair in zip(s, s[1:]):
            counts[pair] = counts.get(pair, 0) + 1
    if not counts:
        return None, 0
    best = max(counts.values())
    return min(p for p, c in counts.items() if c == best), best


class TestTrainSubword:
    def test_hand_traced_merge_sequence(self):
        corpus = [CharString("u1", "abab"), CharString("u2", "abc")]
        vocab = train_subword(corpus, vocab_size=50, k=3, base_codepoint=ABC,
                              min_pair_count=1)
        # first merge (a,b) has count 3; then ("ab","ab") count 1 beats
        # ("ab","c") count 1 by the lexicographic tie rule
        assert vocab.merges[:2] == (("a", "b"), ("ab", "ab"))
        assert vocab.merges == (("a", "b"), ("ab", "ab"), ("ab", "c"))
        # first two picks confirmed by an independent pair counter
        assert brute_force_top_pair(["abab", "abc"]) == (("a", "b"), 3)
        assert brute_force_top_pair([["ab", "ab"], ["ab", "c"]]) == (("ab", "ab"), 1)

    def test_min_pair_count_default_stops_at_singletons(self):
        corpus = [CharString("u1", "abab"), CharString("u2", "abc")]
        vocab = train_subword(corpus, vocab_size=50, k=3, base_codepoint=ABC)
        assert vocab.merges == (("a", "b"),)

    def test_no_merges_when_vocab_is_alphabet(self):
        corpus = [CharString("u", "abcabc")]
        vocab = train_subword(corpus, vocab_size=4, k=3, base_codepoint=ABC)
        assert vocab.merges == ()
        assert vocab.tokens == ("<unk>", "a", "b", "c")

    def test_vocab_size_below_alphabet_rejected(self):
        with pytest.raises(ValidationError):
            train_subword([CharString("u", "ab")], vocab_size=3, k=3,
                          base_codepoint=ABC)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            train_subword([], vocab_size=10, k=3, base_codepoint=ABC)

    def test_unseen_alphabet_chars_still_in_vocab(self):
        vocab = train_subword([CharString("u", "aa")], vocab_size=10, k=3,
                              base_codepoint=ABC)
        assert "b" in vocab.tokens and "c" in vocab.tokens

    def test_merges_do_not_cross_utterances(self):
        # "ab" only occurs across the utterance boundary, never within
        corpus = [CharString("u1", "ca"), CharString("u2", "bc"),
                  CharString("u3", "ca"), CharString("u4", "bc")]
        vocab = train_subword(corpus, vocab_size=50, k=3, base_codepoint=ABC,
                              min_pair_count=1)
        assert ("a", "b") not in vocab.merges

    def test_deterministic(self):
        corpus = [CharString(f"u{i}", "abcabacbc" * (i + 1)) for i in range(4)]
        a = train_subword(corpus, 12, 3, ABC)
        b = train_subword(corpus, 12, 3, ABC)
        assert a == b

    def test_structural_audit(self):
        corpus = [CharString(f"u{i}", s) for i, s in
                  enumerate(["abcabc", "aabbcc", "cabcab", "abcba"])]
        vocab = train_subword(corpus, 20, 3, ABC, min_pair_count=1)
        assert len(vocab.tokens) <= 20
        for m, (left, right) in enumerate(vocab.merges):
            assert vocab.tokens[vocab.k + 1 + m] == left + right


class TestEncode:
    def test_zero_merge_vocab_yields_chars(self):
        vocab = train_subword([CharString("u", "abc")], 4, 3, ABC)
        ids = encode(vocab, CharString("x", "abc")).ids
        assert [vocab.tokens[i] for i in ids] == ["a", "b", "c"]

    def test_single_merge_replay(self):
        vocab = SubwordVocab(
            k=3, base_codepoint=ABC, merges=(("a", "b"),),
            tokens=("<unk>", "a", "b", "c", "ab"),
        )
        ids = encode(vocab, CharString("x", "abc")).ids
        assert [vocab.tokens[i] for i in ids] == ["ab", "c"]

    def test_out_of_alphabet_maps_to_unk(self):
        vocab = train_subword([CharString("u", "abc")], 10, 3, ABC)
        ids = encode(vocab, CharString("x", "aZb")).ids
        assert ids[1] == UNK_ID

    @settings(max_examples=20, deadline=None)
    @given(
        corpus_texts=st.lists(st.text(alphabet="abcd", min_size=1, max_size=40),
                              min_size=1, max_size=8),
        probe=st.text(alphabet="abcd", max_size=50),
        vocab_size=st.integers(5, 30),
    )
    def test_lossless_roundtrip(self, corpus_texts, probe, vocab_size):
        corpus = [CharString(f"u{i}", t) for i, t in enumerate(corpus_texts)]
        vocab = train_subword(corpus, vocab_size, k=4, base_codepoint=ABC,
                              min_pair_count=1)
        ids = encode(vocab, CharString("p", probe)).ids
        assert "".join(vocab.tokens[i] for i in ids) == probe


class TestTokenSpans:
    def test_two_char_token_span(self):
        vocab = SubwordVocab(
            k=3, base_codepoint=ABC, merges=(("a", "b"),),
            tokens=("<unk>", "a", "b", "c", "ab"),
        )
        seq = encode(vocab, CharString("u", "ab"))
        # cluster runs: 'a' for 2 frames, 'b' for 1 frame
        spans = token_spans(seq, (2, 1), vocab, frame_rate_hz=49.0)
        assert len(spans) == 1
        assert spans[0].start_s == 0.0
        assert spans[0].end_s == pytest.approx(3 / 49)

    def test_single_run_offsets(self):
        vocab = train_subword([CharString("u", "abc")], 4, 3, ABC)
        seq = encode(vocab, CharString("u", "ab"))
        spans = token_spans(seq, (10, 1), vocab, 49.0)
        assert spans[1].start_s == pytest.approx(10 / 49)
        assert spans[1].end_s == pytest.approx(11 / 49)

    def test_empty_sequence(self):
        vocab = train_subword([CharString("u", "abc")], 4, 3, ABC)
        assert token_spans(encode(vocab, CharString("u", "")), (), vocab) == []

    def test_inconsistent_run_lengths(self):
        vocab = train_subword([CharString("u", "abc")], 4, 3, ABC)
        seq = encode(vocab, CharString("u", "ab"))
        with pytest.raises(ValidationError):
            token_spans(seq, (1,), vocab)

    @given(st.text(alphabet="abc", max_size=30))
    def test_spans_tile_the_utterance(self, text):
        vocab = train_subword([CharString("u", "abcabc")], 8, 3, ABC,
                              min_pair_count=1)
        raw = CharString("u", text)
        d = dedup(raw)
        seq = encode(vocab, d)
        spans = token_spans(seq, d.run_lengths, vocab, 49.0)
        pos = 0.0
        for span in spans:
            assert span.start_s == pytest.approx(pos, abs=1e-12)
            pos = span.end_s
        assert pos == pytest.approx(len(text) / 49.0, abs=1e-9)


def test_vocab_json_roundtrip(tmp_path):
    corpus = [CharString("u", "abcabcabab")]
    vocab = train_subword(corpus, 12, 3, ABC, min_pair_count=1)
    path = tmp_path / "vocab.json"
    save_vocab(vocab, path)
    assert load_vocab(path) == vocab
