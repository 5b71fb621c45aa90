import gzip

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lscd.corpus import (
    Corpus,
    TargetSet,
    build_vocabulary,
    corpus_statistics,
    load_corpus,
    load_targets,
    mean_target_context_size,
    missing_targets,
)
from lscd.errors import ConfigError, CorpusEncodingError, DataError


def test_load_drops_empty_lines(write_lines):
    corpus = load_corpus(write_lines("c.txt", ["a b c", "", "d e"]))
    assert corpus.sentences == [["a", "b", "c"], ["d", "e"]]
    assert corpus.token_count == 5


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_bytes(b"")
    corpus = load_corpus(path)
    assert corpus.sentences == []
    assert corpus.token_count == 0


def test_load_keeps_tokens_verbatim(write_lines):
    corpus = load_corpus(write_lines("c.txt", ["der Hund face_nn  Face"]))
    assert corpus.sentences == [["der", "Hund", "face_nn", "Face"]]


def test_load_gzip(tmp_path):
    path = tmp_path / "c.txt.gz"
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        fh.write("a b\n\nc\n")
    assert load_corpus(path).sentences == [["a", "b"], ["c"]]


def test_invalid_utf8_reports_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_bytes(b"ok line\nbad \xff byte\n")
    with pytest.raises(CorpusEncodingError) as err:
        load_corpus(path)
    assert err.value.line_no == 2


def test_missing_file():
    with pytest.raises(OSError):
        load_corpus("/nonexistent/corpus.txt")


def test_vocab_threshold():
    vocab = build_vocabulary(Corpus([["a", "a", "a", "b"]]), min_count=2)
    assert vocab.words == ["a"]
    assert vocab.counts == {"a": 3}


def test_vocab_tie_is_lexicographic():
    vocab = build_vocabulary(Corpus([["b", "a", "b", "a"]]), min_count=1)
    assert vocab.words == ["a", "b"]


def test_vocab_rejects_bad_min_count():
    with pytest.raises(ConfigError):
        build_vocabulary(Corpus([["a"]]), min_count=0)


def test_vocab_matches_counting_oracle():
    rng = np.random.default_rng(7)
    alphabet = [f"t{i}" for i in range(50)]
    tokens = list(rng.choice(alphabet, 1000))
    corpus = Corpus([tokens[i : i + 10] for i in range(0, 1000, 10)])
    vocab = build_vocabulary(corpus, min_count=5)

    tally = {}
    for tok in tokens:
        tally[tok] = tally.get(tok, 0) + 1
    expected = sorted((w for w in tally if tally[w] >= 5), key=lambda w: (-tally[w], w))
    assert vocab.words == expected
    assert vocab.counts == {w: tally[w] for w in expected}
    assert [vocab.index[w] for w in expected] == list(range(len(expected)))


sentences = st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8), max_size=30)


@given(sentences, st.integers(1, 6))
def test_vocab_invariants(sents, min_count):
    corpus = Corpus(sents)
    vocab = build_vocabulary(corpus, min_count)
    assert all(vocab.counts[w] >= min_count for w in vocab.words)
    assert sorted(vocab.index.values()) == list(range(len(vocab)))
    assert len(set(vocab.words)) == len(vocab.words)
    assert build_vocabulary(Corpus(sents), min_count).words == vocab.words
    assert sum(build_vocabulary(corpus, 1).counts.values()) == corpus.token_count
    assert set(build_vocabulary(corpus, min_count + 1).words) <= set(vocab.words)


def test_targets_keep_order_and_reject_duplicates(write_lines):
    targets = load_targets(write_lines("t.txt", ["zeta_nn", "alpha", "", "Mitte"]))
    assert targets.words == ["zeta_nn", "alpha", "Mitte"]
    with pytest.raises(DataError):
        TargetSet(["a", "a"])


def test_missing_targets_reported():
    vocab = build_vocabulary(Corpus([["a", "b"]]), 1)
    assert missing_targets(TargetSet(["b", "x", "a", "y"]), vocab) == ["x", "y"]


@pytest.mark.parametrize(
    "sentence, window, expected",
    [(["t", "a", "b"], 5, 2.0), (["a", "t", "b"], 1, 2.0), (["a", "b", "c", "t", "d"], 2, 3.0)],
)
def test_context_size(sentence, window, expected):
    assert mean_target_context_size(Corpus([sentence]), ["t"], window) == expected


def test_context_size_averages_occurrences():
    corpus = Corpus([["t", "a", "b"], ["a", "a", "t", "a", "a"]])
    assert mean_target_context_size(corpus, ["t"], 1) == pytest.approx((1 + 2) / 2)


def test_context_size_without_occurrences():
    assert mean_target_context_size(Corpus([["a", "b"]]), ["t"], 5) is None


def test_corpus_statistics():
    corpus = Corpus([["t", "a"], ["a", "b", "t"]], "C1")
    stats = corpus_statistics(corpus, TargetSet(["t", "z"]), window=5)
    assert (stats.sentences, stats.tokens, stats.types, stats.targets_present) == (2, 5, 3, 1)
    assert stats.mean_target_context == 1.5
