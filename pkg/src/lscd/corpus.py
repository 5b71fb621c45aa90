"""Corpus ingestion, vocabularies and corpus statistics.

Corpora are lemmatized text, one sentence per line, tokens separated by
whitespace. Tokens are kept verbatim: no case folding (German nouns keep
their capitals) and POS-suffixed targets such as ``face_nn`` are plain
strings.
"""

from __future__ import annotations

import gzip
import logging
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, CorpusEncodingError, DataError

log = logging.getLogger(__name__)


@dataclass
class Corpus:
    sentences: list[list[str]]
    source_label: str = ""

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def __len__(self):
        return len(self.sentences)

    @classmethod
    def from_lines(cls, lines: Iterable[str], source_label: str = "") -> "Corpus":
        sentences = [toks for toks in (line.split() for line in lines) if toks]
        return cls(sentences, source_label)


@dataclass
class Vocabulary:
    """Words ordered by descending count, ties broken lexicographically."""

    words: list[str]
    counts: dict[str, int]
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __iter__(self):
        return iter(self.words)

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.words == other.words and self.counts == other.counts

    def count_array(self):
        import numpy as np

        return np.array([self.counts[w] for w in self.words], dtype=np.int64)

    @classmethod
    def from_counts(cls, counts: dict[str, int], min_count: int = 1) -> "Vocabulary":
        if min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {min_count}")
        kept = [(w, c) for w, c in counts.items() if c >= min_count]
        kept.sort(key=lambda wc: (-wc[1], wc[0]))
        return cls([w for w, _ in kept], dict(kept), min_count)


@dataclass
class TargetSet:
    words: list[str]

    def __post_init__(self):
        seen = set()
        for w in self.words:
            if w in seen:
                raise DataError(f"duplicate target word {w!r}")
            seen.add(w)

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, word):
        return word in set(self.words)


def _read_lines(path) -> list[str]:
    path = Path(path)
    lines = []
    with (gzip.open if path.suffix == ".gz" else open)(path, "rb") as fh:
        for line_no, raw in enumerate(fh, 1):
            try:
                lines.append(raw.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise CorpusEncodingError(path, line_no, exc.reason) from None
    return lines


def load_corpus(path, gz: bool | None = None, source_label: str = "") -> Corpus:
    """Read a corpus file; gzip is detected from the ``.gz`` extension
    unless ``gz`` is given explicitly."""
    path = Path(path)
    if gz is None:
        gz = path.suffix == ".gz"
    opener = gzip.open if gz else open
    sentences = []
    with opener(path, "rb") as fh:
        for line_no, raw in enumerate(fh, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusEncodingError(path, line_no, exc.reason) from None
            toks = line.split()
            if toks:
                # Interning keeps large corpora to one object per word type.
                sentences.append([sys.intern(t) for t in toks])
    corpus = Corpus(sentences, source_label or path.name)
    log.info("loaded %s: %d sentences, %d tokens", path, len(corpus), corpus.token_count)
    return corpus


def load_targets(path) -> TargetSet:
    words = [line.strip() for line in _read_lines(path)]
    return TargetSet([w for w in words if w])


def count_tokens(corpus: Corpus) -> Counter:
    counts = Counter()
    for sent in corpus.sentences:
        counts.update(sent)
    return counts


def build_vocabulary(corpus: Corpus, min_count: int = 5) -> Vocabulary:
    return Vocabulary.from_counts(count_tokens(corpus), min_count)


def missing_targets(targets: TargetSet, vocab: Vocabulary) -> list[str]:
    """Targets absent from ``vocab``, in target order."""
    missing = [w for w in targets if w not in vocab]
    if missing:
        log.warning("%d target(s) missing from vocabulary: %s", len(missing), ", ".join(missing))
    return missing


def mean_target_context_size(corpus: Corpus, targets: TargetSet | Sequence[str], window: int = 5) -> float | None:
    """Mean number of tokens within +-window of each target occurrence,
    clipped at sentence boundaries.

    Returns None if no target occurs in the corpus.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    wanted = set(targets)
    total = 0
    occurrences = 0
    for sent in corpus.sentences:
        n = len(sent)
        for i, tok in enumerate(sent):
            if tok in wanted:
                total += min(i, window) + min(n - 1 - i, window)
                occurrences += 1
    if occurrences == 0:
        return None
    return total / occurrences


@dataclass
class CorpusStats:
    label: str
    sentences: int
    tokens: int
    types: int
    targets_present: int
    mean_target_context: float | None


def corpus_statistics(corpus: Corpus, targets: TargetSet | None = None, window: int = 5) -> CorpusStats:
    counts = count_tokens(corpus)
    present = 0
    ctx = None
    if targets is not None:
        present = sum(1 for w in targets if w in counts)
        ctx = mean_target_context_size(corpus, targets, window)
    return CorpusStats(corpus.source_label, len(corpus), corpus.token_count, len(counts), present, ctx)
