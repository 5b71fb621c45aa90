"""Change scores, rankings and binary verdicts for target words.

A target's degree of change is ``1 - cos(v_s, v_t)`` between its two
aligned vectors. Binary verdicts come from one of three threshold rules:

``binary_threshold``
    mean (or median) of the language's target cosines; a word changed
    iff its cosine is below it.
``global_threshold``
    the same statistic pooled over all languages.
``nearest_neighbors``
    size of the overlap between the word's ``k`` nearest neighbours in
    each aligned space; the threshold is half the second-largest
    overlap and words at or above it are unchanged.

Ties at a threshold always resolve to "unchanged".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .align import AlignedPair
from .errors import ConfigError, DegenerateVectorError, UnthresholdableError
from .space import EmbeddingSpace

log = logging.getLogger(__name__)


class ThresholdKind(str, Enum):
    BINARY = "binary_threshold"
    GLOBAL = "global_threshold"
    NEAREST_NEIGHBORS = "nearest_neighbors"


class Scope(str, Enum):
    PER_LANGUAGE = "per_language"
    GLOBAL = "global"


STATISTICS = ("mean", "median")


@dataclass(frozen=True)
class ChangeScore:
    word: str
    cosine: float
    nn_intersection: int | None = None
    missing: bool = False

    @property
    def degree(self) -> float:
        return 1.0 - self.cosine


@dataclass(frozen=True)
class ThresholdRule:
    kind: ThresholdKind
    statistic: str
    value: float
    scope: Scope = Scope.PER_LANGUAGE

    def __post_init__(self):
        if self.kind is ThresholdKind.GLOBAL and self.scope is not Scope.GLOBAL:
            raise ConfigError("global_threshold requires global scope")
        if self.kind is not ThresholdKind.GLOBAL and self.scope is not Scope.PER_LANGUAGE:
            raise ConfigError(f"{self.kind.value} requires per-language scope")

    def changed(self, score: ChangeScore, missing_changed: bool = True) -> bool:
        if score.missing:
            return missing_changed
        if self.kind is ThresholdKind.NEAREST_NEIGHBORS:
            return score.nn_intersection < self.value
        return score.cosine < self.value


@dataclass(frozen=True)
class BinaryVerdict:
    word: str
    changed: bool
    rule: ThresholdRule


def _cosine(u, v, word):
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateVectorError(word)
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def score_targets(pair: AlignedPair, targets: Sequence[str]) -> list[ChangeScore]:
    """One score per target, in target order.

    Targets missing from either aligned vocabulary are flagged and given
    the lowest cosine seen among the present targets (-1 if none are
    present), i.e. they rank as the most changed.
    """
    src, trg = pair.source_aligned, pair.target_aligned
    present = {}
    for w in targets:
        if w in src and w in trg:
            present[w] = _cosine(src.vector(w), trg.vector(w), w)
    fallback = min(present.values()) if present else -1.0
    scores = []
    for w in targets:
        if w in present:
            scores.append(ChangeScore(w, present[w]))
        else:
            log.warning("target %r missing from an aligned vocabulary; scored as changed", w)
            scores.append(ChangeScore(w, fallback, missing=True))
    return scores


def rank_targets(scores: Sequence[ChangeScore]) -> list[tuple[str, float]]:
    """``(word, degree)`` by descending degree; ties keep input order."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i].degree, i))
    return [(scores[i].word, scores[i].degree) for i in order]


def _statistic(values, statistic):
    if statistic == "mean":
        return float(np.mean(values))
    if statistic == "median":
        return float(np.median(values))
    raise ConfigError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")


def _present_cosines(scores):
    values = [s.cosine for s in scores if not s.missing]
    if not values:
        raise UnthresholdableError("every target is missing; no threshold can be computed")
    return values


def apply_rule(rule: ThresholdRule, scores, missing_changed=True) -> list[BinaryVerdict]:
    return [BinaryVerdict(s.word, rule.changed(s, missing_changed), rule) for s in scores]


def threshold_binary(scores: Sequence[ChangeScore], statistic: str = "mean", missing_changed: bool = True):
    value = _statistic(_present_cosines(scores), statistic)
    rule = ThresholdRule(ThresholdKind.BINARY, statistic, value)
    return rule, apply_rule(rule, scores, missing_changed)


def threshold_global(
    per_language: Mapping[str, Sequence[ChangeScore]],
    statistic: str = "mean",
    pooling: str = "pooled",
    missing_changed: bool = True,
):
    """One threshold for all languages.

    ``pooling="pooled"`` takes the statistic over every language's
    cosines together; ``"mean_of_means"`` averages the per-language
    statistics instead. Returns ``(rule, {language: verdicts})``.
    """
    if not per_language:
        raise UnthresholdableError("no languages given")
    if pooling == "pooled":
        pooled = [c for scores in per_language.values() for c in _present_cosines(scores)]
        value = _statistic(pooled, statistic)
    elif pooling == "mean_of_means":
        value = float(np.mean([_statistic(_present_cosines(s), statistic) for s in per_language.values()]))
    else:
        raise ConfigError(f"unknown pooling {pooling!r}")
    rule = ThresholdRule(ThresholdKind.GLOBAL, statistic, value, Scope.GLOBAL)
    return rule, {lang: apply_rule(rule, scores, missing_changed) for lang, scores in per_language.items()}


class NeighborIndex:
    """Exact cosine nearest neighbours over one space."""

    def __init__(self, space: EmbeddingSpace):
        self.space = space
        self.unit = space.normalized()

    def neighbors(self, word: str, k: int) -> list[str]:
        """The ``k`` most similar words, excluding ``word`` itself.

        Ordered by descending cosine, then ascending word index.
        """
        i = self.space.vocab.index[word]
        sims = self.unit @ self.unit[i]
        sims[i] = -np.inf
        n = sims.shape[0] - 1
        k = min(k, n)
        if k <= 0:
            return []
        kth = np.partition(sims, sims.shape[0] - k)[sims.shape[0] - k]
        cand = np.flatnonzero(sims >= kth)
        cand = cand[np.lexsort((cand, -sims[cand]))][:k]
        words = self.space.vocab.words
        return [words[j] for j in cand]


def nn_threshold(sizes: Sequence[int]) -> float:
    """Half of the second-largest intersection size (by position, so
    duplicates count separately)."""
    if len(sizes) < 2:
        raise UnthresholdableError("the nearest-neighbour rule needs at least two scored targets")
    return sorted(sizes, reverse=True)[1] / 2


def intersection_sizes(pair: AlignedPair, targets: Sequence[str], k: int = 100) -> list[int | None]:
    src, trg = pair.source_aligned, pair.target_aligned
    for space, name in ((src, "source"), (trg, "target")):
        if len(space) <= k:
            log.warning("%s space has only %d words for k=%d neighbours", name, len(space), k)
    si, ti = NeighborIndex(src), NeighborIndex(trg)
    sizes = []
    for w in targets:
        if w in src and w in trg:
            sizes.append(len(set(si.neighbors(w, k)) & set(ti.neighbors(w, k))))
        else:
            sizes.append(None)
    return sizes


def threshold_nearest_neighbors(pair: AlignedPair, targets: Sequence[str], k: int = 100, missing_changed: bool = True):
    """Returns ``(rule, verdicts, sizes)``; ``sizes[i]`` is None for a
    missing target."""
    sizes = intersection_sizes(pair, targets, k)
    return (*classify_intersections(list(targets), sizes, missing_changed), sizes)


def classify_intersections(words, sizes, missing_changed=True):
    value = nn_threshold([s for s in sizes if s is not None])
    rule = ThresholdRule(ThresholdKind.NEAREST_NEIGHBORS, "second_highest_half", value)
    scores = [
        ChangeScore(w, float("nan"), nn_intersection=s, missing=s is None) for w, s in zip(words, sizes)
    ]
    return rule, apply_rule(rule, scores, missing_changed)


def write_task1(path, verdicts: Sequence[BinaryVerdict]):
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(f"{v.word}\t{int(v.changed)}\n")


def write_task2(path, scores: Sequence[ChangeScore]):
    """Degrees in target input order, six decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in scores:
            fh.write(f"{s.word}\t{s.degree:.6f}\n")


def write_scores(path, scores: Sequence[ChangeScore]):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("word\tcosine\tdegree\tnn_intersection\tmissing\n")
        for s in scores:
            nn = "" if s.nn_intersection is None else s.nn_intersection
            fh.write(f"{s.word}\t{s.cosine!r}\t{s.degree!r}\t{nn}\t{int(s.missing)}\n")


def read_scores(path) -> list[ChangeScore]:
    scores = []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            word, cos, _, nn, missing = line.rstrip("\n").split("\t")
            scores.append(ChangeScore(word, float(cos), int(nn) if nn else None, bool(int(missing))))
    return scores
