"""Synthetic diachronic corpora with planted semantic change.

Words belong to one of two topics, and each topic is split into
clusters. A sentence picks a topic and a cluster, then draws mostly
from that cluster, sometimes from the rest of the topic, and sometimes
from shared function words. Pseudo-target words live in a home cluster
in the earlier corpus. In the later corpus a changed target moves a
fraction ``magnitude`` of its usages into a cluster of the other topic.
Unchanged targets keep their distribution (magnitude 0).
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, TargetSet


@dataclass
class DriftConfig:
    tokens: int = 200_000
    clusters_per_topic: int = 8
    words_per_cluster: int = 20
    function_words: int = 30
    sentence_length: int = 12
    n_targets: int = 20
    n_changed: int = 10
    target_occurrences: int = 150
    p_cluster: float = 0.6
    p_topic: float = 0.25
    min_magnitude: float = 0.4
    seed: int = 0


@dataclass
class DriftTruth:
    changed: dict[str, int]
    magnitude: dict[str, float]
    home: dict[str, int]
    away: dict[str, int]


class DriftModel:
    def __init__(self, config: DriftConfig | None = None):
        self.config = cfg = config or DriftConfig()
        self.n_clusters = 2 * cfg.clusters_per_topic
        self.cluster_words = [
            [f"w{c}_{i}" for i in range(cfg.words_per_cluster)] for c in range(self.n_clusters)
        ]
        self.function = [f"f{i}" for i in range(cfg.function_words)]
        ranks = np.arange(1, cfg.words_per_cluster + 1)
        self.zipf = (1 / ranks) / (1 / ranks).sum()
        rng = np.random.default_rng([cfg.seed, 0])
        targets = [f"target{i}" for i in range(cfg.n_targets)]
        changed = set(rng.choice(cfg.n_targets, cfg.n_changed, replace=False).tolist())
        home, away, magnitude = {}, {}, {}
        for i, t in enumerate(targets):
            home[t] = int(rng.integers(self.n_clusters))
            topic = home[t] // cfg.clusters_per_topic
            other = 1 - topic
            away[t] = other * cfg.clusters_per_topic + int(rng.integers(cfg.clusters_per_topic))
            magnitude[t] = float(rng.uniform(cfg.min_magnitude, 1.0)) if i in changed else 0.0
        self.targets = TargetSet(targets)
        self.truth = DriftTruth(
            {t: int(magnitude[t] > 0) for t in targets}, magnitude, home, away
        )

    def _topic_of(self, cluster):
        return cluster // self.config.clusters_per_topic

    def _sentence(self, rng, cluster):
        cfg = self.config
        topic = self._topic_of(cluster)
        out = []
        for _ in range(cfg.sentence_length):
            u = rng.random()
            if u < cfg.p_cluster:
                c = cluster
            elif u < cfg.p_cluster + cfg.p_topic:
                c = topic * cfg.clusters_per_topic + int(rng.integers(cfg.clusters_per_topic))
            else:
                out.append(self.function[int(rng.integers(len(self.function)))])
                continue
            out.append(self.cluster_words[c][int(rng.choice(cfg.words_per_cluster, p=self.zipf))])
        return out

    def corpus(self, period: int) -> Corpus:
        """Sample the earlier (``period=1``) or later (``period=2``) corpus."""
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, period])
        sentences = []
        for t in self.targets:
            for _ in range(cfg.target_occurrences):
                moved = period == 2 and rng.random() < self.truth.magnitude[t]
                sent = self._sentence(rng, self.truth.away[t] if moved else self.truth.home[t])
                sent[int(rng.integers(len(sent)))] = t
                sentences.append(sent)
        n_background = max(0, cfg.tokens // cfg.sentence_length - len(sentences))
        for _ in range(n_background):
            sentences.append(self._sentence(rng, int(rng.integers(self.n_clusters))))
        order = rng.permutation(len(sentences))
        return Corpus([sentences[i] for i in order], f"C{period}")


def drift_corpora(config: DriftConfig | None = None):
    """Returns ``(corpus1, corpus2, targets, truth)``."""
    model = DriftModel(config)
    return model.corpus(1), model.corpus(2), model.targets, model.truth


def write_corpus(corpus: Corpus, path):
    """One sentence per line; gzipped when ``path`` ends in ``.gz``."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wt", encoding="utf-8") as fh:
        for sent in corpus.sentences:
            fh.write(" ".join(sent) + "\n")


def write_targets(targets, path):
    with open(path, "w", encoding="utf-8") as fh:
        for w in targets:
            fh.write(w + "\n")
