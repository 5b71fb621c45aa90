"""Skip-gram with negative sampling.

The training loop follows the reference word2vec trainer: dynamic window
(effective radius drawn uniformly from 1..window), frequent-word
subsampling with keep probability ``sqrt(t / f(w))``, noise distribution
proportional to ``count ** 0.75`` and a learning rate decaying linearly
over all epochs. The center word's input vector predicts each context
word's output vector; only input vectors are exported.

With ``workers=1`` and a fixed seed the result is bit-reproducible. With
more workers sentence chunks are trained in parallel with unsynchronized
(hogwild) updates to the shared matrices.
"""

from __future__ import annotations

import logging
import math
from array import array
from dataclasses import asdict, dataclass

import numba
import numpy as np
from numba import njit, prange

from .corpus import Corpus, Vocabulary, build_vocabulary
from .errors import ConfigError
from .space import EmbeddingSpace

log = logging.getLogger(__name__)

# TBB in this image is too old for numba; skip straight to the others.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@dataclass
class SgnsConfig:
    dim: int = 100
    epochs: int = 5
    negatives: int = 5
    window: int = 5
    min_count: int = 5
    initial_lr: float = 0.025
    final_lr: float = 1e-4
    subsample_t: float = 1e-3
    seed: int = 1
    workers: int = 1
    shuffle: bool = False
    ns_exponent: float = 0.75

    def validate(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.negatives < 0:
            raise ConfigError(f"negatives must be >= 0, got {self.negatives}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        if not self.initial_lr > self.final_lr > 0:
            raise ConfigError("learning rates must satisfy initial_lr > final_lr > 0")
        if self.subsample_t < 0:
            raise ConfigError("subsample_t must be >= 0 (0 disables subsampling)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def to_dict(self):
        return asdict(self)


# Submission setting: 100 dimensions, 5 epochs, 5 negatives, window 5, min count 5.
SUBMISSION_CONFIG = SgnsConfig(dim=100, epochs=5, negatives=5, window=5, min_count=5)


@njit(inline="always")
def _next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(inline="always")
def _uniform(state):
    state, z = _next(state)
    return state, float(z >> _S11) * _INV53


@njit(cache=True)
def _seed_state(seed, stream):
    state = np.uint64(seed) * _MIX1 + np.uint64(stream) * _GOLDEN
    state, z = _next(state)
    return z


@njit(cache=True)
def _init_vectors(n, dim, seed):
    out = np.empty((n, dim), dtype=np.float32)
    half = 0.5 / dim
    for i in range(n):
        state = _seed_state(seed, i)
        for d in range(dim):
            state, u = _uniform(state)
            out[i, d] = (u - 0.5) * 2.0 * half
    return out


@njit(inline="always")
def _draw(cum_table, state):
    state, u = _uniform(state)
    j = np.searchsorted(cum_table, u, side="right")
    if j >= cum_table.shape[0]:
        j = cum_table.shape[0] - 1
    return state, j


@njit(cache=True)
def _draw_many(cum_table, n, seed):
    out = np.empty(n, dtype=np.int64)
    state = _seed_state(seed, 0)
    for i in range(n):
        state, out[i] = _draw(cum_table, state)
    return out


@njit(inline="always")
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True)
def _train_sentences(
    tokens, starts, s_begin, s_end, order, syn0, syn1, cum_table, keep_prob,
    window, negatives, lr0, lr1, done_base, done_scale, total, state,
):
    dim = syn0.shape[1]
    neu1e = np.empty(dim, dtype=np.float32)
    buf = np.empty(0, dtype=np.int32)
    loss = 0.0
    pairs = 0
    done = 0
    for si in range(s_begin, s_end):
        s = order[si]
        a = starts[s]
        b = starts[s + 1]
        if buf.shape[0] < b - a:
            buf = np.empty(b - a, dtype=np.int32)
        m = 0
        for p in range(a, b):
            w = tokens[p]
            keep = True
            if keep_prob[w] < 1.0:
                state, u = _uniform(state)
                keep = u < keep_prob[w]
            if keep:
                buf[m] = w
                m += 1
        progress = (done_base + done * done_scale) / total
        if progress > 1.0:
            progress = 1.0
        lr = lr0 - (lr0 - lr1) * progress
        done += b - a
        for i in range(m):
            center = buf[i]
            state, z = _next(state)
            reduced = np.int64(z % np.uint64(window))
            radius = window - reduced
            lo = i - radius
            if lo < 0:
                lo = 0
            hi = i + radius + 1
            if hi > m:
                hi = m
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = buf[j]
                for d in range(dim):
                    neu1e[d] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        target = ctx
                        label = 1.0
                    else:
                        state, target = _draw(cum_table, state)
                        if target == ctx:
                            continue
                        label = 0.0
                    f = 0.0
                    for d in range(dim):
                        f += syn0[center, d] * syn1[target, d]
                    if label > 0.0:
                        loss -= _log_sigmoid(f)
                    else:
                        loss -= _log_sigmoid(-f)
                    g = (label - 1.0 / (1.0 + math.exp(-f))) * lr
                    for d in range(dim):
                        neu1e[d] += g * syn1[target, d]
                        syn1[target, d] += g * syn0[center, d]
                for d in range(dim):
                    syn0[center, d] += neu1e[d]
                pairs += 1
    return loss, pairs, done, state


@njit(cache=True, parallel=True)
def _train_parallel(
    tokens, starts, bounds, order, syn0, syn1, cum_table, keep_prob,
    window, negatives, lr0, lr1, done_base, total, seed, epoch,
):
    nchunks = bounds.shape[0] - 1
    losses = np.zeros(nchunks)
    counts = np.zeros(nchunks, dtype=np.int64)
    for c in prange(nchunks):
        state = _seed_state(seed, np.uint64(epoch) * np.uint64(1000003) + np.uint64(c) + np.uint64(1))
        loss, pairs, done, state = _train_sentences(
            tokens, starts, bounds[c], bounds[c + 1], order, syn0, syn1, cum_table, keep_prob,
            window, negatives, lr0, lr1, done_base, float(nchunks), total, state,
        )
        losses[c] = loss
        counts[c] = pairs
    return losses.sum(), counts.sum()


@njit(cache=True)
def _pair_loss(syn0, syn1, centers, contexts, noise):
    """Mean negative SGNS objective over fixed (center, context, noise) triples."""
    dim = syn0.shape[1]
    total = 0.0
    for i in range(centers.shape[0]):
        c = centers[i]
        f = 0.0
        for d in range(dim):
            f += syn0[c, d] * syn1[contexts[i], d]
        total -= _log_sigmoid(f)
        for k in range(noise.shape[1]):
            f = 0.0
            for d in range(dim):
                f += syn0[c, d] * syn1[noise[i, k], d]
            total -= _log_sigmoid(-f)
    return total / max(centers.shape[0], 1)


def noise_distribution(counts, exponent=0.75) -> np.ndarray:
    p = np.asarray(counts, dtype=np.float64) ** exponent
    return p / p.sum()


def noise_table(counts, exponent=0.75) -> np.ndarray:
    cum = np.cumsum(noise_distribution(counts, exponent))
    cum[-1] = 1.0
    return cum


def sample_negatives(vocab: Vocabulary, n: int, seed: int = 1, exponent: float = 0.75) -> np.ndarray:
    """Draw ``n`` word indices from the noise distribution, using the
    same sampler as the training kernel."""
    return _draw_many(noise_table(vocab.count_array(), exponent), n, seed)


def keep_probabilities(counts, t) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    if t <= 0:
        return np.ones_like(counts)
    freq = counts / counts.sum()
    return np.minimum(1.0, np.sqrt(t / freq))


def encode(corpus: Corpus, vocab: Vocabulary):
    """Integer-encode ``corpus``, dropping out-of-vocabulary tokens.

    Returns ``(tokens, starts)`` where sentence ``s`` spans
    ``tokens[starts[s]:starts[s+1]]``.
    """
    index = vocab.index
    tokens = array("i")
    starts = array("q", [0])
    for sent in corpus.sentences:
        ids = [index[w] for w in sent if w in index]
        if ids:
            tokens.extend(ids)
            starts.append(len(tokens))
    return np.frombuffer(tokens, dtype=np.int32).copy(), np.frombuffer(starts, dtype=np.int64).copy()


class SgnsTrainer:
    """Holds model state so training can proceed one epoch at a time."""

    def __init__(self, corpus: Corpus, config: SgnsConfig, vocab: Vocabulary | None = None):
        self.config = config.validate()
        self.vocab = vocab if vocab is not None else build_vocabulary(corpus, config.min_count)
        if len(self.vocab) == 0:
            raise ConfigError(
                f"no word of corpus {corpus.source_label!r} reaches min_count={config.min_count}"
            )
        self.tokens, self.starts = encode(corpus, self.vocab)
        counts = self.vocab.count_array()
        self.cum_table = noise_table(counts, config.ns_exponent)
        self.keep_prob = keep_probabilities(counts, config.subsample_t)
        seed = np.uint64(config.seed)
        self.syn0 = _init_vectors(len(self.vocab), config.dim, seed)
        self.syn1 = np.zeros((len(self.vocab), config.dim), dtype=np.float32)
        self.epoch = 0
        self.history = []
        self._state = np.uint64(_seed_state(seed, np.uint64(len(self.vocab)) + np.uint64(7919)))

    @property
    def n_sentences(self):
        return self.starts.shape[0] - 1

    def _order(self):
        order = np.arange(self.n_sentences, dtype=np.int64)
        if self.config.shuffle:
            rng = np.random.default_rng([self.config.seed, self.epoch])
            rng.shuffle(order)
        return order

    def train_epoch(self) -> float:
        cfg = self.config
        if self.epoch >= cfg.epochs:
            raise RuntimeError("all configured epochs have been trained")
        n = self.tokens.shape[0]
        total = float(n * cfg.epochs)
        base = float(n * self.epoch)
        order = self._order()
        if cfg.workers == 1:
            loss, pairs, _, self._state = _train_sentences(
                self.tokens, self.starts, 0, self.n_sentences, order, self.syn0, self.syn1,
                self.cum_table, self.keep_prob, cfg.window, cfg.negatives,
                cfg.initial_lr, cfg.final_lr, base, 1.0, total, self._state,
            )
            self._state = np.uint64(self._state)
        else:
            nchunks = min(cfg.workers, max(self.n_sentences, 1))
            bounds = np.linspace(0, self.n_sentences, nchunks + 1).astype(np.int64)
            prev = numba.get_num_threads()
            numba.set_num_threads(min(cfg.workers, numba.config.NUMBA_NUM_THREADS))
            try:
                loss, pairs = _train_parallel(
                    self.tokens, self.starts, bounds, order, self.syn0, self.syn1,
                    self.cum_table, self.keep_prob, cfg.window, cfg.negatives,
                    cfg.initial_lr, cfg.final_lr, base, total, np.uint64(cfg.seed), self.epoch,
                )
            finally:
                numba.set_num_threads(prev)
        self.epoch += 1
        mean_loss = loss / max(pairs, 1)
        self.history.append(mean_loss)
        log.info("epoch %d/%d: %d pairs, mean loss %.4f", self.epoch, cfg.epochs, pairs, mean_loss)
        return mean_loss

    def pair_loss(self, centers, contexts, noise) -> float:
        return _pair_loss(
            self.syn0, self.syn1,
            np.asarray(centers, dtype=np.int64), np.asarray(contexts, dtype=np.int64),
            np.asarray(noise, dtype=np.int64).reshape(len(centers), -1),
        )

    def space(self) -> EmbeddingSpace:
        return EmbeddingSpace(self.vocab, self.syn0.astype(np.float64))

    def run(self) -> EmbeddingSpace:
        while self.epoch < self.config.epochs:
            self.train_epoch()
        return self.space()


def train(corpus: Corpus, config: SgnsConfig | None = None, vocab: Vocabulary | None = None) -> EmbeddingSpace:
    return SgnsTrainer(corpus, config or SgnsConfig(), vocab).run()
