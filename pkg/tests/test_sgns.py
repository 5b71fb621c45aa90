import numpy as np
import pytest
from scipy import stats

from lscd.corpus import Corpus, Vocabulary
from lscd.errors import ConfigError
from lscd.sgns import (
    SUBMISSION_CONFIG,
    SgnsConfig,
    SgnsTrainer,
    encode,
    keep_probabilities,
    noise_distribution,
    sample_negatives,
    train,
)


def two_cluster_corpus(n=400, seed=0):
    rng = np.random.default_rng(seed)
    sents = []
    for _ in range(n):
        group = ["a", "b", "c"] if rng.random() < 0.5 else ["x", "y", "z"]
        sents.append(list(rng.choice(group, 6)))
    return Corpus(sents)


def cos(space, u, v):
    a, b = space.vector(u), space.vector(v)
    return a @ b / np.linalg.norm(a) / np.linalg.norm(b)


def test_submission_setting():
    assert (SUBMISSION_CONFIG.dim, SUBMISSION_CONFIG.epochs, SUBMISSION_CONFIG.negatives) == (100, 5, 5)
    assert (SUBMISSION_CONFIG.window, SUBMISSION_CONFIG.min_count) == (5, 5)
    assert SgnsConfig() == SUBMISSION_CONFIG


def test_cooccurring_words_end_up_closer():
    space = train(two_cluster_corpus(), SgnsConfig(dim=20, min_count=1, epochs=5, subsample_t=0))
    assert cos(space, "a", "b") > cos(space, "a", "x")
    assert cos(space, "x", "y") > cos(space, "y", "b")


def test_smallest_trainable_input():
    space = train(Corpus([["a", "b"]]), SgnsConfig(dim=8, min_count=1))
    assert space.vectors.shape == (2, 8)
    assert np.isfinite(space.vectors).all()


def test_single_worker_runs_are_bit_identical():
    corpus = two_cluster_corpus()
    cfg = SgnsConfig(dim=16, min_count=1, seed=42)
    assert np.array_equal(train(corpus, cfg).vectors, train(corpus, cfg).vectors)


def test_seed_changes_vectors():
    corpus = two_cluster_corpus()
    a = train(corpus, SgnsConfig(dim=16, min_count=1, seed=1))
    b = train(corpus, SgnsConfig(dim=16, min_count=1, seed=2))
    assert not np.array_equal(a.vectors, b.vectors)


def test_parallel_training_is_finite():
    space = train(two_cluster_corpus(), SgnsConfig(dim=16, min_count=1, workers=2))
    assert np.isfinite(space.vectors).all()
    assert cos(space, "a", "b") > cos(space, "a", "x")


def test_shuffle_flag_is_reproducible():
    corpus = two_cluster_corpus()
    cfg = SgnsConfig(dim=8, min_count=1, shuffle=True)
    assert np.array_equal(train(corpus, cfg).vectors, train(corpus, cfg).vectors)


def test_initialisation_range():
    trainer = SgnsTrainer(two_cluster_corpus(), SgnsConfig(dim=10, min_count=1))
    assert np.abs(trainer.syn0).max() <= 0.5 / 10
    assert not trainer.syn1.any()


def test_loss_does_not_increase():
    corpus = two_cluster_corpus(n=600)
    trainer = SgnsTrainer(corpus, SgnsConfig(dim=16, min_count=1, epochs=5, subsample_t=0))
    rng = np.random.default_rng(3)
    idx = trainer.vocab.index
    centers, contexts = [], []
    for sent in corpus.sentences[:200]:
        i, j = rng.choice(len(sent), 2, replace=False)
        centers.append(idx[sent[i]])
        contexts.append(idx[sent[j]])
    noise = sample_negatives(trainer.vocab, len(centers) * 5, seed=9).reshape(-1, 5)
    trainer.train_epoch()
    after_first = trainer.pair_loss(centers, contexts, noise)
    while trainer.epoch < trainer.config.epochs:
        trainer.train_epoch()
    assert trainer.pair_loss(centers, contexts, noise) <= after_first


def test_negative_sampler_matches_unigram_power():
    counts = {f"w{i}": int(5000 / (i + 1)) + 3 for i in range(40)}
    vocab = Vocabulary.from_counts(counts)
    draws = sample_negatives(vocab, 1_000_000, seed=11)
    observed = np.bincount(draws, minlength=len(vocab))
    c = vocab.count_array().astype(float)
    expected = c**0.75 / (c**0.75).sum() * len(draws)
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_noise_distribution_sums_to_one():
    p = noise_distribution([1, 10, 100])
    assert p.sum() == pytest.approx(1.0)
    assert p[2] / p[1] == pytest.approx(10**0.75)


def test_keep_probabilities():
    keep = keep_probabilities([1, 999], 1e-3)
    assert keep[0] == 1.0
    assert keep[1] == pytest.approx(np.sqrt(1e-3 / 0.999))
    assert (keep_probabilities([5, 5], 0) == 1).all()


def test_encode_drops_oov():
    corpus = Corpus([["a", "oov", "b"], ["oov"], ["b"]])
    tokens, starts = encode(corpus, Vocabulary.from_counts({"a": 1, "b": 2}))
    assert tokens.tolist() == [1, 0, 0]
    assert starts.tolist() == [0, 2, 3]


@pytest.mark.parametrize(
    "kwargs",
    [dict(dim=0), dict(epochs=0), dict(window=0), dict(negatives=-1), dict(initial_lr=1e-5), dict(final_lr=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SgnsConfig(**kwargs).validate()


def test_empty_filtered_vocabulary():
    with pytest.raises(ConfigError):
        train(Corpus([["a", "b"]]), SgnsConfig(min_count=5))
