import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg as sla
from scipy.stats import ortho_group

from conftest import random_space
from lscd.align import (
    Direction,
    LinearMap,
    Method,
    SeedDictionary,
    SelfLearningConfig,
    align_pair,
    apply,
    build_seed_dictionary,
    cca_projections,
    fit_cca,
    fit_orthogonal,
    fit_unsupervised,
    orthogonality_error,
)
from lscd.errors import AlignmentImpossibleError, ShapeError, SingularityError
from lscd.lsc import score_targets
from lscd.space import EmbeddingSpace


def words_space(words, vectors):
    return EmbeddingSpace.from_words(words, np.asarray(vectors, dtype=float))


def identity_dict(space):
    return SeedDictionary([(w, w) for w in space.vocab.words])


def gev_correlations(a, b):
    """Canonical correlations from the symmetric generalized eigenproblem
    [[0, Cab], [Cba, 0]] v = rho [[Caa, 0], [0, Cbb]] v."""
    a = a - a.mean(0)
    b = b - b.mean(0)
    d = a.shape[1]
    c = np.cov(np.hstack([a, b]).T)
    lhs = np.zeros_like(c)
    lhs[:d, d:] = c[:d, d:]
    lhs[d:, :d] = c[d:, :d]
    rhs = np.zeros_like(c)
    rhs[:d, :d] = c[:d, :d]
    rhs[d:, d:] = c[d:, d:]
    vals = sla.eigh(lhs, rhs, eigvals_only=True)
    return np.sort(vals)[::-1][:d]


def procrustes_objective(w, x, z):
    return float(((x @ w.T - z) ** 2).sum())


# seed dictionary


def test_seed_dictionary_intersection_minus_targets():
    s = words_space(["a", "b", "t"], np.eye(3))
    t = words_space(["b", "c", "t"], np.eye(3))
    assert build_seed_dictionary(s, t, exclude=["t"]).pairs == [("b", "b")]


def test_seed_dictionary_identical_vocabularies(rng):
    s = random_space(rng, 100, 5)
    assert len(build_seed_dictionary(s, s)) == 100


def test_seed_dictionary_fully_excluded():
    s = words_space(["a", "t"], np.eye(2))
    with pytest.raises(AlignmentImpossibleError):
        build_seed_dictionary(s, s, exclude=["a", "t"])


def test_seed_dictionary_file_round_trip(tmp_path):
    d = SeedDictionary([("a", "a"), ("Haus", "Haus")])
    d.save(tmp_path / "d.tsv")
    assert SeedDictionary.load(tmp_path / "d.tsv").pairs == d.pairs


def test_seed_dictionary_rejects_duplicate_sources():
    with pytest.raises(ValueError):
        SeedDictionary([("a", "a"), ("a", "b")])


# orthogonal


def test_procrustes_exact_rotation():
    s = words_space(["p", "q"], [[1, 0], [0, 1]])
    t = words_space(["p", "q"], [[0, 1], [-1, 0]])
    w = fit_orthogonal(s, t, identity_dict(s)).matrix
    assert np.abs(w - np.array([[0, -1], [1, 0]])).max() < 1e-9


def test_procrustes_identity(rng):
    s = random_space(rng, 20, 3)
    assert np.abs(fit_orthogonal(s, s, identity_dict(s)).matrix - np.eye(3)).max() < 1e-9


def test_procrustes_beats_random_rotations(rng):
    x = rng.standard_normal((20, 3))
    z = rng.standard_normal((20, 3))
    s, t = words_space(range(20), x), words_space(range(20), z)
    best = fit_orthogonal(s, t, identity_dict(s)).matrix
    qs = ortho_group.rvs(3, size=10_000, random_state=1)
    random_objs = ((np.einsum("nd,ked->kne", x, qs) - z) ** 2).sum(axis=(1, 2))
    assert procrustes_objective(best, x, z) <= random_objs.min()


def test_procrustes_all_zero_dictionary():
    s = words_space(["a", "b"], np.zeros((2, 2)))
    with pytest.raises(SingularityError):
        fit_orthogonal(s, s, identity_dict(s))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(2, 60), st.integers(0, 2**31), st.floats(0.01, 100))
def test_procrustes_properties(dim, extra, seed, scale):
    # n > dim keeps the optimal rotation unique, so scaling can be compared.
    n = dim + extra
    rng = np.random.default_rng(seed)
    s = random_space(rng, n, dim)
    t = random_space(rng, n, dim)
    d = identity_dict(s)
    w = fit_orthogonal(s, t, d).matrix
    assert orthogonality_error(w) < 1e-6
    scaled = s.with_vectors(s.vectors * scale)
    assert np.abs(fit_orthogonal(scaled, t, d).matrix - w).max() < 1e-6


def test_procrustes_optional_preprocessing(rng):
    s = random_space(rng, 30, 4)
    r = ortho_group.rvs(4, random_state=3)
    t = s.with_vectors(s.vectors @ r.T + 5.0)
    centered = fit_orthogonal(s, t, identity_dict(s), center=True).matrix
    assert np.abs(centered - r).max() < 1e-9
    assert fit_orthogonal(s, t, identity_dict(s), normalize=True).orthogonal


# CCA


def test_cca_identical_spaces(rng):
    s = random_space(rng, 200, 6)
    m = fit_cca(s, s, identity_dict(s))
    assert np.abs(m.correlations - 1).max() < 1e-6
    assert np.abs(apply(m, s).vectors - s.vectors).max() < 1e-4
    assert not m.orthogonal and m.method is Method.CCA


def test_cca_two_correlated_dims_and_noise(rng):
    n = 5000
    shared = rng.standard_normal((n, 2))
    a = np.column_stack([shared + 0.3 * rng.standard_normal((n, 2)), rng.standard_normal(n)])
    b = np.column_stack([shared[:, ::-1] + 0.6 * rng.standard_normal((n, 2)), rng.standard_normal(n)])
    _, _, corr = cca_projections(a, b, reg=0)
    assert np.abs(corr - gev_correlations(a, b)).max() < 1e-6
    assert corr[2] < 0.1 < 0.8 < corr[1]


@pytest.mark.parametrize("seed", range(3))
def test_cca_projection_correlations_match_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((50, 4))
    b = a @ rng.standard_normal((4, 4)) + rng.standard_normal((50, 4))
    wa, wb, corr = cca_projections(a, b, reg=0)
    pa = (a - a.mean(0)) @ wa
    pb = (b - b.mean(0)) @ wb
    pearson = [np.corrcoef(pa[:, k], pb[:, k])[0, 1] for k in range(4)]
    oracle = gev_correlations(a, b)
    assert np.abs(np.array(pearson) - oracle).max() < 1e-6
    assert np.abs(corr - oracle).max() < 1e-6
    assert np.all(np.diff(corr) <= 1e-9)
    assert np.all(np.abs(corr) <= 1 + 1e-9)


def test_cca_rank_deficient_without_reg(rng):
    x = rng.standard_normal((50, 3))
    x[:, 2] = x[:, 0]
    s = words_space(range(50), x)
    with pytest.raises(SingularityError, match="reg"):
        fit_cca(s, s, identity_dict(s), reg=0)
    assert np.isfinite(fit_cca(s, s, identity_dict(s), reg=1e-6).matrix).all()


def test_cca_composition_maps_into_target_space(rng):
    s = random_space(rng, 300, 5)
    r = rng.standard_normal((5, 5))
    t = s.with_vectors(s.vectors @ r.T)
    m = fit_cca(s, t, identity_dict(s))
    assert np.abs(m.matrix - r).max() < 1e-6


# unsupervised


def test_unsupervised_recovers_planted_rotation(rng):
    s = random_space(rng, 400, 10)
    r = ortho_group.rvs(10, random_state=4)
    t = s.with_vectors(s.vectors @ r.T)
    m = fit_unsupervised(s, t)
    assert np.abs(apply(m, s).vectors - t.vectors).max() < 1e-3
    src, trg = m.info["induced"]
    assert np.mean(src == trg) * len(src) / len(s) >= 0.95


def test_unsupervised_identical_spaces_converge_fast(rng):
    s = random_space(rng, 200, 8)
    m = fit_unsupervised(s, s)
    assert m.info["iterations"] <= 2
    assert np.abs(m.matrix - np.eye(8)).max() < 1e-6


def test_unsupervised_without_shared_forms(rng):
    s = random_space(rng, 300, 6)
    r = ortho_group.rvs(6, random_state=5)
    t = EmbeddingSpace.from_words([f"other{i}" for i in range(300)], s.vectors @ r.T)
    m = fit_unsupervised(s, t, SelfLearningConfig())
    assert np.abs(m.matrix - r).max() < 1e-3


def test_unsupervised_init_too_small():
    s = words_space(["a", "b"], np.eye(3)[:2])
    t = words_space(["c", "d"], np.eye(3)[:2])
    with pytest.raises(AlignmentImpossibleError):
        fit_unsupervised(s, t)


# apply and align_pair


def test_apply_identity(rng):
    s = random_space(rng, 10, 4)
    assert np.array_equal(apply(LinearMap(np.eye(4), "orthogonal", orthogonal=True), s).vectors, s.vectors)


def test_apply_dimension_mismatch(rng):
    with pytest.raises(ShapeError):
        apply(LinearMap(np.eye(3), "cca"), random_space(rng, 5, 4))


def test_orthogonal_map_preserves_cosines(rng):
    s = random_space(rng, 50, 6)
    w = ortho_group.rvs(6, random_state=2)
    mapped = apply(LinearMap(w, "orthogonal", orthogonal=True), s)
    before = s.normalized() @ s.normalized().T
    after = mapped.normalized() @ mapped.normalized().T
    assert np.abs(before - after).max() < 1e-6


def test_alignment_reduces_dictionary_distance(rng):
    s = random_space(rng, 60, 5)
    t = s.with_vectors(s.vectors @ ortho_group.rvs(5, random_state=8).T + 0.1 * rng.standard_normal((60, 5)))
    d = identity_dict(s)
    mapped = apply(fit_orthogonal(s, t, d), s)
    before = np.linalg.norm(s.vectors - t.vectors, axis=1).mean()
    after = np.linalg.norm(mapped.vectors - t.vectors, axis=1).mean()
    assert after < before


def test_orthogonal_flag_is_enforced():
    with pytest.raises(SingularityError):
        LinearMap(2 * np.eye(3), "orthogonal", orthogonal=True)


def test_map_file_round_trip(tmp_path, rng):
    m = LinearMap(ortho_group.rvs(4, random_state=1), "orthogonal", "t_to_s", orthogonal=True)
    m.save(tmp_path / "map.txt")
    loaded = LinearMap.load(tmp_path / "map.txt")
    assert np.array_equal(loaded.matrix, m.matrix)
    assert (loaded.method, loaded.direction, loaded.orthogonal) == (Method.ORTHOGONAL, Direction.T_TO_S, True)


@pytest.mark.parametrize("direction", ["s_to_t", "t_to_s"])
def test_align_pair_identical_spaces(rng, direction):
    s = random_space(rng, 40, 5)
    pair = align_pair(s, s, "orthogonal", direction)
    assert all(abs(sc.cosine - 1) < 1e-9 for sc in score_targets(pair, s.vocab.words))


def test_align_pair_direction_labels(rng):
    s = random_space(rng, 40, 4, "w")
    t = s.with_vectors(s.vectors @ ortho_group.rvs(4, random_state=9).T)
    fwd = align_pair(s, t, "orthogonal", "s_to_t")
    rev = align_pair(s, t, "orthogonal", "t_to_s")
    assert fwd.target_aligned is t
    assert rev.source_aligned is s
    assert np.abs(rev.target_aligned.vectors - s.vectors).max() < 1e-9


def test_reversed_cca_gives_different_scores():
    rng = np.random.default_rng(21)
    n, d = 60, 4
    s = random_space(rng, n, d)
    t = s.with_vectors(s.vectors @ rng.standard_normal((d, d)) + 0.8 * rng.standard_normal((n, d)) ** 3)
    targets = s.vocab.words[:5]
    fwd = [x.cosine for x in score_targets(align_pair(s, t, "cca", "s_to_t", exclude=targets), targets)]
    rev = [x.cosine for x in score_targets(align_pair(s, t, "cca", "t_to_s", exclude=targets), targets)]
    assert np.abs(np.array(fwd) - np.array(rev)).max() > 1e-3
