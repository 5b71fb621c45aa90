"""Linear mappings between two embedding spaces.

Maps act on column vectors, ``x_hat = W @ x``; for a row-per-word matrix
``X`` the mapped space is ``X @ W.T``.

Three fitting routes are provided:

* ``fit_orthogonal``: orthogonal Procrustes on a seed dictionary.
* ``fit_cca``: canonical correlation analysis projecting both spaces into
  a shared space, composed with the pseudo-inverse of the target
  projection so that only the source space moves.
* ``fit_unsupervised``: a deterministic self-learning loop alternating
  Procrustes and CSLS mutual-nearest-neighbour dictionary induction. It
  omits the stochastic dictionary dropout, frequency cutoff schedule and
  re-weighting steps of the full VecMap method.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .corpus import TargetSet
from .errors import (
    AlignmentImpossibleError,
    ConfigError,
    FormatError,
    ShapeError,
    SingularityError,
)
from .space import EmbeddingSpace

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-6
PINV_RCOND = 1e-10


class Method(str, Enum):
    CCA = "cca"
    ORTHOGONAL = "orthogonal"
    UNSUPERVISED = "unsupervised"


class Direction(str, Enum):
    S_TO_T = "s_to_t"
    T_TO_S = "t_to_s"


@dataclass
class SeedDictionary:
    pairs: list[tuple[str, str]]

    def __post_init__(self):
        sources = [s for s, _ in self.pairs]
        if len(set(sources)) != len(sources):
            raise ValueError("seed dictionary has duplicate source entries")

    def __len__(self):
        return len(self.pairs)

    @property
    def source_words(self):
        return [s for s, _ in self.pairs]

    @property
    def target_words(self):
        return [t for _, t in self.pairs]

    def check(self, source: EmbeddingSpace, target: EmbeddingSpace):
        for s, t in self.pairs:
            if s not in source or t not in target:
                raise AlignmentImpossibleError(f"dictionary pair ({s}, {t}) not in both vocabularies")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for s, t in self.pairs:
                fh.write(f"{s}\t{t}\n")

    @classmethod
    def load(cls, path) -> "SeedDictionary":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise FormatError(f"{path}: expected two tab-separated words", row=i)
                pairs.append((parts[0], parts[1]))
        return cls(pairs)


@dataclass
class LinearMap:
    matrix: np.ndarray
    method: Method
    direction: Direction = Direction.S_TO_T
    orthogonal: bool = False
    # Canonical correlations, CCA only.
    correlations: np.ndarray | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.method = Method(self.method)
        self.direction = Direction(self.direction)
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"map matrix must be square, got {m.shape}")
        if not np.isfinite(m).all():
            raise SingularityError("map matrix has non-finite entries")
        if self.orthogonal and orthogonality_error(m) >= ORTHO_TOL:
            raise SingularityError(f"map flagged orthogonal but |W'W - I| = {orthogonality_error(m):.3g}")

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, vectors):
        return np.asarray(vectors) @ self.matrix.T

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("lscd-linear-map 1\n")
            fh.write(f"method {self.method.value}\n")
            fh.write(f"direction {self.direction.value}\n")
            fh.write(f"dim {self.dim}\n")
            fh.write(f"orthogonal {int(self.orthogonal)}\n")
            for row in self.matrix:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path) -> "LinearMap":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].split() != ["lscd-linear-map", "1"]:
            raise FormatError(f"{path}: not a version-1 linear map file", row=0)
        meta = {}
        for i, line in enumerate(lines[1:5], 1):
            key, _, value = line.partition(" ")
            meta[key] = value
        try:
            dim = int(meta["dim"])
            rows = [[float(x) for x in line.split()] for line in lines[5 : 5 + dim]]
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: malformed map header or body: {exc}") from None
        for i, row in enumerate(rows):
            if len(row) != dim:
                raise FormatError(f"{path}: expected {dim} values", row=i + 1)
        if len(rows) != dim:
            raise FormatError(f"{path}: expected {dim} rows, found {len(rows)}")
        return cls(np.array(rows), meta["method"], meta["direction"], bool(int(meta["orthogonal"])))


@dataclass
class AlignedPair:
    """Both spaces in a shared coordinate system.

    ``source_aligned`` always holds the earlier corpus, whichever side
    the map was applied to.
    """

    source_aligned: EmbeddingSpace
    target_aligned: EmbeddingSpace
    map: LinearMap
    dictionary: SeedDictionary | None = None

    def __post_init__(self):
        if self.source_aligned.dim != self.target_aligned.dim:
            raise ShapeError("aligned spaces differ in dimension")


def orthogonality_error(m) -> float:
    m = np.asarray(m)
    return float(np.abs(m.T @ m - np.eye(m.shape[1])).max())


def build_seed_dictionary(source: EmbeddingSpace, target: EmbeddingSpace, exclude=()) -> SeedDictionary:
    """Identical-word pairs shared by both vocabularies, minus ``exclude``,
    in source vocabulary order."""
    if len(source) == 0 or len(target) == 0:
        raise AlignmentImpossibleError("cannot build a dictionary from an empty space")
    excluded = set(exclude)
    pairs = [(w, w) for w in source.vocab.words if w in target.vocab.index and w not in excluded]
    if not pairs:
        raise AlignmentImpossibleError(
            "seed dictionary is empty: the vocabularies share no words outside the excluded targets"
        )
    return SeedDictionary(pairs)


def _dictionary_rows(source, target, dictionary):
    dictionary.check(source, target)
    if len(dictionary) == 0:
        raise AlignmentImpossibleError("empty seed dictionary")
    if source.dim != target.dim:
        raise ShapeError(f"dimension mismatch: {source.dim} vs {target.dim}")
    return source.rows(dictionary.source_words), target.rows(dictionary.target_words)


def _unit_rows(x):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def procrustes(x, z) -> np.ndarray:
    """Orthogonal ``W`` minimising ``sum_i |W x_i - z_i|^2`` over rows of
    ``x`` and ``z``."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ShapeError(f"paired matrices differ in shape: {x.shape} vs {z.shape}")
    if not np.any(x) or not np.any(z):
        raise SingularityError("dictionary vectors are all zero; no rotation is defined")
    u, _, vt = np.linalg.svd(z.T @ x)
    return u @ vt


def fit_orthogonal(
    source: EmbeddingSpace,
    target: EmbeddingSpace,
    dictionary: SeedDictionary,
    center: bool = False,
    normalize: bool = False,
) -> LinearMap:
    x, z = _dictionary_rows(source, target, dictionary)
    if normalize:
        x, z = _unit_rows(x), _unit_rows(z)
    if center:
        x = x - x.mean(axis=0)
        z = z - z.mean(axis=0)
    return LinearMap(procrustes(x, z), Method.ORTHOGONAL, orthogonal=True)


def _inv_sqrt(c):
    vals, vecs = np.linalg.eigh(c)
    if vals.min() <= 0:
        raise SingularityError("covariance is not positive definite; use reg > 0")
    return (vecs / np.sqrt(vals)) @ vecs.T


def cca_projections(a, b, reg: float = 1e-8):
    """Canonical projections of paired row matrices ``a`` and ``b``.

    Returns ``(wa, wb, corr)`` where the columns of ``(a - mean) @ wa`` and
    ``(b - mean) @ wb`` are paired canonical variates with correlations
    ``corr``, sorted in non-increasing order.
    """
    if reg < 0:
        raise ConfigError("reg must be >= 0")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    if n < 2:
        raise AlignmentImpossibleError("CCA needs at least two dictionary pairs")
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    caa = ac.T @ ac / (n - 1)
    cbb = bc.T @ bc / (n - 1)
    cab = ac.T @ bc / (n - 1)
    if reg == 0:
        for name, c in (("source", caa), ("target", cbb)):
            vals = np.linalg.eigvalsh(c)
            if vals.min() <= 1e-12 * max(vals.max(), 1e-300):
                raise SingularityError(
                    f"{name} dictionary covariance is rank-deficient; set reg > 0 "
                    f"(or use more dictionary pairs than dimensions)"
                )
    caa[np.diag_indices_from(caa)] += reg
    cbb[np.diag_indices_from(cbb)] += reg
    ia = _inv_sqrt(caa)
    ib = _inv_sqrt(cbb)
    u, s, vt = np.linalg.svd(ia @ cab @ ib)
    return ia @ u, ib @ vt.T, s


def fit_cca(source: EmbeddingSpace, target: EmbeddingSpace, dictionary: SeedDictionary, reg: float = 1e-8) -> LinearMap:
    a, b = _dictionary_rows(source, target, dictionary)
    if len(dictionary) <= source.dim:
        log.warning("CCA dictionary has %d pairs for %d dimensions", len(dictionary), source.dim)
    wa, wb, corr = cca_projections(a, b, reg)
    # Row form: x -> x @ wa @ pinv(wb); stored transposed for column vectors.
    row_map = wa @ np.linalg.pinv(wb, rcond=PINV_RCOND)
    return LinearMap(row_map.T, Method.CCA, correlations=corr)


@dataclass
class SelfLearningConfig:
    csls_k: int = 10
    max_iter: int = 50
    tol: float = 0.01
    # Restrict induction to the most frequent words; None uses everything.
    vocab_cutoff: int | None = None
    normalize: bool = True
    sim_init_size: int = 4000
    chunk: int = 2048


def _topk_mean(sims, k):
    k = min(k, sims.shape[1])
    return np.partition(sims, sims.shape[1] - k, axis=1)[:, -k:].mean(axis=1)


def csls_mutual_neighbors(xs, zs, k=10, chunk=2048):
    """Mutual nearest neighbours under CSLS between unit-row matrices.

    Returns ``(src_idx, trg_idx, forward)`` with ``forward[i]`` the CSLS
    nearest target of source row ``i``. Ties go to the lowest index.
    """
    ns, nt = xs.shape[0], zs.shape[0]
    r_src = np.empty(ns)  # mean similarity of each source row to its target neighbourhood
    r_trg = np.empty(nt)
    for i in range(0, ns, chunk):
        r_src[i : i + chunk] = _topk_mean(xs[i : i + chunk] @ zs.T, k)
    for j in range(0, nt, chunk):
        r_trg[j : j + chunk] = _topk_mean(zs[j : j + chunk] @ xs.T, k)
    forward = np.empty(ns, dtype=np.int64)
    for i in range(0, ns, chunk):
        scores = 2 * (xs[i : i + chunk] @ zs.T) - r_trg[None, :]
        forward[i : i + chunk] = np.argmax(scores, axis=1)
    backward = np.empty(nt, dtype=np.int64)
    for j in range(0, nt, chunk):
        scores = 2 * (zs[j : j + chunk] @ xs.T) - r_src[None, :]
        backward[j : j + chunk] = np.argmax(scores, axis=1)
    src = np.flatnonzero(backward[forward] == np.arange(ns))
    return src, forward[src], forward


def _similarity_profile(x, n):
    u, s, _ = np.linalg.svd(x[:n], full_matrices=False)
    sim = (u * s) @ u.T
    sim.sort(axis=1)
    sim = _unit_rows(sim)
    sim -= sim.mean(axis=0)
    return _unit_rows(sim)


def similarity_init(xs, zs, k=10, size=4000):
    """Dictionary from sorted intra-space similarity profiles, for spaces
    with no shared word forms. Pairs the ``size`` most frequent words."""
    n = min(xs.shape[0], zs.shape[0], size)
    px = _similarity_profile(xs, n)
    pz = _similarity_profile(zs, n)
    src, trg, _ = csls_mutual_neighbors(px, pz, k)
    return src, trg


def fit_unsupervised(
    source: EmbeddingSpace,
    target: EmbeddingSpace,
    config: SelfLearningConfig | None = None,
    exclude=(),
) -> LinearMap:
    cfg = config or SelfLearningConfig()
    if source.dim != target.dim:
        raise ShapeError(f"dimension mismatch: {source.dim} vs {target.dim}")
    ns = len(source) if cfg.vocab_cutoff is None else min(len(source), cfg.vocab_cutoff)
    nt = len(target) if cfg.vocab_cutoff is None else min(len(target), cfg.vocab_cutoff)
    x = source.vectors[:ns]
    z = target.vectors[:nt]
    if cfg.normalize:
        x, z = _unit_rows(x), _unit_rows(z)

    excluded = set(exclude)
    tindex = target.vocab.index
    src_idx = [i for i, w in enumerate(source.vocab.words[:ns]) if tindex.get(w, nt) < nt and w not in excluded]
    if src_idx:
        src_idx = np.array(src_idx, dtype=np.int64)
        trg_idx = np.array([tindex[source.vocab.words[i]] for i in src_idx], dtype=np.int64)
    else:
        log.info("no identical word forms; initialising from similarity profiles")
        src_idx, trg_idx = similarity_init(x, z, cfg.csls_k, cfg.sim_init_size)
        if len(src_idx) < source.dim:
            raise AlignmentImpossibleError(
                f"initial dictionary has {len(src_idx)} pairs, fewer than the {source.dim} dimensions"
            )

    current = set(zip(src_idx.tolist(), trg_idx.tolist()))
    w = np.eye(source.dim)
    for it in range(1, cfg.max_iter + 1):
        w = procrustes(x[src_idx], z[trg_idx])
        mapped = _unit_rows(x @ w.T)
        src_idx, trg_idx, _ = csls_mutual_neighbors(mapped, _unit_rows(z), cfg.csls_k, cfg.chunk)
        if len(src_idx) == 0:
            raise AlignmentImpossibleError("dictionary induction produced no mutual neighbours")
        induced = set(zip(src_idx.tolist(), trg_idx.tolist()))
        changed = len(current ^ induced) / max(len(current), 1)
        log.debug("self-learning iteration %d: %d pairs, %.2f%% changed", it, len(induced), 100 * changed)
        current = induced
        if changed < cfg.tol:
            break
    w = procrustes(x[src_idx], z[trg_idx])
    return LinearMap(
        w, Method.UNSUPERVISED, orthogonal=True,
        info={"iterations": it, "induced": (src_idx, trg_idx)},
    )


def apply(linear_map: LinearMap, space: EmbeddingSpace) -> EmbeddingSpace:
    if linear_map.dim != space.dim:
        raise ShapeError(f"map of dimension {linear_map.dim} applied to space of dimension {space.dim}")
    return space.with_vectors(linear_map(space.vectors))


def align_pair(
    source: EmbeddingSpace,
    target: EmbeddingSpace,
    method: Method | str = Method.CCA,
    direction: Direction | str = Direction.S_TO_T,
    exclude: TargetSet | tuple = (),
    reg: float = 1e-8,
    self_learning: SelfLearningConfig | None = None,
    dictionary: SeedDictionary | None = None,
) -> AlignedPair:
    """Align the earlier space ``source`` and later space ``target``.

    ``direction=t_to_s`` fits and applies the map from the later space
    into the earlier one instead.
    """
    method = Method(method)
    direction = Direction(direction)
    earlier, later = source, target
    src, trg = (earlier, later) if direction is Direction.S_TO_T else (later, earlier)
    if method is Method.UNSUPERVISED:
        fitted = fit_unsupervised(src, trg, self_learning, exclude=exclude)
        dictionary = None
    else:
        if dictionary is None:
            dictionary = build_seed_dictionary(src, trg, exclude)
        if method is Method.CCA:
            fitted = fit_cca(src, trg, dictionary, reg)
        else:
            fitted = fit_orthogonal(src, trg, dictionary)
    fitted.direction = direction
    moved = apply(fitted, src)
    if direction is Direction.S_TO_T:
        return AlignedPair(moved, later, fitted, dictionary)
    return AlignedPair(earlier, moved, fitted, dictionary)
