"""Embedding space container and its text/binary file formats.

Text format is the word2vec one: a ``"<vocab_size> <dim>"`` header line,
then ``word v1 ... vdim`` per row. The binary format starts with the
magic bytes ``LSCDEMB`` and a version byte, followed by a JSON header
(words, counts, shape) and the raw little-endian float64 matrix, so a
round trip is exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .errors import FormatError, ShapeError

MAGIC = b"LSCDEMB"
VERSION = 1


@dataclass
class EmbeddingSpace:
    vocab: Vocabulary
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError(
                f"vectors of shape {self.vectors.shape} do not match vocabulary of {len(self.vocab)} words"
            )
        if not np.isfinite(self.vectors).all():
            raise FormatError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, word):
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.index[word]]

    def rows(self, words) -> np.ndarray:
        idx = [self.vocab.index[w] for w in words]
        return self.vectors[idx]

    def normalized(self) -> np.ndarray:
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return self.vectors / norms

    def with_vectors(self, vectors) -> "EmbeddingSpace":
        return EmbeddingSpace(self.vocab, vectors)

    @classmethod
    def from_words(cls, words, vectors, counts=None) -> "EmbeddingSpace":
        """Build a space from an explicit word list, keeping its order."""
        words = list(words)
        if counts is None:
            counts = {w: 1 for w in words}
        return cls(Vocabulary(words, dict(counts)), vectors)


def save_space(space: EmbeddingSpace, path, binary: bool | None = None) -> None:
    """Write ``space``; the format defaults to binary unless the path
    ends in ``.txt`` or ``.vec``."""
    path = Path(path)
    if binary is None:
        binary = path.suffix not in (".txt", ".vec")
    if binary:
        _save_binary(space, path)
    else:
        _save_text(space, path)


def load_space(path, binary: bool | None = None) -> EmbeddingSpace:
    path = Path(path)
    if binary is None:
        with open(path, "rb") as fh:
            binary = fh.read(len(MAGIC)) == MAGIC
    return _load_binary(path) if binary else _load_text(path)


def _save_text(space, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space)} {space.dim}\n")
        for word, row in zip(space.vocab.words, space.vectors):
            fh.write(word + " " + " ".join(format(x, ".9g") for x in row) + "\n")


def _load_text(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: malformed header, expected '<vocab_size> <dim>'", row=0)
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: malformed header {' '.join(header)!r}", row=0) from None
        if n < 0 or dim < 1:
            raise FormatError(f"{path}: bad dimensions {n}x{dim}", row=0)
        words = []
        vectors = np.empty((n, dim), dtype=np.float64)
        for i in range(n):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise FormatError(f"{path}: expected {dim} values, found {len(parts) - 1}", row=i + 1)
            words.append(parts[0])
            try:
                vectors[i] = [float(x) for x in parts[1:]]
            except ValueError:
                raise FormatError(f"{path}: non-numeric value", row=i + 1) from None
        if fh.readline().strip():
            raise FormatError(f"{path}: more rows than the header's {n}", row=n + 1)
    # Text files carry no counts; keep file order as rank.
    return EmbeddingSpace.from_words(words, vectors, {w: n - i for i, w in enumerate(words)})


def _save_binary(space, path):
    header = json.dumps(
        {
            "shape": list(space.vectors.shape),
            "words": space.vocab.words,
            "counts": [space.vocab.counts.get(w, 0) for w in space.vocab.words],
            "min_count": space.vocab.min_count,
        },
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BQ", VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(space.vectors, dtype="<f8").tobytes())


def _load_binary(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise FormatError(f"{path}: not an embedding file (bad magic)")
        version, hlen = struct.unpack("<BQ", fh.read(9))
        if version != VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        n, dim = header["shape"]
        data = fh.read()
    if len(data) != n * dim * 8:
        raise FormatError(f"{path}: truncated matrix, expected {n * dim} values", row=len(data) // (8 * max(dim, 1)))
    vectors = np.frombuffer(data, dtype="<f8").reshape(n, dim).astype(np.float64)
    vocab = Vocabulary(header["words"], dict(zip(header["words"], header["counts"])), header["min_count"])
    return EmbeddingSpace(vocab, vectors)


def check_same_dim(a: EmbeddingSpace, b: EmbeddingSpace):
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
