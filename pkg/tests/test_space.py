import numpy as np
import pytest

from conftest import random_space
from lscd.errors import FormatError
from lscd.space import load_space, save_space


def test_binary_round_trip_is_exact(tmp_path, rng):
    space = random_space(rng, 10, 4)
    save_space(space, tmp_path / "s.emb")
    loaded = load_space(tmp_path / "s.emb")
    assert loaded.vocab.words == space.vocab.words
    assert np.array_equal(loaded.vectors, space.vectors)


def test_text_round_trip(tmp_path, rng):
    space = random_space(rng, 10, 4)
    save_space(space, tmp_path / "s.txt")
    assert (tmp_path / "s.txt").read_text().splitlines()[0] == "10 4"
    loaded = load_space(tmp_path / "s.txt")
    assert loaded.vectors.shape == (10, 4)
    assert loaded.vocab.words == space.vocab.words
    assert np.abs(loaded.vectors - space.vectors).max() < 1e-6


def test_text_header_parsed(tmp_path):
    rows = [f"w{i} " + " ".join(["0.5"] * 4) for i in range(10)]
    (tmp_path / "s.txt").write_text("10 4\n" + "\n".join(rows) + "\n")
    space = load_space(tmp_path / "s.txt")
    assert (len(space), space.dim) == (10, 4)


def test_short_row_is_a_format_error(tmp_path):
    (tmp_path / "s.txt").write_text("2 4\na 1 2 3 4\nb 1 2 3\n")
    with pytest.raises(FormatError) as err:
        load_space(tmp_path / "s.txt")
    assert err.value.row == 2


@pytest.mark.parametrize("header", ["", "10\n", "ten four\n"])
def test_malformed_header(tmp_path, header):
    (tmp_path / "s.txt").write_text(header)
    with pytest.raises(FormatError):
        load_space(tmp_path / "s.txt")


def test_truncated_binary(tmp_path, rng):
    save_space(random_space(rng, 5, 3), tmp_path / "s.emb")
    data = (tmp_path / "s.emb").read_bytes()
    (tmp_path / "s.emb").write_bytes(data[:-8])
    with pytest.raises(FormatError):
        load_space(tmp_path / "s.emb")
