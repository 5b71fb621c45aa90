import numpy as np
import pytest

from lscd.space import EmbeddingSpace

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_space(rng, n, dim, prefix="w"):
    return EmbeddingSpace.from_words([f"{prefix}{i}" for i in range(n)], rng.standard_normal((n, dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_lines(tmp_path):
    def _write(name, lines):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return _write
