import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from kleenefc.alphabet import DistributedAlphabet, as_word  # noqa: E402
from kleenefc.cli import load  # noqa: E402
from oracles import DATA  # noqa: E402


@pytest.fixture(scope="session")
def data():
    """Loader for the shipped example artifacts, cached per session."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load(DATA / name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def al():
    return DistributedAlphabet((("a", "b", "c"), ("a", "d", "e")))


def words(*ws):
    return {as_word(w) for w in ws}
