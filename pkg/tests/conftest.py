import os

import pytest

from vuln_predict.corpus.synthetic import SyntheticSpec, generate_synthetic_corpus

TEST_DATA_DIR = os.path.join(os.path.dirname(__file__), "test_data")


def data_file(name: str) -> str:
    """Absolute path of a file under tests/test_data."""
    return os.path.join(TEST_DATA_DIR, name)


# Small enough for unit tests, large enough for every split and experiment to have both classes.
SMALL_SYNTHETIC_SPEC = SyntheticSpec(
    n_samples=600,
    positive_fraction=0.3,
    n_vocab=400,
    leak_strength=0.3,
    signal_window=20,
)


@pytest.fixture(scope="session")
def small_synthetic():
    """(corpus, mapping) from the generator with seed 3."""
    return generate_synthetic_corpus(3, SMALL_SYNTHETIC_SPEC)


@pytest.fixture(scope="session")
def small_corpus(small_synthetic):
    return small_synthetic[0]


@pytest.fixture
def test_output_dir(tmp_path):
    """Create a temporary directory for command output"""
    return str(tmp_path / "out")


@pytest.fixture
def repo_root():
    """Repository root; the run config in test_data uses paths relative to it."""
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
