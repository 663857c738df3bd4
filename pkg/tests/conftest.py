import numpy as np
import pytest

from gouruin.acceptance import random_atom_triplet


@pytest.fixture
def corpus():
    """Deterministic random triplet corpus shared across property tests."""
    rng = np.random.default_rng(20240811)
    return [random_atom_triplet(rng) for _ in range(200)]


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
