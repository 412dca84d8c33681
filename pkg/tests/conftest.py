import os
from pathlib import Path

import numpy as np
import pytest

from eigencircuit.experiments import gen_random_matrix


def harvard500_path():
    """Locate the external Harvard500 edge list, if the user provided one."""
    env = os.environ.get("EIGENCIRCUIT_HARVARD500")
    candidates = [env] if env else []
    here = Path(__file__).resolve().parent
    candidates += [
        here / "data" / "harvard500_edges.txt",
        here.parent / "data" / "harvard500_edges.txt",
    ]
    for cand in candidates:
        if cand and Path(cand).is_file():
            return Path(cand)
    return None


requires_harvard500 = pytest.mark.skipif(
    harvard500_path() is None,
    reason="Harvard500 edge list not present (set EIGENCIRCUIT_HARVARD500 "
    "or put data/harvard500_edges.txt in the repo)",
)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


@pytest.fixture
def random_matrix_3x3():
    return gen_random_matrix(3, seed=0)


@pytest.fixture
def random_matrix_10x10():
    return gen_random_matrix(10, seed=5)
