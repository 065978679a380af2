import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xlingsim.store import EmbeddingMatrix, normalize_rows


def random_embeddings(rng, n, d, model="m1", lang="aaa"):
    """Unit-normalized random rows, float32 storage."""
    rows = rng.standard_normal((n, d))
    m = EmbeddingMatrix.from_rows(model, lang, rows.astype(np.float32))
    return normalize_rows(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
