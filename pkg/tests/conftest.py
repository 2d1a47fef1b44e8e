import numpy as np
import pytest

from mvdr.container import DocumentRecord


def f32(values):
    """Round through binary32 so containers round-trip bit-exactly."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def doc_from_importance(importance, dim=4, doc_id="doc", seed=0, with_global=False):
    """Document with the given importance vector and random embeddings."""
    importance = np.asarray(importance, dtype=np.float64)
    rng = np.random.default_rng(seed)
    embeddings = rng.standard_normal((importance.shape[0], dim))
    return DocumentRecord(
        doc_id=doc_id,
        embeddings=embeddings,
        importance=importance,
        global_embedding=rng.standard_normal(dim) if with_global else None,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
