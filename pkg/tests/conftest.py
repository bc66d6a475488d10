import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netsumm.corpus import Document, build_corpus
from netsumm.netgraph import DocumentGraph, build_document_graph


@pytest.fixture
def tiny_corpus():
    return build_corpus(
        [
            Document("a", "cat dog"),
            Document("b", "dog fish"),
        ]
    )


@pytest.fixture
def small_corpus():
    # six docs over two loose themes plus shared filler
    texts = {
        "d0": "apple banana cherry apple market",
        "d1": "banana cherry apple orchard fruit",
        "d2": "apple fruit orchard banana banana",
        "d3": "engine piston turbine engine steel",
        "d4": "turbine steel piston factory engine",
        "d5": "factory steel engine piston piston",
    }
    return build_corpus([Document(k, v) for k, v in texts.items()])


@pytest.fixture
def small_graph(small_corpus):
    return build_document_graph(small_corpus)


def make_graph(weights: np.ndarray, prefix: str = "n") -> DocumentGraph:
    ids = tuple(f"{prefix}{i}" for i in range(weights.shape[0]))
    return DocumentGraph(np.asarray(weights, dtype=float), ids)


@pytest.fixture
def graph_factory():
    return make_graph
