import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from degmoyal import corpus


@pytest.fixture(scope="session")
def corpus_graphs():
    return {name: corpus.load(name) for name in corpus.graph_names()}


@pytest.fixture(scope="session")
def divergence_sweep(corpus_graphs):
    """Classification of every corpus graph under every attribution with
    scales <= 3; shared by the divergence and counterterm audits."""
    from degmoyal.multiscale import enumerate_attributions
    from degmoyal.powercount import classify_graph

    results = []
    for name, g in corpus_graphs.items():
        for scales in enumerate_attributions(g, 3):
            rep = classify_graph(g, scales)
            for node in rep.nodes:
                results.append((name, scales, node))
    return results
