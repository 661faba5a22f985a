import numpy as np
import pytest

from pairalign.graph import LabeledGraph


def random_graph(rng, n, k=3, p=0.1, d=3, all_classes=True):
    """Erdos-Renyi graph with random labels; every class present if asked."""
    labels = rng.integers(0, k, size=n)
    if all_classes:
        labels[:k] = np.arange(k)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    feats = rng.normal(size=(n, d))
    return LabeledGraph(n, k, edges, feats, labels)


def one_hot(labels, k):
    P = np.zeros((len(labels), k))
    P[np.arange(len(labels)), labels] = 1.0
    return P


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
