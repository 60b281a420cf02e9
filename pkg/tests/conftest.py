import numpy as np
import pytest

from domainscope.corpus import CorpusNode, CorpusTree, SampleSet


def make_tree(parents, leaf_samples=None, labels=None) -> CorpusTree:
    """Build a CorpusTree from a parent list (parents[0] must be None).

    leaf_samples maps leaf id -> (count, width) ndarray; leaves without an
    entry get a single placeholder sample of shape (1,).
    """
    n = len(parents)
    children = {i: [] for i in range(n)}
    for node, parent in enumerate(parents):
        if parent is not None:
            children[parent].append(node)
    nodes = []
    for i in range(n):
        kids = tuple(sorted(children[i]))
        samples = None
        if not kids:
            if leaf_samples and i in leaf_samples:
                block = np.asarray(leaf_samples[i], dtype=np.float32)
                samples = SampleSet((block.shape[1],), block)
            else:
                samples = SampleSet((1,), np.full((1, 1), 0.5, dtype=np.float32))
        label = labels[i] if labels else f"node-{i}"
        nodes.append(CorpusNode(i, label, parents[i], kids, samples))
    return CorpusTree(nodes)


def random_parents(rng, max_nodes=200):
    n = int(rng.integers(2, max_nodes + 1))
    return [None] + [int(rng.integers(0, i)) for i in range(1, n)]


def bfs_distances(parents, start):
    """Reference all-distance computation by breadth-first search."""
    n = len(parents)
    adjacency = {i: [] for i in range(n)}
    for node, parent in enumerate(parents):
        if parent is not None:
            adjacency[node].append(parent)
            adjacency[parent].append(node)
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for u in adjacency[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


def ternary_parents(depth=3, arity=3):
    """Heap-ordered perfect tree parent list."""
    internal = (arity ** depth - 1) // (arity - 1)
    total = internal + arity ** depth
    return [None] + [(i - 1) // arity for i in range(1, total)]


@pytest.fixture
def ternary_tree():
    return make_tree(ternary_parents())
