"""Shared fixtures: small hand-built graphs with known properties, a synthetic
two-community dataset with class-correlated attributes, and helpers for
writing dataset files in the text formats the loaders expect.
"""

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from ggnn.graph import Graph

settings.register_profile(
    "ggnn",
    deadline=None,  # first numba call in a process pays JIT cost
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ggnn")


def build_graph(n, edges, labels=None, train=None, valid=None, test=None,
                attributes=None, weights=None):
    """Validated Graph from an undirected edge list (pairs are symmetrized)."""
    rows, cols, vals = [], [], []
    for k, (u, v) in enumerate(edges):
        w = 1.0 if weights is None else float(weights[k])
        rows.append(u)
        cols.append(v)
        vals.append(w)
        if u != v:
            rows.append(v)
            cols.append(u)
            vals.append(w)
    adj = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    adj.sum_duplicates()
    adj.sort_indices()

    def mask(ids):
        m = np.zeros(n, dtype=bool)
        if ids is not None:
            m[list(ids)] = True
        return m

    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    if attributes is not None and not sp.issparse(attributes):
        attributes = sp.csr_matrix(np.asarray(attributes, dtype=np.float64))
    g = Graph(adjacency=adj, attributes=attributes,
              labels=np.asarray(labels, dtype=np.int64),
              train_mask=mask(train), valid_mask=mask(valid), test_mask=mask(test))
    return g.validate()


@pytest.fixture
def path3():
    """Path 0-1-2; normalized adjacency has known closed-form entries."""
    return build_graph(3, [(0, 1), (1, 2)], labels=[0, 1, 0],
                       train=[0], valid=[1], test=[2],
                       attributes=np.eye(3))


@pytest.fixture
def pair2():
    """Single undirected edge; normalized adjacency is constant 0.5."""
    return build_graph(2, [(0, 1)], labels=[0, 1],
                       train=[0], test=[1],
                       attributes=np.eye(2))


def barbell_graph():
    """Two 5-cliques joined by one bridge edge (0..4 and 5..9, bridge 4-5)."""
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i, j) for i in range(5, 10) for j in range(i + 1, 10)]
    edges.append((4, 5))
    labels = [0] * 5 + [1] * 5
    attrs = np.zeros((10, 2))
    attrs[:5, 0] = 1.0
    attrs[5:, 1] = 1.0
    return build_graph(10, edges, labels=labels,
                       train=[0, 5], valid=[1, 6], test=[2, 3, 7, 8],
                       attributes=attrs)


@pytest.fixture
def barbell():
    return barbell_graph()


@pytest.fixture
def separable():
    """Two communities whose raw attributes alone determine the label; any
    sane classifier reaches train accuracy 1.0 quickly."""
    edges = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7), (3, 4)]
    attrs = np.zeros((8, 2))
    attrs[:4, 0] = 1.0
    attrs[4:, 1] = 1.0
    return build_graph(8, edges, labels=[0] * 4 + [1] * 4,
                       train=[0, 1, 4, 5], valid=[2, 6], test=[3, 7],
                       attributes=attrs)


def sbm_graph(n_per_block=40, p_in=0.25, p_out=0.02, n_attr=8, seed=7,
              attr_flip=0.1):
    """Two-block stochastic block model with attributes that echo the block
    (each node gets one of the block's attribute ids, flipped with a small
    probability), so structure, attributes, and labels all agree."""
    rng = np.random.default_rng(seed)
    n = 2 * n_per_block
    labels = np.repeat([0, 1], n_per_block)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                edges.append((i, j))
    # keep every node reachable: chain within each block
    for b in range(2):
        lo = b * n_per_block
        for i in range(lo, lo + n_per_block - 1):
            edges.append((i, i + 1))
    attrs = np.zeros((n, n_attr))
    half = n_attr // 2
    for i in range(n):
        block = labels[i] if rng.random() >= attr_flip else 1 - labels[i]
        a = rng.integers(0, half) + block * half
        attrs[i, a] = 1.0
    per = n_per_block
    train = list(range(0, 5)) + list(range(per, per + 5))
    valid = list(range(5, 15)) + list(range(per + 5, per + 15))
    test = list(range(15, per)) + list(range(per + 15, n))
    return build_graph(n, edges, labels=labels, train=train, valid=valid,
                       test=test, attributes=attrs)


@pytest.fixture(scope="session")
def sbm():
    return sbm_graph()


@pytest.fixture(scope="session")
def sbm_pretrained(sbm):
    """Structure and attribute embedding tables for the SBM fixture, trained
    once per session with a small-but-real walk budget."""
    from ggnn.pretrain import (SgnsConfig, WalkConfig, extract_context_attributes,
                               extract_pairs, generate_walks,
                               train_attribute_embeddings, train_structure_embeddings)
    corpus = generate_walks(sbm, WalkConfig(walks_per_node=6, walk_length=20,
                                            window=5, seed=3))
    pairs = extract_pairs(corpus, window=5)
    struct = train_structure_embeddings(pairs, sbm.n,
                                        SgnsConfig(dim=8, negatives=5, epochs=3, seed=3))
    attr_pairs = extract_context_attributes(corpus, sbm, window=5, seed=3)
    attr = train_attribute_embeddings(attr_pairs, sbm.n, sbm.num_attributes,
                                      SgnsConfig(dim=8, negatives=5, epochs=3, seed=4))
    return struct, attr


def write_dataset_files(g, out_dir):
    from ggnn.graph import write_graph_files
    return write_graph_files(g, out_dir)
