"""Synthetic attributed hypergraphs for scalability and parity experiments."""
from __future__ import annotations

import numpy as np

from .core import AttributedHypergraph, SparseIncidence
from .errors import ParameterError


def _distinct_rows(rng: np.random.Generator, n_rows: int, size: int, high: int) -> np.ndarray:
    """n_rows sorted rows of ``size`` distinct integers drawn uniformly from [0, high)."""
    out = np.sort(rng.integers(0, high, size=(n_rows, size)), axis=1)
    while True:
        bad = np.flatnonzero(np.any(np.diff(out, axis=1) == 0, axis=1))
        if bad.size == 0:
            return out
        out[bad] = np.sort(rng.integers(0, high, size=(bad.size, size)), axis=1)


def _incidence_from_rows(rows: np.ndarray, n: int) -> SparseIncidence:
    m, size = rows.shape
    offsets = np.arange(m + 1, dtype=np.int64) * size
    return SparseIncidence(m, n, offsets, rows.ravel(), np.ones(m * size))


def synth_uniform(n: int, arity: int = 3, n_edges: int | None = None, q: int = 100,
                  seed: int = 0) -> AttributedHypergraph:
    """Uniform hypergraph: ``n_edges`` (default n) random ``arity``-sets and
    fair-coin binary attributes."""
    if n < arity or arity < 2:
        raise ParameterError(f"need n >= arity >= 2 (n={n}, arity={arity})")
    n_edges = n if n_edges is None else n_edges
    rng = np.random.default_rng(seed)
    rows = _distinct_rows(rng, n_edges, arity, n)
    X = rng.integers(0, 2, size=(n, q)).astype(np.float64)
    # an all-zero row has no cosine neighbours; give it one bit
    zero = np.flatnonzero(~X.any(axis=1))
    X[zero, rng.integers(0, q, size=zero.size)] = 1.0
    return AttributedHypergraph(_incidence_from_rows(rows, n), X)


def majority_labels(incidence: SparseIncidence, node_labels: np.ndarray) -> np.ndarray:
    """Most frequent member label of every hyperedge (ties to the smaller label)."""
    node_labels = np.asarray(node_labels, dtype=np.int64)
    n_classes = int(node_labels.max()) + 1
    counts = np.zeros((incidence.n_rows, n_classes))
    np.add.at(counts, (incidence.row_ids(), node_labels[incidence.col_indices]), 1.0)
    return counts.argmax(axis=1)


def synth_planted(n: int = 1000, n_classes: int = 4, edges_per_class: int = 250,
                  attr_dim: int = 64, noise: float = 0.1, seed: int = 0,
                  min_size: int = 3, max_size: int = 5) -> AttributedHypergraph:
    """Planted-partition hypergraph with node and hyperedge labels.

    Each hyperedge is anchored in one class and draws 3-5 members, each from
    the anchor class with probability 1 - noise and from the whole node set
    otherwise. Attributes are a random binary template per class with every
    bit flipped independently with probability ``noise``.
    """
    if not 0.0 <= noise <= 1.0:
        raise ParameterError(f"noise must lie in [0, 1], got {noise}")
    if n_classes < 1 or n < n_classes * max_size:
        raise ParameterError("too few nodes for the requested classes and hyperedge size")
    rng = np.random.default_rng(seed)
    per = n // n_classes
    labels = np.minimum(np.arange(n) // per, n_classes - 1)
    members = [np.flatnonzero(labels == c) for c in range(n_classes)]

    rows = []
    for c in range(n_classes):
        for _ in range(edges_per_class):
            size = int(rng.integers(min_size, max_size + 1))
            edge: set[int] = set()
            while len(edge) < size:
                if rng.random() < noise:
                    edge.add(int(rng.integers(0, n)))
                else:
                    edge.add(int(rng.choice(members[c])))
            rows.append(sorted(edge))
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]

    templates = rng.integers(0, 2, size=(n_classes, attr_dim)).astype(np.float64)
    flips = rng.random((n, attr_dim)) < noise
    X = np.abs(templates[labels] - flips)
    zero = np.flatnonzero(~X.any(axis=1))
    X[zero, rng.integers(0, attr_dim, size=zero.size)] = 1.0

    inc = SparseIncidence.from_rows(rows, n)
    return AttributedHypergraph(inc, X, labels, majority_labels(inc, labels))
