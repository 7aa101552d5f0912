"""Attribute-extended hypergraph: one K-nearest-neighbour hyperedge per node."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import AttributedHypergraph, ExtendedHypergraph, SparseIncidence, degrees_and_volume
from .errors import DegenerateStructureError, ParameterError

log = logging.getLogger(__name__)

# above this many nodes, knn="auto" switches from brute force to NN-descent
EXACT_KNN_MAX_NODES = 20_000
_BLOCK = 1024


@dataclass(frozen=True)
class KnnResult:
    """``indices[i]`` are node i's neighbours, most similar first; ``sims`` their cosines."""

    indices: np.ndarray
    sims: np.ndarray

    @property
    def k(self) -> int:
        return self.indices.shape[1]


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    out = np.zeros_like(X)
    nz = norms > 0
    out[nz] = X[nz] / norms[nz, None]
    return out


def _top_k_row(s: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties resolved towards smaller index."""
    if k >= s.size:
        return np.lexsort((np.arange(s.size), -s))[:k]
    kth = np.partition(s, s.size - k)[s.size - k]
    above = np.flatnonzero(s > kth)
    tied = np.flatnonzero(s == kth)[: k - above.size]
    cand = np.concatenate([above, tied])
    return cand[np.lexsort((cand, -s[cand]))]


def _exact_knn(Xn: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    n = Xn.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k))
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        S = np.clip(Xn[start:stop] @ Xn.T, -1.0, 1.0)
        # rounding makes exact duplicates tie regardless of BLAS summation order
        R = np.round(S, 12)
        R[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        for r in range(stop - start):
            top = _top_k_row(R[r], k)
            idx[start + r] = top
            sims[start + r] = S[r, top]
    return idx, sims


def _approx_knn(Xn: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    from pynndescent import NNDescent

    n = Xn.shape[0]
    index = NNDescent(Xn, metric="cosine", n_neighbors=min(k + 1, n), random_state=seed,
                      n_jobs=1, low_memory=True, compressed=True)
    graph = np.asarray(index.neighbor_graph[0], dtype=np.int64)
    idx = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k))
    short = []
    for start in range(0, n, _BLOCK * 4):
        stop = min(start + _BLOCK * 4, n)
        cand = graph[start:stop]
        valid = (cand >= 0) & (cand != np.arange(start, stop)[:, None])
        safe = np.where(valid, cand, 0)
        s = np.clip(np.einsum("rjq,rq->rj", Xn[safe], Xn[start:stop]), -1.0, 1.0)
        key = np.where(valid, np.round(s, 12), -np.inf)
        order = np.lexsort((safe, -key), axis=-1)[:, :k]
        idx[start:stop] = np.take_along_axis(safe, order, axis=1)
        sims[start:stop] = np.take_along_axis(s, order, axis=1)
        short.extend((start + np.flatnonzero(valid.sum(axis=1) < k)).tolist())
    for i in short:
        # NN-descent returned fewer than k distinct neighbours; pad with leftovers
        got = graph[i][(graph[i] >= 0) & (graph[i] != i)]
        got = got[np.lexsort((got, -np.round(Xn[got] @ Xn[i], 12)))][:k]
        extra = np.setdiff1d(np.arange(n), np.concatenate([got, [i]]))[: k - got.size]
        idx[i] = np.concatenate([got, extra])
        sims[i] = np.clip(Xn[idx[i]] @ Xn[i], -1.0, 1.0)
    return idx, sims


def cosine_knn(attributes: np.ndarray, K: int, method: str = "exact", seed: int = 0) -> KnnResult:
    """Top-K cosine neighbours of every node (self excluded).

    ``method`` is ``"exact"`` (blocked brute force), ``"approx"`` (NN-descent)
    or ``"auto"`` (exact up to ``EXACT_KNN_MAX_NODES`` nodes). Zero rows have
    cosine 0 against everything.
    """
    X = np.asarray(attributes, dtype=np.float64)
    n = X.shape[0]
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K}")
    if n < 2:
        raise ParameterError("cosine_knn needs at least 2 nodes")
    k = min(K, n - 1)
    if method == "auto":
        method = "exact" if n <= EXACT_KNN_MAX_NODES else "approx"
    Xn = _normalize_rows(X)
    if method == "exact":
        idx, sims = _exact_knn(Xn, k)
    elif method == "approx":
        idx, sims = _approx_knn(Xn, k, seed)
    else:
        raise ParameterError(f"unknown knn method {method!r}")
    return KnnResult(idx, sims)


def extend_hypergraph(H: AttributedHypergraph, K: int = 10, beta: float = 1.0,
                      knn: str = "auto", seed: int = 0,
                      knn_result: KnnResult | None = None) -> ExtendedHypergraph:
    """Append one attribute hyperedge ``knn(v_i) + {v_i}`` per node.

    Member weights are the cosine similarities to ``v_i`` (1 for ``v_i``
    itself; non-positive neighbours are dropped). All attribute hyperedges
    share one weight chosen so their volume is ``beta`` times the volume of
    the original hyperedges.
    """
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if H.m == 0:
        raise DegenerateStructureError("hypergraph has no hyperedges to balance against")
    nn = knn_result if knn_result is not None else cosine_knn(H.attributes, K, knn, seed)
    n = H.n
    cols = np.hstack([np.arange(n)[:, None], nn.indices])
    vals = np.hstack([np.ones((n, 1)), nn.sims])
    keep = vals > 0
    sizes = keep.sum(axis=1)
    lonely = np.flatnonzero(sizes < 2)
    if lonely.size:
        raise DegenerateStructureError(
            f"node {int(lonely[0])} has no neighbour with positive attribute similarity "
            "(zero or isolated attribute vector)", stage="extend")
    # sort each row by column, pushing dropped entries to the end
    order = np.argsort(np.where(keep, cols, n), axis=1, kind="stable")
    cols = np.take_along_axis(cols, order, axis=1)
    vals = np.take_along_axis(vals, order, axis=1)
    kept = np.take_along_axis(keep, order, axis=1)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    HK = SparseIncidence(n, n, offsets, cols[kept], vals[kept])
    H0 = H.incidence
    vol_E = float(H0.values.sum())
    w_attr = beta * vol_E / float(HK.values.sum())
    weights = np.concatenate([np.ones(H0.n_rows), np.full(n, w_attr)])
    inc = H0.vstack(HK)
    Dv, De, vol = degrees_and_volume(inc, weights)
    return ExtendedHypergraph(inc, Dv, De, weights, vol, H0.n_rows)
