"""Dense reference computations (the Base method).

Everything here materializes n x n or (m+n) x (m+n) matrices and is meant
for small inputs and for checking the scalable pipeline in ``sahe``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    AttributedHypergraph,
    EmbeddingMatrix,
    ExtendedHypergraph,
    SimilarityMatrix,
    tlog,
)
from .errors import DenseCapError, ParameterError
from .extend import extend_hypergraph
from .linalg import canonical_eigenbasis, eigen_clusters
from .params import DEFAULT_DENSE_CAP, EmbedParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionMatrix:
    data: np.ndarray

    @property
    def dim(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RwrMatrix:
    data: np.ndarray
    steps: int
    alpha: float

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def check_cap(dim: int, cap: int = DEFAULT_DENSE_CAP, what: str = "matrix") -> None:
    if dim > cap:
        raise DenseCapError(
            f"dense {what} of dimension {dim} exceeds the dense cap of {cap}; "
            "use the sahe method for inputs of this size", stage="oracle")


def node_transition(ext: ExtendedHypergraph, cap: int = DEFAULT_DENSE_CAP) -> TransitionMatrix:
    """P = Dv^-1 H^T W De^-1 H."""
    check_cap(ext.n, cap, "node transition matrix")
    H = ext.incidence.csr
    A = (H.T.multiply((ext.edge_weights / ext.edge_degrees)[None, :]) @ H).toarray()
    return TransitionMatrix(A / ext.node_degrees[:, None])


def edge_transition(ext: ExtendedHypergraph, cap: int = DEFAULT_DENSE_CAP) -> TransitionMatrix:
    """P' = De^-1 H Dv^-1 H^T W."""
    check_cap(ext.n_edges, cap, "hyperedge transition matrix")
    H = ext.incidence.csr
    A = (H.multiply((1.0 / ext.node_degrees)[None, :]) @ H.T).toarray()
    return TransitionMatrix(A * ext.edge_weights[None, :] / ext.edge_degrees[:, None])


def rwr_matrix(P: TransitionMatrix | np.ndarray, alpha: float, T: int) -> RwrMatrix:
    """T-step random walk with restart: Pi <- alpha I + (1 - alpha) Pi P."""
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    if T < 0:
        raise ParameterError(f"T must be >= 0, got {T}")
    P = P.data if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=np.float64)
    Pi = np.eye(P.shape[0])
    for _ in range(T):
        Pi = (1.0 - alpha) * (Pi @ P)
        Pi[np.diag_indices_from(Pi)] += alpha
    return RwrMatrix(Pi, T, alpha)


def scaled_node_rwr(ext: ExtendedHypergraph, alpha: float, T: int,
                    cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """vol * Pi^(T) Dv^-1, the argument of the truncated log for nodes."""
    Pi = rwr_matrix(node_transition(ext, cap), alpha, T).data
    return ext.volume * Pi / ext.node_degrees[None, :]


def scaled_edge_rwr(ext: ExtendedHypergraph, alpha: float, T: int,
                    cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """vol * Pi'^(T) De^-1 W^-1 over all m+n hyperedges."""
    Pi = rwr_matrix(edge_transition(ext, cap), alpha, T).data
    return ext.volume * Pi / (ext.edge_degrees * ext.edge_weights)[None, :]


def hmsn_matrix(ext: ExtendedHypergraph, alpha: float, T: int,
                cap: int = DEFAULT_DENSE_CAP) -> SimilarityMatrix:
    return SimilarityMatrix(tlog(scaled_node_rwr(ext, alpha, T, cap)))


def hmse_full_matrix(ext: ExtendedHypergraph, alpha: float, T: int,
                     cap: int = DEFAULT_DENSE_CAP) -> SimilarityMatrix:
    return SimilarityMatrix(tlog(scaled_edge_rwr(ext, alpha, T, cap)))


def hmse_matrix(ext: ExtendedHypergraph, alpha: float, T: int,
                cap: int = DEFAULT_DENSE_CAP) -> SimilarityMatrix:
    """Hyperedge similarity restricted to the original hyperedges."""
    S = hmse_full_matrix(ext, alpha, T, cap).data
    m = ext.m_original
    return SimilarityMatrix(S[:m, :m])


def factorize_similarity(S: SimilarityMatrix | np.ndarray, k: int) -> EmbeddingMatrix:
    """Z = Q_k Lambda_k^(1/2) from the k algebraically largest eigenpairs.

    Negative selected eigenvalues are clamped to zero, so Z Z^T is the best
    rank-k approximation of the positive part of S restricted to that
    spectral window.
    """
    S = S.data if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    dim = S.shape[0]
    if not 1 <= k <= dim:
        raise ParameterError(f"k={k} must lie in [1, {dim}]")
    lam, Q = np.linalg.eigh(0.5 * (S + S.T))
    lam, Q = lam[::-1], Q[:, ::-1]
    # keep whole degenerate clusters until canonicalized, then cut at k
    clusters = eigen_clusters(lam)
    end = next(c.stop for c in clusters if c.stop >= k)
    Q = canonical_eigenbasis(lam[:end], Q[:, :end])[:, :k]
    lam = np.maximum(lam[:k], 0.0)
    return EmbeddingMatrix(Q * np.sqrt(lam)[None, :], lam)


def pad_columns(Z: EmbeddingMatrix, k: int) -> EmbeddingMatrix:
    if Z.k >= k:
        return Z
    log.warning("requested k=%d exceeds available dimension %d; zero-padding", k, Z.k)
    data = np.hstack([Z.data, np.zeros((Z.rows, k - Z.k))])
    return EmbeddingMatrix(data, np.concatenate([Z.eigenvalues, np.zeros(k - Z.k)]))


def base_embed_extended(ext: ExtendedHypergraph, params: EmbedParams
                        ) -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    cap = params.dense_cap
    check_cap(ext.n, cap, "node similarity matrix")
    check_cap(ext.n_edges, cap, "hyperedge similarity matrix")
    Psi = hmsn_matrix(ext, params.alpha, params.T, cap)
    Z_V = pad_columns(factorize_similarity(Psi, min(params.k, ext.n)), params.k)
    Psi_E = hmse_matrix(ext, params.alpha, params.T, cap)
    Z_E = pad_columns(factorize_similarity(Psi_E, min(params.k, ext.m)), params.k)
    return Z_V, Z_E


def base_embed(H: AttributedHypergraph, params: EmbedParams | None = None
               ) -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    """Exact node and hyperedge embeddings by dense factorization."""
    params = (params or EmbedParams()).validate()
    check_cap(H.n, params.dense_cap, "node similarity matrix")
    check_cap(H.m + H.n, params.dense_cap, "hyperedge similarity matrix")
    ext = extend_hypergraph(H, params.K, params.beta, params.knn, params.seed)
    return base_embed_extended(ext, params)
