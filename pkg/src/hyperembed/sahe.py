"""Scalable embedding pipeline.

extend -> normalized incidence -> one truncated SVD shared by both paths ->
RWR spectral accumulator -> node factor F and hyperedge factor F' ->
polynomial tensor sketch + Lanczos per path.

With H~ = W^1/2 De^-1/2 H Dv^-1/2 = U S V^T, the T-step RWR similarity
arguments factor as

    vol Pi^(T) Dv^-1        = F F^T,   F  = sqrt(vol) Dv^-1/2 V S^^1/2
    vol Pi'^(T) De^-1 W^-1  = F'F'^T,  F' = sqrt(vol) (De W)^-1/2 U S^^1/2

where S^ = sum_{i<T} alpha (1-alpha)^i S^2i + (1-alpha)^T S^2T. Truncating
the SVD to r triples gives the rank-r factors used for large inputs.
"""
from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import AttributedHypergraph, EmbeddingMatrix, ExtendedHypergraph, tlog
from .errors import HyperembedError
from .extend import extend_hypergraph
from .linalg import (LinearOperator, SvdTriple, canonical_eigenbasis, dense_svd, lanczos_eigs,
                     truncated_svd)
from .oracle import check_cap, factorize_similarity, pad_columns
from .params import EmbedParams, mix
from .pts import build_pts

log = logging.getLogger(__name__)

SEED_PTS_NODE, SEED_PTS_EDGE, SEED_LANCZOS, SEED_SVD = 1, 2, 3, 4


@dataclass(frozen=True)
class SpectralCore:
    """Singular triples of H~ and the accumulated RWR weights per triple.

    When ``complete`` is set, U spans the whole hyperedge space and S is
    zero-padded to its width, so the hyperedge factor reproduces the restart
    term on the orthogonal complement of the node space as well.
    """

    svd: SvdTriple
    sigma_hat: np.ndarray
    volume: float
    complete: bool = False

    @property
    def r(self) -> int:
        return self.svd.V.shape[1]


@dataclass
class SaheResult:
    node: EmbeddingMatrix
    edge: EmbeddingMatrix
    manifest: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.node, self.edge))


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except HyperembedError as e:
        if e.stage is None:
            e.stage = name
            e.args = (f"[{name}] {e.args[0] if e.args else ''}",) + tuple(e.args[1:])
        raise
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def normalized_incidence(ext: ExtendedHypergraph) -> sp.csr_matrix:
    """H~ = W^1/2 De^-1/2 H Dv^-1/2 as a sparse matrix with H's pattern."""
    H = ext.incidence
    rid = H.row_ids()
    row_scale = np.sqrt(ext.edge_weights / ext.edge_degrees)
    col_scale = 1.0 / np.sqrt(ext.node_degrees)
    vals = H.values * row_scale[rid] * col_scale[H.col_indices]
    return sp.csr_matrix((vals, H.col_indices, H.row_offsets), shape=H.shape)


def normalize_incidence(ext: ExtendedHypergraph) -> LinearOperator:
    return LinearOperator.from_matrix(normalized_incidence(ext))


def sigma_hat(S: np.ndarray, alpha: float, T: int) -> np.ndarray:
    """Accumulate alpha + (1 - alpha) s^2 x, T times from x = 1."""
    S = np.asarray(S, dtype=np.float64)
    s2 = S * S
    acc = np.ones_like(S)
    for _ in range(T):
        acc = alpha + (1.0 - alpha) * s2 * acc
    return acc


def spectral_core(ext: ExtendedHypergraph, params: EmbedParams) -> SpectralCore:
    Ht = normalized_incidence(ext)
    if params.exact:
        check_cap(ext.n_edges, params.dense_cap, "normalized incidence")
        svd = dense_svd(Ht.toarray(), complete=True)
        return SpectralCore(svd, sigma_hat(svd.S, params.alpha, params.T), ext.volume, True)
    r = min(params.r, ext.n)
    # clustered spectra (e.g. random uniform hypergraphs) need long Krylov runs
    max_iters = params.max_iters or max(100 * r, 3000)
    svd = truncated_svd(LinearOperator.from_matrix(Ht), r, tol=params.svd_tol,
                        max_iters=max_iters, seed=mix(params.seed, SEED_SVD))
    if svd.r < params.r:
        log.info("effective SVD rank reduced from %d to %d", params.r, svd.r)
    return SpectralCore(svd, sigma_hat(svd.S, params.alpha, params.T), ext.volume, False)


def truncate_core(core: SpectralCore, r: int) -> SpectralCore:
    """Keep the leading r triples (the rank-r factors used by the scalable path)."""
    sv = core.svd
    return SpectralCore(SvdTriple(sv.U[:, :r], sv.S[:r], sv.V[:, :r]), core.sigma_hat[:r],
                        core.volume, False)


def truncation_bounds(core: SpectralCore, ext: ExtendedHypergraph, r: int) -> tuple[float, float]:
    """Squared-Frobenius error bounds for tlog of the rank-r node and hyperedge factors.

    ``core`` must hold every nonzero triple (exact mode). The node bound is
    compared against the n x n similarity, the hyperedge bound against the
    full (m+n) x (m+n) one. Both tails stop at n, so the hyperedge bound is
    meaningful for r < n only: zero singular values still carry weight alpha,
    and the rank-n hyperedge factor misses those directions.
    """
    tail = float(np.sum(core.sigma_hat[r: ext.n]))
    vol = float(np.sum(ext.node_degrees))
    node = (vol * float(np.sum(1.0 / ext.node_degrees)) * tail) ** 2
    edge = (vol * float(np.sum(1.0 / (ext.edge_degrees * ext.edge_weights))) * tail) ** 2
    return node, edge


def factors(core: SpectralCore, ext: ExtendedHypergraph) -> tuple[np.ndarray, np.ndarray]:
    """Node factor F (n x r) and hyperedge factor F' ((m+n) x r')."""
    U, V = core.svd.U, core.svd.V
    sh_v = core.sigma_hat[: V.shape[1]]
    sh_u = core.sigma_hat[: U.shape[1]]
    root_vol = np.sqrt(core.volume)
    F = root_vol * (V / np.sqrt(ext.node_degrees)[:, None]) * np.sqrt(sh_v)[None, :]
    Fp = root_vol * (U / np.sqrt(ext.edge_degrees * ext.edge_weights)[:, None]) \
        * np.sqrt(sh_u)[None, :]
    return F, Fp


def embed_factor(F: np.ndarray, k: int, params: EmbedParams, pts_seed: int,
                 lanczos_seed: int, info: dict | None = None) -> EmbeddingMatrix:
    """Embedding whose Gram approximates tlog(F F^T)."""
    info = {} if info is None else info
    rows = F.shape[0]
    k_eff = min(k, rows)
    if params.exact:
        check_cap(rows, params.dense_cap, "tlog(F F^T)")
        Z = factorize_similarity(tlog(F @ F.T), k_eff)
        info["mode"] = "exact"
        return pad_columns(Z, k)
    pts = build_pts(F, params.tau, params.b, params.c, seed=pts_seed)
    info["coefficients"] = pts.coefficients.tolist()
    info["fit"] = {"method": pts.fit.method, "interval": list(pts.fit.interval),
                   "rms_error": pts.fit.rms_error}
    max_iters = params.max_iters or max(30 * k_eff, 1000)
    if params.eig_space == "range":
        form = pts.range_form()
        info["range_dim"] = form.dim
        k_eff = min(k_eff, form.dim)
        res = lanczos_eigs(form.operator(), k_eff, tol=params.eig_tol, max_iters=max_iters,
                           seed=lanczos_seed)
        lifted = form.lift_vectors(res.vectors)
        res = res._replace(vectors=canonical_eigenbasis(res.values, lifted))
    else:
        res = lanczos_eigs(pts.operator(), k_eff, tol=params.eig_tol, max_iters=max_iters,
                           seed=lanczos_seed)
    info["lanczos_residuals"] = res.residuals.tolist()
    info["lanczos_matvecs"] = res.matvecs
    lam = res.values
    n_neg = int(np.sum(lam < 0))
    if n_neg:
        log.warning("%d of %d selected eigenvalues are negative; clamped to 0", n_neg, k_eff)
    info["clamped_eigenvalues"] = n_neg
    lam = np.maximum(lam, 0.0)
    Z = EmbeddingMatrix(res.vectors * np.sqrt(lam)[None, :], lam)
    return pad_columns(Z, k)


def sahe_embed_extended(ext: ExtendedHypergraph, params: EmbedParams,
                        timings: dict | None = None) -> SaheResult:
    timings = {} if timings is None else timings
    node_info: dict = {}
    edge_info: dict = {}
    with _stage("svd", timings):
        core = spectral_core(ext, params)
    with _stage("factors", timings):
        F, Fp = factors(core, ext)
        Fp = Fp[: ext.m_original]
    with _stage("node_embedding", timings):
        Z_V = embed_factor(F, params.k, params, mix(params.seed, SEED_PTS_NODE),
                           mix(params.seed, SEED_LANCZOS), node_info)
    with _stage("edge_embedding", timings):
        Z_E = embed_factor(Fp, params.k, params, mix(params.seed, SEED_PTS_EDGE),
                           mix(params.seed, SEED_LANCZOS), edge_info)
    manifest = {
        "method": "sahe",
        "params": params.to_dict(),
        "n": ext.n,
        "m": ext.m_original,
        "volume": ext.volume,
        "effective_r": core.r,
        "singular_values": core.svd.S[: core.r].tolist(),
        "svd_matvecs": core.svd.matvecs,
        "node": node_info,
        "edge": edge_info,
        "stage_seconds": timings,
    }
    return SaheResult(Z_V, Z_E, manifest)


def sahe_embed(H: AttributedHypergraph, params: EmbedParams | None = None) -> SaheResult:
    """Node and hyperedge embeddings without materializing similarity matrices."""
    params = (params or EmbedParams()).validate()
    timings: dict = {}
    t0 = time.perf_counter()
    with _stage("extend", timings):
        ext = extend_hypergraph(H, params.K, params.beta, params.knn, params.seed)
    result = sahe_embed_extended(ext, params, timings)
    timings["total"] = time.perf_counter() - t0
    return result
