"""Matrix-free symmetric Lanczos and truncated SVD.

The eigensolver is a thick-restart Lanczos with full reorthogonalization:
every new Krylov vector is orthogonalized twice against the whole basis, so
the projected matrix is the exact Rayleigh quotient V^T A V and no spurious
copies of converged eigenvalues appear.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, ConvergenceError, ParameterError

Vec = np.ndarray


@dataclass(frozen=True)
class LinearOperator:
    dim_in: int
    dim_out: int
    apply: Callable[[Vec], Vec]
    apply_adjoint: Callable[[Vec], Vec] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim_out, self.dim_in)

    def __matmul__(self, x: Vec) -> Vec:
        return self.apply(x)

    @classmethod
    def from_matrix(cls, A) -> "LinearOperator":
        """Wrap a dense array or scipy sparse matrix."""
        if not sp.issparse(A):
            A = np.asarray(A, dtype=np.float64)
        AT = A.T
        return cls(A.shape[1], A.shape[0], lambda x: A @ x, lambda y: AT @ y)

    def gram(self) -> "LinearOperator":
        """The symmetric operator A^T A."""
        if self.apply_adjoint is None:
            raise ContractError("gram() needs apply_adjoint")
        f, g = self.apply, self.apply_adjoint
        return LinearOperator(self.dim_in, self.dim_in, lambda x: g(f(x)), lambda x: g(f(x)))

    def adjoint(self) -> "LinearOperator":
        if self.apply_adjoint is None:
            raise ContractError("operator has no adjoint")
        return LinearOperator(self.dim_out, self.dim_in, self.apply_adjoint, self.apply)

    def materialize(self) -> np.ndarray:
        """Dense matrix, column by column (testing only)."""
        M = np.empty((self.dim_out, self.dim_in))
        e = np.zeros(self.dim_in)
        for j in range(self.dim_in):
            e[j] = 1.0
            M[:, j] = self.apply(e)
            e[j] = 0.0
        return M


@dataclass(frozen=True)
class SvdTriple:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    matvecs: int = 0

    @property
    def r(self) -> int:
        return self.S.size


class EigResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    matvecs: int


def sign_vector(Q: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    """+-1 per column making the first clearly nonzero entry positive."""
    out = np.ones(Q.shape[1])
    for j in range(Q.shape[1]):
        col = Q[:, j]
        big = np.abs(col) > rel_tol * max(np.abs(col).max(initial=0.0), 1e-300)
        if big.any() and col[np.argmax(big)] < 0:
            out[j] = -1.0
    return out


def canonical_signs(Q: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    return np.asarray(Q, dtype=np.float64) * sign_vector(Q, rel_tol)[None, :]


def eigen_clusters(values: np.ndarray, rel_tol: float = 1e-8) -> list[slice]:
    """Runs of consecutive (sorted) eigenvalues closer than rel_tol * max|value|."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return []
    tol = rel_tol * max(np.abs(values).max(), 1e-300)
    breaks = np.flatnonzero(np.abs(np.diff(values)) > tol) + 1
    edges = np.concatenate([[0], breaks, [values.size]])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _canonical_cluster_basis(Q: np.ndarray, digits: int = 8) -> np.ndarray:
    """Rotation-invariant orthonormal basis of span(Q).

    Greedy pivoted Gram-Schmidt on the projections P e_i of coordinate
    vectors: the pivot is the coordinate with the largest residual norm
    (rounded, ties to the smallest index). The result depends only on the
    subspace, so degenerate eigenspaces get a reproducible basis.
    """
    A = Q.T.copy()  # column i is the coordinate vector of P e_i in the basis Q
    s = A.shape[0]
    G = np.zeros((s, s))
    for j in range(s):
        norms = np.linalg.norm(A, axis=0)
        top = norms.max()
        p = int(np.argmax(np.round(norms / top, digits)))
        g = A[:, p] / norms[p]
        G[:, j] = g
        A -= np.outer(g, g @ A)
    return Q @ G


def canonical_eigenbasis(values: np.ndarray, vectors: np.ndarray,
                         rel_tol: float = 1e-8) -> np.ndarray:
    """Canonical eigenvectors: sign rule on simple eigenvalues, pivoted basis on clusters."""
    out = np.array(vectors, dtype=np.float64, copy=True)
    for sl in eigen_clusters(values, rel_tol):
        if sl.stop - sl.start == 1:
            out[:, sl] = canonical_signs(out[:, sl])
        else:
            out[:, sl] = _canonical_cluster_basis(out[:, sl])
    return out


def check_symmetric(op: LinearOperator, seed: int = 0, tol: float = 1e-8) -> None:
    if op.dim_in != op.dim_out:
        raise ContractError(f"operator is not square ({op.dim_out}x{op.dim_in})")
    rng = np.random.default_rng(seed ^ 0x5EED)
    x, y = rng.standard_normal(op.dim_in), rng.standard_normal(op.dim_in)
    Ax, Ay = op.apply(x), op.apply(y)
    gap = abs(Ax @ y - x @ Ay)
    scale = max(np.linalg.norm(Ax) * np.linalg.norm(y), np.linalg.norm(Ay) * np.linalg.norm(x))
    if gap > tol * max(scale, 1e-300):
        raise ContractError(f"operator is not symmetric: <Ax,y>-<x,Ay> = {gap:.3e}")


# DGKS criterion: repeat the projection only if it removed most of w's norm
_REORTH_ETA = 1.0 / np.sqrt(2.0)


def _orthogonalize(w: Vec, B: np.ndarray) -> tuple[Vec, Vec]:
    """Classical Gram-Schmidt against the orthonormal rows of B, with a second
    pass when the first cancels heavily."""
    before = np.linalg.norm(w)
    h = B @ w
    w = w - B.T @ h
    if np.linalg.norm(w) < _REORTH_ETA * before:
        h2 = B @ w
        w = w - B.T @ h2
        h = h + h2
    return w, h


def _random_orthogonal(rng, B: np.ndarray) -> Vec:
    for _ in range(5):
        w = rng.standard_normal(B.shape[1])
        w, _ = _orthogonalize(w, B)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            return w / nrm
    # random draws can all fall in a subspace (e.g. when the operator itself was
    # generated from the same stream); fall back to the best coordinate vector
    resid = 1.0 - np.einsum("ij,ij->j", B, B)
    i = int(np.argmax(resid))
    if resid[i] > 1e-8:
        w = np.zeros(B.shape[1])
        w[i] = 1.0
        w, _ = _orthogonalize(w, B)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            return w / nrm
    raise ConvergenceError("could not extend the Krylov basis (space exhausted)")


def _thick_restart_lanczos(op: LinearOperator, k: int, converged: Callable, max_iters: int,
                           seed: int, ncv: int | None = None):
    n = op.dim_in
    if ncv is None:
        ncv = n if n <= max(100, 10 * k) else min(n, max(2 * k + 1, k + 32))
    ncv = max(min(ncv, n), k)
    rng = np.random.default_rng(seed)
    # basis vectors are rows so every prefix B[:j] is contiguous for BLAS
    B = np.zeros((ncv, n))
    H = np.zeros((ncv, ncv))
    v = rng.standard_normal(n)
    B[0] = v / np.linalg.norm(v)
    kept = 0
    matvecs = 0
    while True:
        for j in range(kept, ncv):
            w = op.apply(B[j])
            matvecs += 1
            w, h = _orthogonalize(w, B[: j + 1])
            H[: j + 1, j] = h
            H[j, : j + 1] = h
            beta = np.linalg.norm(w)
            if j + 1 < ncv:
                scale = max(np.abs(H[: j + 1, : j + 1]).max(), 1e-300)
                if beta <= 1e-12 * scale:
                    B[j + 1] = _random_orthogonal(rng, B[: j + 1])
                else:
                    B[j + 1] = w / beta
        theta, S = np.linalg.eigh(H)
        # contiguous copy: reversed views would push matmul off the BLAS path
        theta, S = theta[::-1].copy(), np.ascontiguousarray(S[:, ::-1])
        res = beta * np.abs(S[-1, :])
        done = converged(theta[:k], res[:k])
        if np.all(done) or matvecs >= max_iters or ncv == n:
            vecs = (np.ascontiguousarray(S[:, :k].T) @ B).T
            return theta[:k], vecs, res[:k], matvecs, bool(np.all(done))
        # keep the wanted Ritz vectors plus a quarter of the rest as buffer
        kept = min(ncv - 1, k + (ncv - k) // 4)
        B[:kept] = np.ascontiguousarray(S[:, :kept].T) @ B
        H[:] = 0.0
        H[np.arange(kept), np.arange(kept)] = theta[:kept]
        if beta <= 1e-12 * max(np.abs(theta).max(), 1e-300):
            B[kept] = _random_orthogonal(rng, B[:kept])
        else:
            B[kept] = w / beta


def lanczos_eigs(op: LinearOperator, k: int, tol: float = 1e-10, max_iters: int | None = None,
                 seed: int = 0, ncv: int | None = None, check: bool = True) -> EigResult:
    """The k algebraically largest eigenpairs of a symmetric operator.

    Converged pairs satisfy ||A q - lambda q|| <= tol * |lambda_max|.
    ``max_iters`` bounds the number of operator applications (default 10 k,
    but never less than one full Krylov cycle).
    """
    n = op.dim_in
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} must lie in [1, {n}]")
    if check:
        check_symmetric(op, seed)
    if max_iters is None:
        max_iters = 10 * k

    def conv(theta, res):
        return res <= tol * max(np.abs(theta).max(), 1e-300)

    theta, vecs, res, mv, ok = _thick_restart_lanczos(op, k, conv, max_iters, seed, ncv)
    if not ok:
        raise ConvergenceError(
            f"Lanczos did not converge in {mv} operator applications "
            f"(max residual {res.max():.3e}, tol {tol:.1e})", residuals=res)
    return EigResult(theta, canonical_eigenbasis(theta, vecs), res, mv)


def truncated_svd(op: LinearOperator, r: int, tol: float = 1e-8, max_iters: int | None = None,
                  seed: int = 0, drop_tol: float = 1e-10, ncv: int | None = None) -> SvdTriple:
    """Leading r singular triples via Lanczos on the Gram operator A^T A.

    Singular values below ``drop_tol * sigma_1`` are discarded, so the
    returned rank may be smaller than r. A final Rayleigh-Ritz step on the
    converged right subspace makes U and V orthonormal to working precision.
    """
    if op.apply_adjoint is None:
        raise ContractError("truncated_svd needs apply_adjoint")
    if not 1 <= r <= min(op.dim_in, op.dim_out):
        raise ParameterError(f"r={r} must lie in [1, {min(op.dim_in, op.dim_out)}]")
    G = op.gram()
    if max_iters is None:
        max_iters = max(10 * r, 200)

    def conv(theta, res):
        s1 = np.sqrt(max(theta.max(), 0.0))
        sig = np.sqrt(np.maximum(theta, 0.0))
        negligible = sig <= drop_tol * s1
        # ||A^T u - s v|| = ||G v - s^2 v|| / s for u = A v / s
        return negligible | (res <= tol * s1 * np.maximum(sig, 1e-300))

    theta, V, res, mv, ok = _thick_restart_lanczos(G, r, conv, max_iters, seed, ncv)
    if not ok:
        raise ConvergenceError(
            f"truncated SVD did not converge in {mv} Gram applications "
            f"(max residual {res.max():.3e})", residuals=res)
    sig = np.sqrt(np.maximum(theta, 0.0))
    keep = sig > drop_tol * sig[0] if sig[0] > 0 else np.zeros(sig.size, bool)
    V = V[:, keep]
    if V.shape[1] == 0:
        return SvdTriple(np.zeros((op.dim_out, 0)), np.zeros(0), np.zeros((op.dim_in, 0)), mv)
    AV = np.column_stack([op.apply(V[:, j]) for j in range(V.shape[1])])
    Q, R = np.linalg.qr(AV)
    Ur, S, Vrt = np.linalg.svd(R)
    U, V = Q @ Ur, V @ Vrt.T
    keep = S > drop_tol * S[0]
    U, S, V = U[:, keep], S[keep], V[:, keep]
    flip = sign_vector(V)
    return SvdTriple(U * flip[None, :], S, V * flip[None, :], mv)


def dense_svd(A: np.ndarray, complete: bool = False) -> SvdTriple:
    """Exact SVD; with ``complete`` U spans the whole output space.

    The complete form pads S with zeros so that U has dim_out columns and V
    has dim_in columns (used by the verification mode of the pipeline).
    """
    A = np.asarray(A, dtype=np.float64)
    U, S, Vt = np.linalg.svd(A, full_matrices=complete)
    V = Vt.T
    if complete:
        rows, cols = A.shape
        S = np.concatenate([S, np.zeros(max(rows, cols) - S.size)])
    return SvdTriple(U, S, V)
