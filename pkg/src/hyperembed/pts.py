"""Polynomial tensor sketch of tlog(F F^T).

tlog(x) on the Gram entries is replaced by a degree-tau polynomial
sum_j c_j x^j, and each power (F F^T)^{o j} (elementwise) by the Gram matrix of
degree-j tensor sketches TS_j(F). Stacking a ones column and the sketches
into Y and the coefficients into a diagonal Theta gives

    tlog(F F^T) ~= Gamma = Y Theta Y^T,

which is applied to vectors in O(rows * tau * b) without forming Gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import tlog
from .errors import DenseCapError, ParameterError
from .linalg import LinearOperator
from .params import DEFAULT_DENSE_CAP, mix

_U64 = np.uint64


def _is_pow2(b: int) -> bool:
    return b >= 1 and (b & (b - 1)) == 0


def _multiply_shift(keys: np.ndarray, a: int, c: int, out_bits: int) -> np.ndarray:
    """Pairwise-independent multiply-add-shift hash onto ``out_bits`` bits."""
    if out_bits == 0:
        return np.zeros(keys.shape, dtype=np.int64)
    with np.errstate(over="ignore"):
        h = keys.astype(_U64) * _U64(a | 1) + _U64(c)
    return (h >> _U64(64 - out_bits)).astype(np.int64)


def count_sketch_matrix(dim: int, b: int, seed: int, identity: bool = False) -> sp.csr_matrix:
    """Sparse dim x b count-sketch matrix: one signed 1 per input coordinate."""
    if not _is_pow2(b):
        raise ParameterError(f"sketch dimension b must be a power of two, got {b}")
    keys = np.arange(dim, dtype=np.int64)
    if identity:
        if b < dim:
            raise ParameterError("identity hashing needs b >= input dimension")
        buckets, signs = keys, np.ones(dim)
    else:
        bits = b.bit_length() - 1
        buckets = _multiply_shift(keys, mix(seed, 0), mix(seed, 1), bits)
        signs = 1.0 - 2.0 * _multiply_shift(keys, mix(seed, 2), mix(seed, 3), 1)
    return sp.csr_matrix((signs, (keys, buckets)), shape=(dim, b))


def tensor_sketch(F: np.ndarray, tau: int, b: int, seed: int,
                  identity: bool = False) -> list[np.ndarray]:
    """Degree-1..tau tensor sketches of the rows of F.

    TS_j(x) is the circular convolution of j independent count sketches of x,
    computed as a product in the Fourier domain; <TS_j(x), TS_j(y)> is an
    unbiased estimate of <x, y>^j.
    """
    if tau < 1 or b < 1:
        raise ParameterError("tau and b must be >= 1")
    if identity and tau > 1:
        raise ParameterError("identity hashing is a degree-1 debugging aid (tau must be 1)")
    F = np.asarray(F, dtype=np.float64)
    blocks = []
    acc = None
    for j in range(tau):
        CS = np.asarray(F @ count_sketch_matrix(F.shape[1], b, mix(seed, 10 + j), identity).toarray())
        fj = np.fft.rfft(CS, axis=1)
        acc = fj if acc is None else acc * fj
        blocks.append(np.fft.irfft(acc, n=b, axis=1))
    return blocks


@dataclass(frozen=True)
class CoefficientFit:
    coefficients: np.ndarray
    method: str
    # sampled range of Gram entries widened by FIT_MARGIN of its width per side
    interval: tuple[float, float]
    rms_error: float
    n_samples: int


FIT_MARGIN = 0.1


def max_fit_error(coefficients: np.ndarray, interval: tuple[float, float], target=tlog,
                  n_grid: int = 4097) -> float:
    """Sup-norm distance between the polynomial and ``target`` on a grid over ``interval``."""
    x = np.linspace(interval[0], interval[1], n_grid)
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(x, coefficients) - target(x))))


def sample_gram_entries(F: np.ndarray, c: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Gram entries of c sampled rows against all rows, plus the full diagonal.

    Taking whole rows (c * rows entries) rather than c single pairs keeps the
    regression well posed at c = 10 while staying linear in the row count.
    Returns the entries and regression weights: the diagonal is sampled in
    full while off-diagonal entries are sampled at rate c / rows, so diagonal
    entries get weight c / rows to keep the weighted loss an unbiased
    estimate of the loss over the whole Gram matrix.
    """
    F = np.asarray(F, dtype=np.float64)
    rng = np.random.default_rng(seed)
    rows = F.shape[0]
    pick = rng.choice(rows, size=min(c, rows), replace=False)
    x = np.concatenate([(F[pick] @ F.T).ravel(), np.einsum("ij,ij->i", F, F)])
    w = np.ones_like(x)
    w[pick.size * rows:] = pick.size / rows
    return x, w


def fit_polynomial(x: np.ndarray, tau: int, target=tlog,
                   weights: np.ndarray | None = None) -> CoefficientFit:
    x = np.asarray(x, dtype=np.float64)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    y = target(x)
    lo, hi = float(x.min()), float(x.max())
    scale = max(abs(lo), abs(hi), 1e-300)
    if hi - lo <= 1e-12 * max(1.0, scale):
        coef = np.zeros(tau + 1)
        coef[0] = float(target(np.array([0.5 * (lo + hi)]))[0])
        method = "constant"
    elif np.unique(x).size < tau + 1:
        # too few distinct abscissae for least squares: interpolate tlog itself
        t = np.cos(np.pi * (2 * np.arange(tau + 1) + 1) / (2 * tau + 2))
        nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
        V = np.vander(nodes / scale, tau + 1, increasing=True)
        coef = np.linalg.solve(V, target(nodes)) / scale ** np.arange(tau + 1)
        method = "interpolation"
    else:
        sw = np.sqrt(w)
        V = np.vander(x / scale, tau + 1, increasing=True)
        d, *_ = np.linalg.lstsq(V * sw[:, None], y * sw, rcond=None)
        coef = d / scale ** np.arange(tau + 1)
        method = "least_squares"
    pred = np.polynomial.polynomial.polyval(x, coef)
    pad = FIT_MARGIN * (hi - lo)
    rms = float(np.sqrt(np.sum(w * (pred - y) ** 2) / np.sum(w)))
    return CoefficientFit(coef, method, (lo - pad, hi + pad), rms, x.size)


def fit_coefficients(F: np.ndarray, tau: int, c: int, seed: int, target=tlog) -> CoefficientFit:
    """Weighted least-squares polynomial fit of ``target`` over sampled Gram entries of F."""
    if c < tau + 1:
        raise ParameterError(f"sample count c={c} must be >= tau+1={tau + 1}")
    x, w = sample_gram_entries(F, c, seed)
    return fit_polynomial(x, tau, target, w)


@dataclass(frozen=True, eq=False)
class PtsFactor:
    Y: np.ndarray
    theta: np.ndarray
    tau: int
    b: int
    coefficients: np.ndarray
    seed: int
    fit: CoefficientFit | None = field(default=None, repr=False)

    @property
    def rows(self) -> int:
        return self.Y.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.rows:
            raise ParameterError(f"vector length {v.shape[0]} != factor rows {self.rows}")
        return self.Y @ (self.theta * (self.Y.T @ v))

    def operator(self) -> LinearOperator:
        return LinearOperator(self.rows, self.rows, self.apply, self.apply)

    def range_form(self, rel_tol: float = 1e-13) -> "RangeForm":
        """Gamma written in an orthonormal basis of range(Y)."""
        M = self.Y.T @ self.Y
        mu, E = np.linalg.eigh(0.5 * (M + M.T))
        keep = mu > rel_tol * max(mu.max(), 1e-300)
        mu, E = mu[keep], E[:, keep]
        root = np.sqrt(mu)
        C = root[:, None] * ((E.T * self.theta[None, :]) @ E) * root[None, :]
        return RangeForm(0.5 * (C + C.T), E / root[None, :], self.Y)

    def materialize(self, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        if self.rows > cap:
            raise DenseCapError(f"refusing to materialize a {self.rows}^2 Gamma (cap {cap})")
        return (self.Y * self.theta[None, :]) @ self.Y.T


@dataclass(frozen=True, eq=False)
class RangeForm:
    """Gamma = Q C Q^T with Q = Y @ lift having orthonormal columns.

    Gamma maps everything into range(Y), so its nonzero spectrum is the
    spectrum of the small matrix C and eigenvectors lift as Q u. The lift
    drops directions of range(Y) whose Gram eigenvalue is below
    ``rel_tol`` times the largest.
    """

    C: np.ndarray
    lift: np.ndarray
    Y: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    def operator(self) -> LinearOperator:
        C = self.C
        return LinearOperator(self.dim, self.dim, lambda x: C @ x, lambda x: C @ x)

    def lift_vectors(self, U: np.ndarray) -> np.ndarray:
        return self.Y @ (self.lift @ U)


def pts_apply(factor: PtsFactor, v: np.ndarray) -> np.ndarray:
    return factor.apply(v)


def build_pts(F: np.ndarray, tau: int = 3, b: int = 128, c: int = 10, seed: int = 0,
              coefficients: np.ndarray | None = None, identity_hash: bool = False) -> PtsFactor:
    """Sketch tlog(F F^T) as Y Theta Y^T.

    Column 0 of Y is all ones (carrying c_0); block j holds TS_j(F) with c_j
    replicated over its b columns.
    """
    F = np.asarray(F, dtype=np.float64)
    fit = None
    if coefficients is None:
        fit = fit_coefficients(F, tau, c, mix(seed, 100))
        coefficients = fit.coefficients
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.shape != (tau + 1,):
        raise ParameterError(f"expected {tau + 1} coefficients")
    blocks = tensor_sketch(F, tau, b, seed, identity=identity_hash)
    width = blocks[0].shape[1]
    Y = np.empty((F.shape[0], 1 + tau * width))
    Y[:, 0] = 1.0
    for j, blk in enumerate(blocks):
        Y[:, 1 + j * width: 1 + (j + 1) * width] = blk
    theta = np.concatenate([[coefficients[0]], np.repeat(coefficients[1:], width)])
    return PtsFactor(Y, theta, tau, b, coefficients, seed, fit)


def sketch_error_bound(F: np.ndarray, coefficients: np.ndarray, b: int, eps: float) -> float:
    """Right-hand side of the expected squared-error bound of the sketch."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    tau = len(coefficients) - 1
    sq = np.einsum("ij,ij->i", F, F)
    total = 2.0 * n * n * eps * eps
    for i in range(1, tau + 1):
        total += 2 * tau * (2 + 3 ** i) * coefficients[i] ** 2 / b * np.sum(sq ** i) ** 2
    return float(total)
