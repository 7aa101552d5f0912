"""Embedding hyperparameters and the seed-derivation helper."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ParameterError

DEFAULT_DENSE_CAP = 20_000
_MASK64 = (1 << 64) - 1


def mix(seed: int, stream: int) -> int:
    """Derive an independent 63-bit seed for ``stream`` (splitmix64 finalizer)."""
    z = (int(seed) * 0x9E3779B97F4A7C15 + (int(stream) + 1) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) >> 1


@dataclass(frozen=True)
class EmbedParams:
    K: int = 10
    beta: float = 1.0
    alpha: float = 0.1
    T: int = 10
    r: int = 32
    k: int = 32
    tau: int = 3
    b: int = 128
    c: int = 10
    seed: int = 42
    knn: str = "auto"
    # exact: dense SVD and dense tlog(F F^T) instead of Lanczos SVD + sketching
    exact: bool = False
    dense_cap: int = DEFAULT_DENSE_CAP
    svd_tol: float = 1e-8
    eig_tol: float = 1e-8
    max_iters: int | None = None
    # "range": Lanczos on Gamma in an orthonormal basis of range(Y);
    # "operator": Lanczos directly on v -> Y Theta Y^T v
    eig_space: str = "range"

    def validate(self) -> "EmbedParams":
        checks = [
            (0.0 <= self.alpha < 1.0, f"alpha must lie in [0, 1), got {self.alpha}"),
            (self.beta > 0, f"beta must be positive, got {self.beta}"),
            (self.K >= 1, f"K must be >= 1, got {self.K}"),
            (self.T >= 1, f"T must be >= 1, got {self.T}"),
            (self.k >= 1, f"k must be >= 1, got {self.k}"),
            (self.r >= self.k, f"r must be >= k (r={self.r}, k={self.k})"),
            (self.tau >= 1, f"tau must be >= 1, got {self.tau}"),
            (self.b >= 1 and (self.b & (self.b - 1)) == 0,
             f"b must be a power of two, got {self.b}"),
            (self.c >= 1, f"c must be >= 1, got {self.c}"),
            (self.knn in ("auto", "exact", "approx"), f"unknown knn method {self.knn!r}"),
            (self.dense_cap >= 1, "dense_cap must be positive"),
            (self.eig_space in ("range", "operator"), f"unknown eig_space {self.eig_space!r}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ParameterError(msg, stage="params")
        return self

    def to_dict(self) -> dict:
        return asdict(self)
