"""Downstream evaluation: node classification, hyperedge link prediction,
hyperedge classification, and similarity reconstruction error."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .core import AttributedHypergraph, EmbeddingMatrix, SimilarityMatrix
from .errors import DegenerateStructureError, DimensionError, ParameterError, ValidationError
from .params import mix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.2
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ParameterError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.repeats < 1:
            raise ParameterError("repeats must be >= 1")

    def split(self, n_items: int, repeat: int) -> tuple[np.ndarray, np.ndarray]:
        """(train, test) index arrays; a pure function of (seed, repeat)."""
        if n_items < 2:
            raise ParameterError("need at least 2 items to split")
        rng = np.random.default_rng(mix(self.seed, repeat))
        perm = rng.permutation(n_items)
        n_train = min(max(int(round(self.train_fraction * n_items)), 1), n_items - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass
class TaskReport:
    task: str
    values: dict[str, list[float]] = field(default_factory=dict)

    def add(self, **metrics: float) -> None:
        for name, v in metrics.items():
            self.values.setdefault(name, []).append(float(v))

    def mean(self, metric: str) -> float:
        return float(np.mean(self.values[metric]))

    def std(self, metric: str) -> float:
        return float(np.std(self.values[metric]))

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "repeats": {k: list(v) for k, v in self.values.items()},
            "mean": {k: self.mean(k) for k in self.values},
            "std": {k: self.std(k) for k in self.values},
        }

    def table(self) -> str:
        lines = [f"{self.task}", f"{'metric':<8} {'mean':>8} {'std':>8}"]
        for k in self.values:
            lines.append(f"{k:<8} {self.mean(k):8.4f} {self.std(k):8.4f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LinearModel:
    """One-vs-rest logistic model over standardized features."""

    weights: np.ndarray
    bias: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    classes: np.ndarray

    def scores(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return Xs @ self.weights + self.bias

    def proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.scores(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.scores(X), axis=1)]


def train_linear(X: np.ndarray, y: np.ndarray, epochs: int = 500, lr: float = 0.1,
                 l2: float = 1e-4, seed: int = 0) -> LinearModel:
    """Full-batch gradient descent on independent per-class logistic losses."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError("features and labels disagree in length")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValidationError("training labels contain a single class")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Xs = (X - mean) / scale
    Y = (y[:, None] == classes[None, :]).astype(np.float64)
    rng = np.random.default_rng(seed)
    W = 0.01 * rng.standard_normal((X.shape[1], classes.size))
    b = np.zeros(classes.size)
    n = X.shape[0]
    for _ in range(epochs):
        G = expit(Xs @ W + b) - Y
        W -= lr * (Xs.T @ G / n + l2 * W)
        b -= lr * G.mean(axis=0)
    return LinearModel(W, b, mean, scale, classes)


def micro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    # single-label multiclass: micro-averaged F1 is accuracy
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean per-class F1 over the classes present in y_true."""
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    f1 = []
    for c in np.unique(y_true):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        f1.append(2 * tp / (2 * tp + fp + fn))
    return float(np.mean(f1))


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability that a random positive outscores a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both positive and negative items")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _classification_eval(task: str, Z: np.ndarray, labels: np.ndarray,
                         split: SplitSpec) -> TaskReport:
    labels = np.asarray(labels)
    if Z.shape[0] != labels.shape[0]:
        raise DimensionError(f"{Z.shape[0]} embedding rows but {labels.shape[0]} labels")
    report = TaskReport(task)
    all_classes = np.unique(labels)
    for rep in range(split.repeats):
        tr, te = split.split(labels.size, rep)
        missing = np.setdiff1d(all_classes, labels[tr])
        if missing.size:
            log.warning("%s repeat %d: classes %s absent from training data",
                        task, rep, missing.tolist())
        model = train_linear(Z[tr], labels[tr], seed=mix(split.seed, 1000 + rep))
        pred = model.predict(Z[te])
        report.add(MiF1=micro_f1(labels[te], pred), MaF1=macro_f1(labels[te], pred))
    return report


def _as_array(Z) -> np.ndarray:
    return Z.data if isinstance(Z, EmbeddingMatrix) else np.asarray(Z, dtype=np.float64)


def node_classification_eval(Z_V, node_labels: np.ndarray,
                             split: SplitSpec = SplitSpec(0.2)) -> TaskReport:
    return _classification_eval("node_classification", _as_array(Z_V), node_labels, split)


def hyperedge_classification_eval(Z_E, edge_labels: np.ndarray,
                                  split: SplitSpec = SplitSpec(0.2)) -> TaskReport:
    return _classification_eval("hyperedge_classification", _as_array(Z_E), edge_labels, split)


def spread_features(Z: np.ndarray, edges: list[tuple[int, ...]]) -> np.ndarray:
    """Elementwise max minus elementwise min of member embeddings, per hyperedge."""
    out = np.empty((len(edges), Z.shape[1]))
    for i, e in enumerate(edges):
        rows = Z[list(e)]
        out[i] = rows.max(axis=0) - rows.min(axis=0)
    return out


def sample_negatives(edges: list[tuple[int, ...]], n: int, forbidden: set[frozenset],
                     rng: np.random.Generator, max_tries: int = 1000) -> list[tuple[int, ...]]:
    """One random node set per hyperedge, of the same size, never equal to a real one."""
    out = []
    for e in edges:
        size = len(e)
        for _ in range(max_tries):
            cand = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            if frozenset(cand) not in forbidden:
                break
        else:
            raise DegenerateStructureError(
                f"could not sample a negative of size {size} distinct from all hyperedges")
        out.append(cand)
    return out


def link_prediction_eval(H: AttributedHypergraph,
                         embed: Callable[[AttributedHypergraph], EmbeddingMatrix] | EmbeddingMatrix,
                         split: SplitSpec = SplitSpec(0.8), negative_seed: int = 0) -> TaskReport:
    """Classify real hyperedges against same-size random node sets.

    ``embed`` is called on the training sub-hypergraph of every split so the
    node embeddings never see test hyperedges; a fixed EmbeddingMatrix is
    also accepted (then the caller is responsible for that separation).
    """
    edges = H.hyperedges()
    forbidden = {frozenset(e) for e in edges}
    report = TaskReport("link_prediction")
    for rep in range(split.repeats):
        tr, te = split.split(len(edges), rep)
        if te.size == 0:
            raise ValidationError("empty test split")
        Z = _as_array(embed if not callable(embed) else embed(H.with_edges(tr)))
        rng = np.random.default_rng(mix(negative_seed, rep))
        train_pos = [edges[i] for i in tr]
        test_pos = [edges[i] for i in te]
        train_neg = sample_negatives(train_pos, H.n, forbidden, rng)
        test_neg = sample_negatives(test_pos, H.n, forbidden, rng)
        X_tr = spread_features(Z, train_pos + train_neg)
        y_tr = np.r_[np.ones(len(train_pos)), np.zeros(len(train_neg))].astype(np.int64)
        X_te = spread_features(Z, test_pos + test_neg)
        y_te = np.r_[np.ones(len(test_pos)), np.zeros(len(test_neg))].astype(np.int64)
        model = train_linear(X_tr, y_tr, seed=mix(split.seed, 2000 + rep))
        p = model.proba(X_te)[:, list(model.classes).index(1)]
        report.add(Acc=np.mean((p >= 0.5) == (y_te == 1)), AUC=roc_auc(p, y_te))
    return report


def similarity_mae(Z, S) -> float:
    """Mean absolute difference of S and Z Z^T after scaling each by its diagonal mean."""
    Z = _as_array(Z)
    S = S.data if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    if S.shape != (Z.shape[0], Z.shape[0]):
        raise DimensionError(f"similarity {S.shape} does not match {Z.shape[0]} embedding rows")
    G = Z @ Z.T
    ds, dg = float(np.mean(np.diag(S))), float(np.mean(np.diag(G)))
    if ds <= 0 or dg <= 0:
        raise DegenerateStructureError("zero diagonal mean; normalization undefined")
    return float(np.mean(np.abs(S / ds - G / dg)))
