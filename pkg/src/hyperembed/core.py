"""Hypergraph containers, generalized degrees, and file formats."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateStructureError,
    DimensionError,
    EmbeddingFormatError,
    ParseError,
    ValidationError,
)

__all__ = [
    "SparseIncidence",
    "AttributedHypergraph",
    "ExtendedHypergraph",
    "EmbeddingMatrix",
    "SimilarityMatrix",
    "degrees_and_volume",
    "tlog",
    "load_hypergraph",
    "read_hyperedges",
    "read_attributes",
    "read_labels",
    "write_hypergraph",
    "write_attributes",
    "write_labels",
    "save_embeddings",
    "load_embeddings",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseIncidence:
    """Row-compressed incidence: rows are hyperedges, columns are nodes.

    ``values[k]`` holds the hyperedge-dependent node weight of node
    ``col_indices[k]`` in the hyperedge owning slot ``k``.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        offs = np.asarray(self.row_offsets, dtype=np.int64)
        cols = np.asarray(self.col_indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if offs.shape != (self.n_rows + 1,) or offs[0] != 0:
            raise ValidationError("row_offsets must have length n_rows+1 and start at 0")
        if np.any(np.diff(offs) < 0):
            raise ValidationError("row_offsets must be non-decreasing")
        if offs[-1] != cols.size or cols.size != vals.size:
            raise ValidationError("row_offsets[-1] must equal the number of stored entries")
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_cols):
            raise ValidationError("column index out of range")
        if np.any(~(vals > 0)) or not np.all(np.isfinite(vals)):
            raise ValidationError("incidence values must be strictly positive and finite")
        # sorted + unique within each row <=> strictly increasing except at row starts
        if cols.size > 1:
            step = np.diff(cols)
            row_start = np.zeros(cols.size, dtype=bool)
            row_start[offs[1:-1][offs[1:-1] < cols.size]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValidationError("column indices must be sorted and unique within each row")
        object.__setattr__(self, "row_offsets", _frozen(offs))
        object.__setattr__(self, "col_indices", _frozen(cols))
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], n_cols: int,
                  values: Sequence[Sequence[float]] | None = None) -> "SparseIncidence":
        offs = np.zeros(len(rows) + 1, dtype=np.int64)
        cols_parts, vals_parts = [], []
        for i, r in enumerate(rows):
            c = np.asarray(r, dtype=np.int64)
            v = np.ones(c.size) if values is None else np.asarray(values[i], dtype=np.float64)
            order = np.argsort(c, kind="stable")
            cols_parts.append(c[order])
            vals_parts.append(v[order])
            offs[i + 1] = offs[i] + c.size
        cols = np.concatenate(cols_parts) if cols_parts else np.zeros(0, np.int64)
        vals = np.concatenate(vals_parts) if vals_parts else np.zeros(0)
        return cls(len(rows), n_cols, offs, cols, vals)

    @classmethod
    def from_scipy(cls, m: sp.spmatrix) -> "SparseIncidence":
        m = sp.csr_matrix(m, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                             shape=(self.n_rows, self.n_cols))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    def row_sizes(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def row_ids(self) -> np.ndarray:
        """Owning row of every stored entry."""
        return np.repeat(np.arange(self.n_rows), self.row_sizes())

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[a:b], self.values[a:b]

    def rows(self) -> list[tuple[int, ...]]:
        return [tuple(int(c) for c in self.row(i)[0]) for i in range(self.n_rows)]

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def vstack(self, other: "SparseIncidence") -> "SparseIncidence":
        if other.n_cols != self.n_cols:
            raise DimensionError("cannot stack incidences with different node counts")
        offs = np.concatenate([self.row_offsets, other.row_offsets[1:] + self.nnz])
        return SparseIncidence(self.n_rows + other.n_rows, self.n_cols, offs,
                               np.concatenate([self.col_indices, other.col_indices]),
                               np.concatenate([self.values, other.values]))

    def take_rows(self, idx: Iterable[int]) -> "SparseIncidence":
        return SparseIncidence.from_scipy(self.csr[np.asarray(list(idx), dtype=np.int64)])


@dataclass(frozen=True, eq=False)
class AttributedHypergraph:
    incidence: SparseIncidence
    attributes: np.ndarray
    node_labels: np.ndarray | None = None
    edge_labels: np.ndarray | None = None
    # original id of every dense node index, when loaded from files
    node_ids: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.attributes, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionError("attributes must be a 2-d matrix")
        if X.shape[0] != self.incidence.n_cols:
            raise DimensionError(
                f"attribute rows ({X.shape[0]}) != number of nodes ({self.incidence.n_cols})")
        small = np.flatnonzero(self.incidence.row_sizes() < 2)
        if small.size:
            raise ValidationError(f"hyperedge {int(small[0])} has fewer than 2 nodes")
        object.__setattr__(self, "attributes", _frozen(X))
        for name, expected in (("node_labels", self.n), ("edge_labels", self.m)):
            lab = getattr(self, name)
            if lab is not None:
                lab = np.asarray(lab, dtype=np.int64)
                if lab.shape != (expected,):
                    raise DimensionError(f"{name} has length {lab.size}, expected {expected}")
                object.__setattr__(self, name, _frozen(lab))

    @property
    def n(self) -> int:
        return self.incidence.n_cols

    @property
    def m(self) -> int:
        return self.incidence.n_rows

    @property
    def q(self) -> int:
        return self.attributes.shape[1]

    def hyperedges(self) -> list[tuple[int, ...]]:
        return self.incidence.rows()

    def with_edges(self, keep: np.ndarray) -> "AttributedHypergraph":
        """Sub-hypergraph on the same nodes keeping only hyperedges ``keep``."""
        keep = np.asarray(keep, dtype=np.int64)
        return AttributedHypergraph(
            self.incidence.take_rows(keep), self.attributes, self.node_labels,
            None if self.edge_labels is None else self.edge_labels[keep], self.node_ids)


@dataclass(frozen=True, eq=False)
class ExtendedHypergraph:
    """Original hyperedges (first ``m_original`` rows) stacked on attribute hyperedges."""

    incidence: SparseIncidence
    node_degrees: np.ndarray
    edge_degrees: np.ndarray
    edge_weights: np.ndarray
    volume: float
    m_original: int

    def __post_init__(self):
        for name in ("node_degrees", "edge_degrees", "edge_weights"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), np.float64)))
        if self.node_degrees.shape != (self.n,):
            raise DimensionError("node_degrees length must equal the node count")
        if self.edge_degrees.shape != (self.incidence.n_rows,) or \
                self.edge_weights.shape != (self.incidence.n_rows,):
            raise DimensionError("edge degree/weight length must equal the hyperedge count")

    @property
    def n(self) -> int:
        return self.incidence.n_cols

    @property
    def m(self) -> int:
        """Number of original (structural) hyperedges."""
        return self.m_original

    @property
    def n_edges(self) -> int:
        return self.incidence.n_rows


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    data: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.data, dtype=np.float64)
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        if Z.ndim != 2 or lam.shape != (Z.shape[1],):
            raise DimensionError("eigenvalues must have one entry per embedding column")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(lam))):
            raise ValidationError("embedding contains NaN or Inf")
        if np.any(np.diff(lam) > 0):
            raise ValidationError("eigenvalues must be sorted descending")
        if np.any(lam < 0):
            raise ValidationError("scaling eigenvalues must be non-negative")
        object.__setattr__(self, "data", _frozen(Z))
        object.__setattr__(self, "eigenvalues", _frozen(lam))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[1]

    def gram(self) -> np.ndarray:
        return self.data @ self.data.T


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    data: np.ndarray
    check_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        S = np.asarray(self.data, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionError("similarity matrix must be square")
        if S.size and np.max(np.abs(S - S.T)) > self.check_tol:
            raise ValidationError(
                f"similarity matrix asymmetric by {np.max(np.abs(S - S.T)):.3e}")
        object.__setattr__(self, "data", _frozen(S))

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def tlog(x):
    """Truncated logarithm log(max(x, 1)), elementwise."""
    return np.log(np.maximum(x, 1.0))


def degrees_and_volume(incidence: SparseIncidence, weights) -> tuple[np.ndarray, np.ndarray, float]:
    """Generalized node degrees, hyperedge degrees and volume.

    d(v) = sum_e w(e) gamma(v, e);  delta(e) = sum_{v in e} gamma(v, e).
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (incidence.n_rows,):
        raise DimensionError(f"weights length {w.size} != hyperedge count {incidence.n_rows}")
    rid = incidence.row_ids()
    De = np.bincount(rid, weights=incidence.values, minlength=incidence.n_rows)
    Dv = np.bincount(incidence.col_indices, weights=incidence.values * w[rid],
                     minlength=incidence.n_cols)
    if np.any(De <= 0):
        raise DegenerateStructureError(f"empty hyperedge at row {int(np.argmin(De))}")
    if np.any(Dv <= 0):
        raise DegenerateStructureError(f"isolated node {int(np.argmin(Dv))} has zero degree")
    return Dv, De, float(Dv.sum())


# ---------------------------------------------------------------- file formats

def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_hyperedges(path) -> list[tuple[int, list[int]]]:
    """Return ``(line_number, node_ids)`` per hyperedge line."""
    edges = []
    for lineno, line in _content_lines(path):
        try:
            ids = [int(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"non-integer node id in {line!r}", path, lineno) from None
        if any(i < 0 for i in ids):
            raise ParseError("negative node id", path, lineno)
        if len(ids) < 2:
            raise ValidationError(f"{path}:{lineno}: hyperedge must contain at least 2 nodes")
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{path}:{lineno}: duplicate node within hyperedge")
        edges.append((lineno, ids))
    return edges


def read_attributes(path) -> np.ndarray:
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("empty attribute file", path) from None
    tok = header.split()
    sparse = tok[0].lower() == "sparse"
    if sparse:
        tok = tok[1:]
    if len(tok) != 2:
        raise ParseError("header must be 'n q' or 'sparse n q'", path, lineno)
    try:
        n, q = int(tok[0]), int(tok[1])
    except ValueError:
        raise ParseError("header must hold two integers", path, lineno) from None
    X = np.zeros((n, q))
    if sparse:
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'i j value'", path, lineno)
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"malformed triple {line!r}", path, lineno) from None
            if not (0 <= i < n and 0 <= j < q):
                raise ParseError(f"entry ({i}, {j}) outside {n}x{q}", path, lineno)
            X[i, j] += v
        return X
    row = 0
    for lineno, line in lines:
        if row >= n:
            raise DimensionError(f"{path}:{lineno}: more than {n} attribute rows")
        try:
            vals = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric attribute in {line!r}", path, lineno) from None
        if len(vals) != q:
            raise ParseError(f"expected {q} values, got {len(vals)}", path, lineno)
        X[row] = vals
        row += 1
    if row != n:
        raise DimensionError(f"{path}: header declares {n} rows but found {row}")
    return X


def read_labels(path) -> dict[int, int]:
    out = {}
    for lineno, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'id label'", path, lineno)
        try:
            out[int(parts[0])] = int(parts[1])
        except ValueError:
            raise ParseError(f"malformed label line {line!r}", path, lineno) from None
    return out


def load_hypergraph(hypergraph_path, attribute_path, node_label_path=None,
                    edge_label_path=None) -> AttributedHypergraph:
    """Parse a hypergraph, its attributes and optional labels.

    Attribute row ``i`` belongs to original node id ``i``; every attribute row
    is a node. Dense node indices follow first appearance in the hypergraph
    file, then the ids that appear in no hyperedge in ascending order.
    Label files key nodes by original id and hyperedges by line order.
    """
    edges = read_hyperedges(hypergraph_path)
    X = read_attributes(attribute_path)
    n = X.shape[0]
    order: dict[int, int] = {}
    for lineno, ids in edges:
        for i in ids:
            if i >= n:
                raise DimensionError(
                    f"{hypergraph_path}:{lineno}: node id {i} has no attribute row "
                    f"(attribute file has {n} rows)")
            if i not in order:
                order[i] = len(order)
    for i in range(n):
        if i not in order:
            order[i] = len(order)
    node_ids = np.empty(n, dtype=np.int64)
    for orig, dense in order.items():
        node_ids[dense] = orig
    rows = [[order[i] for i in ids] for _, ids in edges]
    inc = SparseIncidence.from_rows(rows, n)
    node_labels = edge_labels = None
    if node_label_path is not None:
        lab = read_labels(node_label_path)
        missing = [int(i) for i in node_ids if int(i) not in lab]
        if missing:
            raise ValidationError(f"{node_label_path}: no label for node id {missing[0]}")
        node_labels = np.array([lab[int(i)] for i in node_ids], dtype=np.int64)
    if edge_label_path is not None:
        lab = read_labels(edge_label_path)
        if sorted(lab) != list(range(len(edges))):
            raise DimensionError(
                f"{edge_label_path}: labels must cover hyperedges 0..{len(edges) - 1}")
        edge_labels = np.array([lab[j] for j in range(len(edges))], dtype=np.int64)
    return AttributedHypergraph(inc, X[node_ids], node_labels, edge_labels, node_ids)


def write_hypergraph(H: AttributedHypergraph, path) -> None:
    ids = H.node_ids if H.node_ids is not None else np.arange(H.n)
    with open(path, "w", encoding="utf-8") as fh:
        for e in H.hyperedges():
            fh.write(" ".join(str(int(ids[v])) for v in e) + "\n")


def write_attributes(H: AttributedHypergraph, path, sparse: bool | None = None) -> None:
    """Write attributes indexed by original node id."""
    ids = H.node_ids if H.node_ids is not None else np.arange(H.n)
    X = np.zeros_like(H.attributes)
    X[ids] = H.attributes
    if sparse is None:
        sparse = np.count_nonzero(X) < 0.25 * X.size
    with open(path, "w", encoding="utf-8") as fh:
        if sparse:
            fh.write(f"sparse {X.shape[0]} {X.shape[1]}\n")
            for i, j in zip(*np.nonzero(X)):
                fh.write(f"{i} {j} {X[i, j]:.17g}\n")
        else:
            fh.write(f"{X.shape[0]} {X.shape[1]}\n")
            for row in X:
                fh.write("\t".join(f"{v:.17g}" for v in row) + "\n")


def write_labels(labels: np.ndarray, path, ids: np.ndarray | None = None) -> None:
    ids = np.arange(len(labels)) if ids is None else ids
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in sorted(zip(ids.tolist(), np.asarray(labels).tolist())):
            fh.write(f"{i} {lab}\n")


_MAGIC = b"HEMB"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def save_embeddings(Z: EmbeddingMatrix, path, format: str = "binary") -> None:
    path = Path(path)
    if format == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, _VERSION, Z.rows, Z.k))
            fh.write(np.asarray(Z.eigenvalues, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(Z.data, dtype="<f8").tobytes())
    elif format == "text":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{Z.rows} {Z.k}\n")
            fh.write("# eigenvalues " + " ".join(f"{v:.17g}" for v in Z.eigenvalues) + "\n")
            for row in Z.data:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    else:
        raise ValueError(f"unknown embedding format {format!r}")


def load_embeddings(path) -> EmbeddingMatrix:
    """Load either format; binary is detected by its magic bytes."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == _MAGIC:
        if len(raw) < _HEADER.size:
            raise EmbeddingFormatError(
                f"{path}: truncated header: expected {_HEADER.size} bytes, got {len(raw)}")
        _, version, rows, k = _HEADER.unpack_from(raw)
        if version != _VERSION:
            raise EmbeddingFormatError(f"{path}: unsupported version {version}")
        expected = _HEADER.size + 8 * (k + rows * k)
        if len(raw) != expected:
            raise EmbeddingFormatError(
                f"{path}: expected {expected} bytes for {rows}x{k}, got {len(raw)}")
        lam = np.frombuffer(raw, dtype="<f8", count=k, offset=_HEADER.size)
        data = np.frombuffer(raw, dtype="<f8", count=rows * k,
                             offset=_HEADER.size + 8 * k).reshape(rows, k)
        return EmbeddingMatrix(data.astype(np.float64), lam.astype(np.float64))
    lines = raw.decode("utf-8").splitlines()
    if not lines:
        raise EmbeddingFormatError(f"{path}: empty embedding file")
    try:
        rows, k = (int(t) for t in lines[0].split())
    except ValueError:
        raise EmbeddingFormatError(f"{path}: bad header {lines[0]!r}") from None
    lam = None
    body = []
    for line in lines[1:]:
        if line.startswith("# eigenvalues"):
            lam = np.array([float(t) for t in line.split()[2:]])
        elif line.strip() and not line.startswith("#"):
            body.append([float(t) for t in line.split()])
    data = np.array(body, dtype=np.float64).reshape(-1, k) if body else np.zeros((0, k))
    if data.shape != (rows, k) or any(len(b) != k for b in body):
        raise EmbeddingFormatError(f"{path}: header says {rows}x{k}, body has {len(body)} rows")
    if lam is None:
        lam = np.zeros(k)
    return EmbeddingMatrix(data, lam)
