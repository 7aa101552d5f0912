"""Convert the Cora co-authorship pickles to the package's text formats.

Expects the directory layout used by the public HyperGCN release
(``features.pickle``, ``labels.pickle`` and ``hypergraph.pickle`` under
``coauthorship/cora``). Pickles execute code when loaded; only use files
from a source you trust.

    python3 scripts/prepare_cora_ca.py path/to/coauthorship/cora data/cora_ca
"""
import argparse
import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from hyperembed.core import AttributedHypergraph, SparseIncidence, write_attributes, \
    write_hypergraph, write_labels


def _load(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("source", type=Path, help="directory holding the three pickles")
    p.add_argument("out", type=Path, help="output directory")
    args = p.parse_args()

    X = _load(args.source / "features.pickle")
    X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    labels = np.asarray(_load(args.source / "labels.pickle"), dtype=np.int64)
    if labels.ndim == 2:
        labels = labels.argmax(axis=1)
    groups = _load(args.source / "hypergraph.pickle")

    rows, seen, dropped = [], set(), 0
    for members in groups.values():
        e = tuple(sorted(set(int(v) for v in members)))
        if len(e) < 2 or e in seen:
            dropped += 1
            continue
        seen.add(e)
        rows.append(list(e))
    H = AttributedHypergraph(SparseIncidence.from_rows(rows, X.shape[0]), X, labels)

    args.out.mkdir(parents=True, exist_ok=True)
    write_hypergraph(H, args.out / "hypergraph.txt")
    write_attributes(H, args.out / "attrs.tsv")
    write_labels(labels, args.out / "node_labels.txt")
    print(f"{H.n} nodes, {len(rows)} hyperedges ({dropped} singleton or duplicate groups "
          f"dropped), {X.shape[1]} attributes -> {args.out}")


if __name__ == "__main__":
    main()
