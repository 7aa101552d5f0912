"""Similarity reconstruction error (HMS-N and HMS-E MAE) on Cora-CA.

Run ``scripts/prepare_cora_ca.py`` first to produce the text files.

    python3 scripts/cora_ca_mae.py data/cora_ca --k 32
"""
import argparse
from pathlib import Path

from hyperembed.core import load_hypergraph
from hyperembed.evaluation import similarity_mae
from hyperembed.extend import extend_hypergraph
from hyperembed.oracle import base_embed_extended, hmse_matrix, hmsn_matrix
from hyperembed.params import EmbedParams
from hyperembed.sahe import sahe_embed_extended


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("data", type=Path, help="directory with hypergraph.txt and attrs.tsv")
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    H = load_hypergraph(args.data / "hypergraph.txt", args.data / "attrs.tsv")
    params = EmbedParams(k=args.k, r=max(32, args.k), seed=args.seed)
    ext = extend_hypergraph(H, params.K, params.beta, params.knn, params.seed)
    S_node = hmsn_matrix(ext, params.alpha, params.T)
    S_edge = hmse_matrix(ext, params.alpha, params.T)
    print(f"{'method':<6} {'HMS-N MAE':>10} {'HMS-E MAE':>10}")
    for name, (Z_V, Z_E) in (("base", base_embed_extended(ext, params)),
                             ("sahe", tuple(sahe_embed_extended(ext, params)))):
        print(f"{name:<6} {similarity_mae(Z_V, S_node):10.4f} {similarity_mae(Z_E, S_edge):10.4f}")


if __name__ == "__main__":
    main()
