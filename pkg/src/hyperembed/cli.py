"""Command-line entry point: ``hyperembed <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .core import (AttributedHypergraph, load_embeddings, load_hypergraph, save_embeddings,
                   write_attributes, write_hypergraph, write_labels)
from .errors import DenseCapError, HyperembedError, ParameterError
from .evaluation import (SplitSpec, TaskReport, hyperedge_classification_eval,
                         link_prediction_eval, node_classification_eval, similarity_mae)
from .extend import extend_hypergraph
from .oracle import base_embed, base_embed_extended, hmse_matrix, hmsn_matrix
from .params import EmbedParams
from .sahe import sahe_embed, sahe_embed_extended
from .synth import synth_planted, synth_uniform

log = logging.getLogger("hyperembed")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARAM = 3
EXIT_MISSING_FILE = 4
EXIT_DENSE_CAP = 5
EXIT_FAILURE = 6

THREADS_ENV = "HYPEREMBED_THREADS"
PARAM_FLAGS = ("K", "beta", "alpha", "T", "r", "k", "tau", "b", "c", "seed")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: dict[str, str | None] = field(default_factory=dict)
    out: str | None = None
    params: EmbedParams = field(default_factory=EmbedParams)
    method: str = "sahe"
    threads: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        self.params.validate()
        if self.method not in ("sahe", "base"):
            raise ParameterError(f"unknown method {self.method!r}", stage="params")
        if self.threads < 0:
            raise ParameterError(f"--threads must be >= 0, got {self.threads}", stage="params")
        for name, path in self.inputs.items():
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"--{name.replace('_', '-')}: no such file: {path}")
        return self


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _add_params(p: argparse.ArgumentParser) -> None:
    d = EmbedParams()
    g = p.add_argument_group("embedding parameters")
    g.add_argument("--K", type=int, default=d.K, help="attribute neighbours per node")
    g.add_argument("--beta", type=float, default=d.beta, help="attribute/structure volume ratio")
    g.add_argument("--alpha", type=float, default=d.alpha, help="restart probability in [0, 1)")
    g.add_argument("--T", type=int, default=d.T, help="random-walk steps")
    g.add_argument("--r", type=int, default=d.r, help="truncated SVD rank")
    g.add_argument("--k", type=int, default=d.k, help="embedding dimension")
    g.add_argument("--tau", type=int, default=d.tau, help="polynomial degree")
    g.add_argument("--b", type=int, default=d.b, help="sketch width (power of two)")
    g.add_argument("--c", type=int, default=d.c, help="sampled rows for the polynomial fit")
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--knn", choices=("auto", "exact", "approx"), default=d.knn)
    g.add_argument("--method", choices=("sahe", "base"), default="sahe")
    g.add_argument("--exact", action="store_true", help="dense verification mode")
    g.add_argument("--dense-cap", type=int, default=d.dense_cap)


def _add_graph(p: argparse.ArgumentParser, labels: str | None = None) -> None:
    p.add_argument("--hypergraph", required=True, help="one hyperedge per line")
    p.add_argument("--attrs", required=True, help="attribute matrix file")
    if labels == "node":
        p.add_argument("--node-labels", required=True)
    elif labels == "edge":
        p.add_argument("--edge-labels", required=True)


def _add_split(p: argparse.ArgumentParser, train: float, repeats: int = 10) -> None:
    p.add_argument("--train-fraction", type=float, default=train)
    p.add_argument("--repeats", type=int, default=repeats)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here")


def _add_common(p: argparse.ArgumentParser, threads_default, verbose_default) -> None:
    p.add_argument("--threads", type=int, default=threads_default,
                   help=f"BLAS threads, 0 = auto (env {THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="store_true", default=verbose_default)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperembed", description="Attributed hypergraph embeddings.")
    _add_common(p, None, False)
    # the same flags after the subcommand; SUPPRESS keeps a global value when absent
    common = _Parser(add_help=False)
    _add_common(common, argparse.SUPPRESS, argparse.SUPPRESS)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("embed", parents=[common], help="compute node and hyperedge embeddings")
    _add_graph(s)
    _add_params(s)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--format", choices=("binary", "text"), default="binary")

    s = sub.add_parser("extend", parents=[common], help="write the extended hypergraph")
    _add_graph(s)
    _add_params(s)
    s.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("eval-nc", parents=[common], help="node classification")
    _add_graph(s, "node")
    s.add_argument("--embeddings", required=True, help="node.emb written by embed")
    _add_split(s, 0.2)

    s = sub.add_parser("eval-hec", parents=[common], help="hyperedge classification")
    _add_graph(s, "edge")
    s.add_argument("--embeddings", required=True, help="edge.emb written by embed")
    _add_split(s, 0.2)

    s = sub.add_parser("eval-lp", parents=[common], help="hyperedge link prediction (re-embeds per split)")
    _add_graph(s)
    _add_params(s)
    _add_split(s, 0.8)
    s.add_argument("--negative-seed", type=int, default=0)

    s = sub.add_parser("mae", parents=[common], help="similarity reconstruction error against the dense oracle")
    _add_graph(s)
    _add_params(s)
    s.add_argument("--report", help="write the JSON report here")

    s = sub.add_parser("gen-uniform", parents=[common], help="uniform random attributed hypergraph")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--arity", type=int, default=3)
    s.add_argument("--n-edges", type=int, default=None)
    s.add_argument("--q", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("gen-planted", parents=[common], help="planted-partition hypergraph with labels")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--n-classes", type=int, default=4)
    s.add_argument("--edges-per-class", type=int, default=250)
    s.add_argument("--attr-dim", type=int, default=64)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    return p


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be an integer, got {env!r}",
                             stage="params") from None


def config_from_args(args) -> RunConfig:
    inputs = {k: getattr(args, k, None)
              for k in ("hypergraph", "attrs", "node_labels", "edge_labels", "embeddings")}
    inputs = {k: v for k, v in inputs.items() if v is not None}
    params = EmbedParams()
    if hasattr(args, "alpha"):
        params = replace(params, **{k: getattr(args, k) for k in PARAM_FLAGS},
                         knn=args.knn, exact=args.exact, dense_cap=args.dense_cap)
    elif hasattr(args, "seed"):
        params = replace(params, seed=args.seed)
    skip = set(inputs) | set(PARAM_FLAGS) | {"subcommand", "out", "threads", "verbose",
                                             "method", "knn", "exact", "dense_cap"}
    options = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(args.subcommand, inputs, getattr(args, "out", None), params,
                     getattr(args, "method", "sahe"), _threads(args), options).validate()


def _load(cfg: RunConfig) -> AttributedHypergraph:
    return load_hypergraph(cfg.inputs["hypergraph"], cfg.inputs["attrs"],
                           cfg.inputs.get("node_labels"), cfg.inputs.get("edge_labels"))


def _embed(H: AttributedHypergraph, cfg: RunConfig):
    if cfg.method == "base":
        t0 = time.perf_counter()
        Z_V, Z_E = base_embed(H, cfg.params)
        manifest = {"method": "base", "params": cfg.params.to_dict(), "n": H.n, "m": H.m,
                    "stage_seconds": {"total": time.perf_counter() - t0}}
        return Z_V, Z_E, manifest
    res = sahe_embed(H, cfg.params)
    return res.node, res.edge, res.manifest


def _emit_report(report: TaskReport, path: str | None) -> None:
    print(report.table())
    if path:
        Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def cmd_embed(cfg: RunConfig) -> None:
    H = _load(cfg)
    Z_V, Z_E, manifest = _embed(H, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    fmt = cfg.options["format"]
    save_embeddings(Z_V, out / "node.emb", fmt)
    save_embeddings(Z_E, out / "edge.emb", fmt)
    manifest["threads"] = cfg.threads
    manifest["node_ids"] = H.node_ids.tolist() if H.node_ids is not None else None
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {out / 'node.emb'} ({Z_V.rows}x{Z_V.k}) and {out / 'edge.emb'} "
          f"({Z_E.rows}x{Z_E.k})")


def cmd_extend(cfg: RunConfig) -> None:
    H = _load(cfg)
    p = cfg.params
    ext = extend_hypergraph(H, p.K, p.beta, p.knn, p.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = H.node_ids if H.node_ids is not None else np.arange(H.n)
    inc = ext.incidence
    with open(out / "extended.txt", "w", encoding="utf-8") as fh:
        for e in range(inc.n_rows):
            cols, vals = inc.row(e)
            members = " ".join(f"{int(ids[v])}:{g:.17g}" for v, g in zip(cols, vals))
            fh.write(f"{ext.edge_weights[e]:.17g}\t{members}\n")
    summary = {"n": ext.n, "m": ext.m_original, "n_edges": ext.n_edges, "volume": ext.volume,
               "attribute_edge_weight": float(ext.edge_weights[-1]), "K": p.K, "beta": p.beta}
    (out / "extend.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {ext.n_edges} hyperedges ({ext.m_original} original) to {out}")


def _split(cfg: RunConfig) -> SplitSpec:
    o = cfg.options
    return SplitSpec(o["train_fraction"], o["repeats"], o["split_seed"])


def cmd_eval_nc(cfg: RunConfig) -> None:
    H = _load(cfg)
    Z = load_embeddings(cfg.inputs["embeddings"])
    _emit_report(node_classification_eval(Z, H.node_labels, _split(cfg)), cfg.options["report"])


def cmd_eval_hec(cfg: RunConfig) -> None:
    H = _load(cfg)
    Z = load_embeddings(cfg.inputs["embeddings"])
    _emit_report(hyperedge_classification_eval(Z, H.edge_labels, _split(cfg)),
                 cfg.options["report"])


def cmd_eval_lp(cfg: RunConfig) -> None:
    H = _load(cfg)

    def embed(sub):
        return _embed(sub, cfg)[0]

    report = link_prediction_eval(H, embed, _split(cfg), cfg.options["negative_seed"])
    _emit_report(report, cfg.options["report"])


def cmd_mae(cfg: RunConfig) -> None:
    H = _load(cfg)
    p = cfg.params
    ext = extend_hypergraph(H, p.K, p.beta, p.knn, p.seed)
    if cfg.method == "base":
        Z_V, Z_E = base_embed_extended(ext, p)
    else:
        Z_V, Z_E = sahe_embed_extended(ext, p)
    result = {
        "method": cfg.method,
        "hmsn_mae": similarity_mae(Z_V, hmsn_matrix(ext, p.alpha, p.T, p.dense_cap)),
        "hmse_mae": similarity_mae(Z_E, hmse_matrix(ext, p.alpha, p.T, p.dense_cap)),
    }
    print(f"HMS-N MAE {result['hmsn_mae']:.4f}  HMS-E MAE {result['hmse_mae']:.4f}")
    if cfg.options["report"]:
        Path(cfg.options["report"]).write_text(json.dumps(result, indent=2) + "\n")


def _write_graph(H: AttributedHypergraph, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_hypergraph(H, out / "hypergraph.txt")
    write_attributes(H, out / "attrs.tsv")
    if H.node_labels is not None:
        write_labels(H.node_labels, out / "node_labels.txt", H.node_ids)
    if H.edge_labels is not None:
        write_labels(H.edge_labels, out / "edge_labels.txt")
    print(f"wrote n={H.n} m={H.m} q={H.q} to {out}")


def cmd_gen_uniform(cfg: RunConfig) -> None:
    o = cfg.options
    H = synth_uniform(o["n"], o["arity"], o["n_edges"], o["q"], cfg.params.seed)
    _write_graph(H, Path(cfg.out))


def cmd_gen_planted(cfg: RunConfig) -> None:
    o = cfg.options
    H = synth_planted(o["n"], o["n_classes"], o["edges_per_class"], o["attr_dim"], o["noise"],
                      cfg.params.seed)
    _write_graph(H, Path(cfg.out))


COMMANDS = {
    "embed": cmd_embed, "extend": cmd_extend, "eval-nc": cmd_eval_nc, "eval-hec": cmd_eval_hec,
    "eval-lp": cmd_eval_lp, "mae": cmd_mae, "gen-uniform": cmd_gen_uniform,
    "gen-planted": cmd_gen_planted,
}


def _fail(code: int, message: str) -> int:
    print(f"hyperembed: error: {message}", file=sys.stderr)
    return code


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        return _fail(EXIT_USAGE, f"[usage] {e}")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        limit = cfg.threads if cfg.threads > 0 else None
        with threadpool_limits(limits=limit):
            COMMANDS[cfg.subcommand](cfg)
    except ParameterError as e:
        return _fail(EXIT_PARAM, str(e))
    except FileNotFoundError as e:
        return _fail(EXIT_MISSING_FILE, f"[load] {e}")
    except DenseCapError as e:
        return _fail(EXIT_DENSE_CAP, str(e))
    except HyperembedError as e:
        return _fail(EXIT_FAILURE, str(e) if e.stage else f"[{args.subcommand}] {e}")
    return EXIT_OK


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
