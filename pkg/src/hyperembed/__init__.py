"""Node and hyperedge embeddings for attributed hypergraphs."""
from .core import (AttributedHypergraph, EmbeddingMatrix, ExtendedHypergraph, SimilarityMatrix,
                   SparseIncidence, load_embeddings, load_hypergraph, save_embeddings, tlog)
from .errors import (ConvergenceError, DegenerateStructureError, DenseCapError, DimensionError,
                     HyperembedError, ParameterError, ParseError, ValidationError)
from .evaluation import (SplitSpec, TaskReport, hyperedge_classification_eval,
                         link_prediction_eval, node_classification_eval, similarity_mae)
from .extend import cosine_knn, extend_hypergraph
from .oracle import base_embed
from .params import EmbedParams
from .sahe import SaheResult, sahe_embed
from .synth import synth_planted, synth_uniform

__version__ = "0.1.0"

__all__ = [
    "AttributedHypergraph", "EmbeddingMatrix", "ExtendedHypergraph", "SimilarityMatrix",
    "SparseIncidence", "load_embeddings", "load_hypergraph", "save_embeddings", "tlog",
    "ConvergenceError", "DegenerateStructureError", "DenseCapError", "DimensionError",
    "HyperembedError", "ParameterError", "ParseError", "ValidationError",
    "SplitSpec", "TaskReport", "hyperedge_classification_eval", "link_prediction_eval",
    "node_classification_eval", "similarity_mae", "cosine_knn", "extend_hypergraph",
    "base_embed", "EmbedParams", "SaheResult", "sahe_embed", "synth_planted", "synth_uniform",
]
