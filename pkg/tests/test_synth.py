import numpy as np
import pytest

from hyperembed.errors import ParameterError
from hyperembed.evaluation import node_classification_eval, SplitSpec
from hyperembed.oracle import base_embed
from hyperembed.params import EmbedParams
from hyperembed.synth import majority_labels, synth_planted, synth_uniform


def test_uniform_arity_and_attributes():
    H = synth_uniform(10, seed=3)
    assert H.m == 10
    assert all(len(set(e)) == 3 for e in H.hyperedges())
    assert set(np.unique(H.attributes)) <= {0.0, 1.0} and H.q == 100


def test_uniform_determinism(tmp_path):
    a, b = synth_uniform(50, seed=1), synth_uniform(50, seed=1)
    assert a.hyperedges() == b.hyperedges()
    assert a.attributes.tobytes() == b.attributes.tobytes()
    assert synth_uniform(50, seed=2).hyperedges() != a.hyperedges()


def test_uniform_validation():
    with pytest.raises(ParameterError):
        synth_uniform(2, arity=3)


def test_majority_rule_ties_to_smaller_label():
    from hyperembed.core import SparseIncidence
    inc = SparseIncidence.from_rows([[0, 1, 2], [2, 3]], 4)
    np.testing.assert_array_equal(majority_labels(inc, np.array([1, 1, 0, 2])), [1, 0])


def test_planted_structure():
    H = synth_planted(n=203, n_classes=4, edges_per_class=10, seed=1)
    assert H.node_labels.max() == 3 and np.sum(H.node_labels == 3) == 53
    assert all(3 <= len(e) <= 5 for e in H.hyperedges())
    np.testing.assert_array_equal(H.edge_labels, majority_labels(H.incidence, H.node_labels))


def test_noiseless_edges_are_single_class():
    H = synth_planted(n=200, edges_per_class=30, noise=0.0, seed=2)
    lab = H.node_labels
    assert all(len(set(lab[list(e)])) == 1 for e in H.hyperedges())


def test_noiseless_instance_is_easy_for_base():
    H = synth_planted(n=400, edges_per_class=100, noise=0.0, seed=3)
    Z_V, _ = base_embed(H, EmbedParams(k=16, r=16))
    rep = node_classification_eval(Z_V, H.node_labels, SplitSpec(0.2, 3))
    assert rep.mean("MiF1") >= 0.99
