import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperembed.core import (AttributedHypergraph, ExtendedHypergraph, SparseIncidence,
                             degrees_and_volume, tlog)
from hyperembed.errors import DegenerateStructureError
from hyperembed.extend import extend_hypergraph
from hyperembed.oracle import base_embed, scaled_edge_rwr, scaled_node_rwr
from hyperembed.params import EmbedParams
from hyperembed.sahe import (embed_factor, factors, normalize_incidence, normalized_incidence,
                             sahe_embed, sigma_hat, spectral_core, truncate_core)

from conftest import hypergraphs, random_hypergraph


def _closed_form(s, alpha, T):
    return sum(alpha * (1 - alpha) ** i * s ** (2 * i) for i in range(T)) + (1 - alpha) ** T * s ** (2 * T)


def test_sigma_hat_examples():
    assert sigma_hat(np.array([1.0]), 0.3, 7)[0] == pytest.approx(1.0, abs=1e-15)
    assert sigma_hat(np.array([0.0]), 0.1, 10)[0] == pytest.approx(0.1, abs=1e-15)
    assert sigma_hat(np.array([0.5]), 0.1, 10)[0] == pytest.approx(_closed_form(0.5, 0.1, 10),
                                                                     abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=10), st.floats(0, 0.99),
       st.integers(1, 15))
def test_sigma_hat_closed_form_and_monotone(s, alpha, T):
    s = np.sort(np.array(s))
    sh = sigma_hat(s, alpha, T)
    np.testing.assert_allclose(sh, _closed_form(s, alpha, T), atol=1e-12)
    assert np.all(np.diff(sh) >= -1e-15)
    assert np.all(sh <= 1 + 1e-12)


def _single_edge_ext():
    inc = SparseIncidence.from_rows([[0, 1]], 2)
    Dv, De, vol = degrees_and_volume(inc, np.ones(1))
    return ExtendedHypergraph(inc, Dv, De, np.ones(1), vol, 1)


def test_normalized_single_edge():
    Ht = normalized_incidence(_single_edge_ext()).toarray()
    # unit weight, De = 2, Dv = 1: each entry is 2^-1/2 and the top eigenvalue is 1
    np.testing.assert_allclose(Ht, [[2 ** -0.5, 2 ** -0.5]])
    np.testing.assert_allclose(np.linalg.eigvalsh(Ht.T @ Ht), [0.0, 1.0], atol=1e-15)


def test_normalized_operator_matches_matrix(toy):
    ext = extend_hypergraph(toy, 2, 1.0)
    op = normalize_incidence(ext)
    Ht = normalized_incidence(ext).toarray()
    x = np.arange(toy.n, dtype=float)
    y = np.arange(ext.n_edges, dtype=float)
    np.testing.assert_array_equal(op.apply(x), Ht @ x)
    np.testing.assert_allclose(op.apply_adjoint(y), Ht.T @ y, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(hypergraphs())
def test_singular_values_and_unit_vector(H):
    ext = extend_hypergraph(H, 2, 1.0)
    Ht = normalized_incidence(ext).toarray()
    S = np.linalg.svd(Ht, compute_uv=False)
    assert S.min() >= 0 and S.max() <= 1 + 1e-8
    assert S[0] == pytest.approx(1.0, abs=1e-8)
    x = np.sqrt(ext.node_degrees)
    assert (Ht @ x) @ (Ht @ x) == pytest.approx(x @ x, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(hypergraphs(n_max=15, m_max=10))
def test_unification_identity(H):
    ext = extend_hypergraph(H, 2, 1.0)
    p = EmbedParams(K=2, r=H.n, k=2, exact=True)
    F, Fp = factors(spectral_core(ext, p), ext)
    scale_n = np.abs(scaled_node_rwr(ext, p.alpha, p.T)).max()
    scale_e = np.abs(scaled_edge_rwr(ext, p.alpha, p.T)).max()
    np.testing.assert_allclose(F @ F.T, scaled_node_rwr(ext, p.alpha, p.T), atol=1e-8 * scale_n)
    np.testing.assert_allclose(Fp @ Fp.T, scaled_edge_rwr(ext, p.alpha, p.T), atol=1e-8 * scale_e)


def _truncation_errors(seed):
    H = random_hypergraph(np.random.default_rng(seed), 20, 12, 4, n_min=10)
    ext = extend_hypergraph(H, 2, 1.0)
    p = EmbedParams(K=2, r=H.n, k=2, exact=True)
    core = spectral_core(ext, p)
    X = scaled_node_rwr(ext, p.alpha, p.T)
    Psi = tlog(X)
    raw, logged = [], []
    for r in range(1, H.n + 1):
        F, _ = factors(truncate_core(core, r), ext)
        raw.append(np.linalg.norm(F @ F.T - X) / np.linalg.norm(X))
        logged.append(np.linalg.norm(tlog(F @ F.T) - Psi) / np.linalg.norm(Psi))
    return np.array(raw), np.array(logged)


@pytest.mark.parametrize("seed", range(10))
def test_truncation_error_nonincreasing_in_r(seed):
    # the dropped part sum_{i>r} sigma^_i f_i f_i^T is PSD and shrinks with r
    raw, logged = _truncation_errors(seed)
    assert np.all(np.diff(raw) <= 1e-12)
    assert raw[-1] <= 1e-10 and logged[-1] <= 1e-10


def test_tlog_truncation_error_is_not_monotone():
    # after tlog the residual is no longer PSD entrywise, and one more triple
    # can overshoot; this instance records a concrete increase
    _, logged = _truncation_errors(8)
    assert np.diff(logged).max() > 1e-3


def test_exact_pipeline_matches_base(toy):
    p = EmbedParams(K=2, r=toy.n, k=3, exact=True)
    Z_V, Z_E = sahe_embed(toy, p)
    B_V, B_E = base_embed(toy, p)
    np.testing.assert_allclose(Z_V.data, B_V.data, atol=1e-6)
    np.testing.assert_allclose(Z_E.data, B_E.data, atol=1e-6)


def test_zero_factor_gives_zero_embedding():
    Z = embed_factor(np.zeros((10, 3)), 2, EmbedParams(k=2, r=2), 1, 2)
    np.testing.assert_array_equal(Z.data, 0.0)


def test_rank_one_exact():
    f = np.linspace(1.5, 3.0, 8)[:, None]
    Z = embed_factor(f, 1, EmbedParams(k=1, r=1, exact=True), 1, 2)
    G = tlog(f @ f.T)
    lam, Q = np.linalg.eigh(G)
    np.testing.assert_allclose(Z.gram(), lam[-1] * np.outer(Q[:, -1], Q[:, -1]), atol=1e-8)


def test_default_pipeline_shapes_and_manifest():
    H = random_hypergraph(np.random.default_rng(1), 60, 40, 8, n_min=50)
    res = sahe_embed(H, EmbedParams(K=3, r=16, k=8))
    Z_V, Z_E = res
    assert Z_V.data.shape == (H.n, 8) and Z_E.data.shape == (H.m, 8)
    m = res.manifest
    for key in ("params", "effective_r", "singular_values", "node", "edge", "stage_seconds"):
        assert key in m
    assert len(m["node"]["coefficients"]) == 4
    assert set(m["stage_seconds"]) >= {"extend", "svd", "node_embedding", "edge_embedding"}
    assert m["node"]["lanczos_residuals"]


def test_rank_deficient_input_reduces_r():
    rows = [[0, 1], [2, 3]]
    H = AttributedHypergraph(SparseIncidence.from_rows(rows, 4),
                             np.array([[1.0, 0], [1, 0], [0, 1], [0, 1]]))
    res = sahe_embed(H, EmbedParams(K=1, r=4, k=2))
    assert res.manifest["effective_r"] <= 4
    assert res.node.data.shape == (4, 2)


def test_errors_carry_stage_labels():
    X = np.array([[1.0, 0], [0, 0], [1, 1]])
    H = AttributedHypergraph(SparseIncidence.from_rows([[0, 1], [1, 2]], 3), X)
    with pytest.raises(DegenerateStructureError) as info:
        sahe_embed(H, EmbedParams(K=1, r=2, k=2))
    assert info.value.stage == "extend" and str(info.value).startswith("[extend]")


def test_deterministic_given_seed():
    H = random_hypergraph(np.random.default_rng(2), 60, 40, 8, n_min=50)
    p = EmbedParams(K=3, r=16, k=8, seed=9)
    a, b = sahe_embed(H, p), sahe_embed(H, p)
    assert a.node.data.tobytes() == b.node.data.tobytes()
    assert a.edge.data.tobytes() == b.edge.data.tobytes()


def test_operator_and_range_modes_agree():
    H = random_hypergraph(np.random.default_rng(3), 60, 40, 8, n_min=50)
    p = EmbedParams(K=3, r=16, k=6, eig_tol=1e-10)
    a = sahe_embed(H, p)
    b = sahe_embed(H, EmbedParams(K=3, r=16, k=6, eig_tol=1e-10, eig_space="operator"))
    np.testing.assert_allclose(a.node.eigenvalues, b.node.eigenvalues, rtol=1e-7)
    # eigenvector error is residual / gap, so the Gram agrees less tightly than the values
    np.testing.assert_allclose(a.node.gram(), b.node.gram(), atol=1e-5 * np.abs(a.node.gram()).max())
