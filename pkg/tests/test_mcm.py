import numpy as np
import pytest

from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, ensure_connected
from geodesic_dcd.core.matfun import top_left_singular_vectors
from geodesic_dcd.core.mcm import (
    Method,
    MethodSpec,
    build_mcm,
    default_embedding_rank,
    mcm_coclustering,
    mcm_directed,
    mcm_nsc,
    mcm_overlap,
    mcm_usc,
    overlap_embedding,
)
from geodesic_dcd.errors import ConfigError, DegenerateInputError, ModalityMismatchError

from conftest import cliques_snapshot


def random_undirected(rng, d=12, p=0.4):
    upper = np.triu(rng.random((d, d)) < p, k=1).astype(float)
    return ensure_connected(GraphSnapshot(d=d, edges=EdgeSet.from_dense(upper, directed=False)))


def random_signed(rng, d=12, p=0.5):
    upper = np.triu(rng.random((d, d)) < p, k=1) * rng.choice([-1.0, 1.0], size=(d, d))
    return GraphSnapshot(d=d, edges=EdgeSet.from_dense(upper, directed=False))


def random_directed(rng, d=12, p=0.4):
    A = (rng.random((d, d)) < p).astype(float)
    np.fill_diagonal(A, 0.0)
    return GraphSnapshot(d=d, edges=EdgeSet.from_dense(A, directed=True), directed=True)


@pytest.mark.parametrize("method", ["USC", "NSC", "SMM", "BHC", "OSC", "CSC"])
def test_simple_mcms_are_psd(rng, method):
    for _ in range(20):
        assert build_mcm(random_undirected(rng), MethodSpec(method)).is_psd()


@pytest.mark.parametrize("spec", [
    MethodSpec("SRSC"),
    MethodSpec("GMSC"),
    MethodSpec("SPMSC", p=-2),
    MethodSpec("SPMSC", p=1),
])
def test_signed_mcms_are_psd(rng, spec):
    for _ in range(20):
        assert build_mcm(random_signed(rng), spec).is_psd()


@pytest.mark.parametrize("method", ["BSC", "DDSC", "RWSC"])
def test_directed_mcms_are_psd(rng, method):
    spec = MethodSpec(method, regularize=method != "BSC")
    for _ in range(20):
        assert build_mcm(random_directed(rng), spec).is_psd()


def test_multiview_mcm_is_psd(rng):
    d = 10
    views = tuple(EdgeSet.from_dense(np.triu(rng.random((d, d)) < 0.4, k=1).astype(float), False)
                  for _ in range(3))
    snap = GraphSnapshot(d=d, views=views)
    for p in (-2, 1, 10):
        assert build_mcm(snap, MethodSpec("PMLSC", p=p)).is_psd()


def test_usc_on_disjoint_cliques_has_rank_k():
    k, s = 3, 5
    mcm = mcm_usc(cliques_snapshot(k, s), n=s)
    sigma = np.linalg.svd(mcm.matrix, compute_uv=False)
    assert sigma[k] / sigma[0] < 1e-10
    assert sigma[k - 1] / sigma[0] > 0.5


def test_nsc_spectrum_in_zero_two(rng):
    for _ in range(20):
        w = np.linalg.eigvalsh(mcm_nsc(random_undirected(rng)).matrix)
        assert w.min() > -1e-8 and w.max() < 2 + 1e-8


def test_smm_top_vector_splits_cliques(two_cliques):
    v = top_left_singular_vectors(build_mcm(two_cliques, MethodSpec("SMM")).matrix, 1)[:, 0]
    signs = np.sign(v)
    assert len(set(signs[:4])) == 1 and len(set(signs[4:])) == 1
    assert signs[0] != signs[4]


def test_rwsc_on_directed_cycle():
    snap = GraphSnapshot(d=3, edges=EdgeSet.from_triples([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
                         directed=True)
    mcm = mcm_directed(snap, MethodSpec("RWSC"))
    P = snap.adjacency()
    theta = 0.5 * (P + P.T)
    np.testing.assert_allclose(mcm.matrix, np.eye(3) + theta / np.linalg.norm(theta), atol=1e-12)


def test_ddsc_matches_degree_discounted_closed_form(rng):
    d = 9
    A = (rng.random((d, d)) < 0.4) * rng.uniform(0.5, 2.0, size=(d, d))
    np.fill_diagonal(A, 0.0)
    A[np.arange(d), np.roll(np.arange(d), -1)] = 1.0
    snap = GraphSnapshot(d=d, edges=EdgeSet.from_dense(A, directed=True), directed=True)
    A = snap.adjacency()

    out_half = np.diag(A.sum(axis=1) ** -0.5)
    in_half = np.diag(A.sum(axis=0) ** -0.5)
    R = (out_half @ A @ in_half @ A.T @ out_half
         + in_half @ A.T @ out_half @ A @ in_half)
    expected = np.eye(d) + R / np.linalg.norm(R, "fro")
    np.testing.assert_allclose(build_mcm(snap, MethodSpec("DDSC")).matrix, expected, atol=1e-12)


def test_zero_degree_needs_regularization():
    snap = GraphSnapshot(d=3, edges=EdgeSet.from_triples([[0, 1, 1.0]]))
    with pytest.raises(DegenerateInputError):
        build_mcm(snap, MethodSpec("NSC"))
    assert build_mcm(snap, MethodSpec("NSC", regularize=True)).is_psd()


def test_modality_checks(two_cliques):
    directed = GraphSnapshot(d=2, edges=EdgeSet.from_triples([[0, 1, 1.0]]), directed=True)
    with pytest.raises(ModalityMismatchError):
        build_mcm(directed, MethodSpec("NSC"))
    with pytest.raises(ModalityMismatchError):
        build_mcm(two_cliques, MethodSpec("SCC-send"))
    signed = GraphSnapshot(d=2, edges=EdgeSet.from_triples([[0, 1, -1.0]]))
    with pytest.raises(ModalityMismatchError):
        build_mcm(signed, MethodSpec("SMM"))


def test_empty_graph_is_degenerate():
    with pytest.raises(DegenerateInputError):
        build_mcm(GraphSnapshot(d=4), MethodSpec("SMM"))


def test_coclustering_bipartite_shapes():
    snap = GraphSnapshot(d=5, edges=EdgeSet.from_triples([[0, 2, 1], [0, 3, 1], [1, 4, 1]]),
                         directed=True, bipartite_split=(2, 3))
    send, receive = mcm_coclustering(snap, MethodSpec("SCC-send"))
    assert send.matrix.shape == (2, 3)
    assert receive.matrix.shape == (3, 2)
    np.testing.assert_allclose(receive.matrix, send.matrix.T)


def test_coclustering_rows_index_senders():
    # nodes 0,1 only send to 2,3
    snap = GraphSnapshot(d=4, edges=EdgeSet.from_triples([[0, 2, 1], [0, 3, 1], [1, 2, 1],
                                                          [1, 3, 1]]), directed=True)
    send, _ = mcm_coclustering(snap, MethodSpec("SCC-send"))
    assert np.all(send.matrix[2:] == 0)
    assert np.all(send.matrix[:2, 2:] > 0)


def test_overlap_embedding_matches_exact(two_cliques):
    exact = mcm_overlap(two_cliques, 2)
    w, v = np.linalg.eigh(two_cliques.adjacency())
    basis = v[:, np.argsort(-w)[:2]]
    ritz = overlap_embedding(two_cliques.adjacency(), basis)
    np.testing.assert_allclose(ritz @ ritz.T, exact @ exact.T, atol=1e-10)


def test_default_embedding_rank():
    assert default_embedding_rank(MethodSpec("SRSC"), 3) == 2
    assert default_embedding_rank(MethodSpec("SPMSC", p=1), 3) == 2
    assert default_embedding_rank(MethodSpec("SPMSC", p=-2), 3) == 3
    assert default_embedding_rank(MethodSpec("NSC"), 3) == 3


def test_method_spec_validation():
    with pytest.raises(ConfigError):
        MethodSpec("NSC", p=2)
    with pytest.raises(ConfigError):
        MethodSpec("XYZ")
    with pytest.raises(ConfigError):
        MethodSpec.from_dict({"method": "BHC", "bogus": 1})
    spec = MethodSpec.from_dict({"method": "SPMSC", "p": -2})
    assert spec.method is Method.SPMSC
    assert spec.to_dict() == {"method": "SPMSC", "p": -2}
