import numpy as np
import pytest

from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, SnapshotSequence
from geodesic_dcd.core.mcm import Method, MethodSpec
from geodesic_dcd.core.metrics import ami, score_sequence
from geodesic_dcd.core.pipeline import (
    BenefitTable,
    PipelineConfig,
    build_mcms,
    detect_fixed_k,
    detect_static,
    detect_variable_k,
    geodesic_ratio,
    geodesic_structure_check,
    select_k_by_modularity,
)
from geodesic_dcd.errors import ConfigError, DegenerateInputError, ModalityMismatchError
from geodesic_dcd.sbm.config import SbmConfig, Variant
from geodesic_dcd.sbm.generators import generate

from conftest import clique_edges, cliques_snapshot


def test_fixed_k_recovers_planted_cliques(planted_sequence, planted_labels):
    parts, report = detect_fixed_k(planted_sequence, PipelineConfig(k_c=3))
    assert parts.T == 5
    assert parts.k_per_step == (3,) * 5
    for i in range(5):
        assert ami(planted_labels, parts.labels[i]) == pytest.approx(1.0)
    assert report.model is not None
    assert report.iterations >= 1


def test_consecutive_labels_are_aligned(planted_sequence):
    parts, _ = detect_fixed_k(planted_sequence, PipelineConfig(k_c=3))
    for i in range(1, 5):
        np.testing.assert_array_equal(parts.labels[i], parts.labels[0])


def test_geodesic_tracks_easy_sbm(easy_sbm):
    sample = generate(easy_sbm)
    parts, _ = detect_fixed_k(sample.sequence, PipelineConfig(k_c=2))
    trace = score_sequence(sample.truth, parts)
    assert trace.summary["median"] > 0.9


@pytest.mark.parametrize("method", ["NSC", "SMM", "USC"])
def test_static_methods_solve_easy_sbm(easy_sbm, method):
    sample = generate(easy_sbm)
    config = PipelineConfig(method=MethodSpec(method), k_c=2, geodesic=False)
    parts = detect_static(sample.sequence, config)
    assert score_sequence(sample.truth, parts).summary["median"] > 0.9


def test_static_bypass_returns_empty_report(planted_sequence):
    parts, report = detect_fixed_k(planted_sequence, PipelineConfig(k_c=3, geodesic=False))
    assert report.converged
    assert report.iterations == 0
    assert report.model is None
    assert parts.T == 5


def test_single_snapshot_runs_static(planted_labels):
    seq = SnapshotSequence((cliques_snapshot(3, 6, bridge=True),))
    parts, report = detect_fixed_k(seq, PipelineConfig(k_c=3))
    assert report.model is None
    assert ami(planted_labels, parts.labels[0]) == pytest.approx(1.0)


def test_soft_method_returns_memberships(planted_sequence):
    config = PipelineConfig(method=MethodSpec(Method.CSC), k_c=3)
    parts, _ = detect_fixed_k(planted_sequence, config)
    assert parts.is_soft
    assert parts.memberships[0].shape == (18, 3)


def switching_sequence(T=6, switch_at=3):
    """Two bridged cliques on 12 nodes; node 0 moves from the first to the second."""
    snapshots, truth = [], []
    for i in range(T):
        labels = np.repeat([0, 1], 6)
        if i >= switch_at:
            labels[0] = 1
        groups = [np.flatnonzero(labels == c) for c in (0, 1)]
        triples = clique_edges(groups) + [[1, 11, 1.0]]
        snapshots.append(GraphSnapshot(d=12, edges=EdgeSet.from_triples(triples)))
        truth.append(labels)
    return SnapshotSequence(tuple(snapshots)), truth


def test_relabel_tracks_a_switching_node():
    seq, truth = switching_sequence()
    parts, _ = detect_fixed_k(seq, PipelineConfig(k_c=2, relabel=True))
    for i in range(seq.T):
        assert ami(truth[i], parts.labels[i]) == pytest.approx(1.0)


def test_relabel_keeps_stable_communities(planted_sequence, planted_labels):
    parts, _ = detect_fixed_k(planted_sequence, PipelineConfig(k_c=3, relabel=True))
    for i in range(planted_sequence.T):
        assert ami(planted_labels, parts.labels[i]) == pytest.approx(1.0)


def test_static_relabel_tracks_a_switching_node():
    seq, truth = switching_sequence()
    parts = detect_static(seq, PipelineConfig(k_c=2, geodesic=False, relabel=True))
    for i in range(seq.T):
        assert ami(truth[i], parts.labels[i]) == pytest.approx(1.0)


def test_fixed_k_refuses_variable_config(planted_sequence):
    with pytest.raises(ConfigError):
        detect_fixed_k(planted_sequence, PipelineConfig(k_min=2, k_max=3))


def test_directed_sequence_rejects_undirected_method():
    sample = generate(SbmConfig(variant=Variant.DSBM, d=20, T=3, k=2, seed=1))
    with pytest.raises(ModalityMismatchError):
        detect_fixed_k(sample.sequence, PipelineConfig(k_c=2))


def test_variable_k_picks_three_on_planted_cliques(planted_sequence):
    config = PipelineConfig(k_min=2, k_max=3, gaussian_sigma=0.0)
    parts, table = detect_variable_k(planted_sequence, config)
    assert table.H.shape == (2, 5)
    np.testing.assert_array_equal(table.filtered, table.H)
    np.testing.assert_array_equal(table.choice, [3] * 5)
    assert parts.k_per_step == (3,) * 5


def test_degenerate_sweep_matches_fixed_mode_for_signed_method():
    sample = generate(SbmConfig(variant=Variant.SSBM, d=30, T=4, k=3, p_in=0.6, p_out=0.6,
                                eta_in=0.1, eta_out=0.1, seed=3))
    method = MethodSpec(Method.SRSC, regularize=True)
    fixed_config = PipelineConfig(method=method, k_c=3)
    variable_config = PipelineConfig(method=method, k_min=3, k_max=3, gaussian_sigma=0.0)
    assert variable_config.embedding_rank == fixed_config.embedding_rank == 2

    fixed, _ = detect_fixed_k(sample.sequence, fixed_config)
    variable, _ = detect_variable_k(sample.sequence, variable_config)
    assert variable.k_per_step == fixed.k_per_step
    for i in range(sample.sequence.T):
        np.testing.assert_array_equal(variable.labels[i], fixed.labels[i])


def test_variable_k_table_frame(planted_sequence):
    _, table = detect_variable_k(planted_sequence, PipelineConfig(k_min=2, k_max=3))
    frame = table.to_frame()
    assert list(frame.columns) == ["k", "t_index", "modularity", "filtered"]
    assert len(frame) == 10
    assert table.to_dict()["choice"] == table.choice.tolist()


def test_benefit_ties_go_to_smaller_k():
    H = np.array([[0.3, 0.1], [0.3, 0.2]])
    table = BenefitTable(H=H, filtered=H, k_values=np.array([2, 3]))
    np.testing.assert_array_equal(table.choice, [2, 3])


def test_variable_k_rejects_coclustering():
    sample = generate(SbmConfig(variant=Variant.SCBM, d=20, T=2, k=2, seed=0))
    config = PipelineConfig(method=MethodSpec(Method.SCC_SEND), k_min=2, k_max=3)
    with pytest.raises(ModalityMismatchError):
        detect_variable_k(sample.sequence, config)


def test_variable_k_refuses_fixed_config(planted_sequence):
    with pytest.raises(ConfigError):
        detect_variable_k(planted_sequence, PipelineConfig(k_c=3))


def test_select_k_by_modularity(planted_sequence):
    assert select_k_by_modularity(planted_sequence, PipelineConfig(), [2, 3, 4]) == 3


def test_select_k_empty_range(planted_sequence):
    with pytest.raises(ConfigError):
        select_k_by_modularity(planted_sequence, PipelineConfig(), [])


def test_structure_check_on_exact_geodesic():
    d = 6
    a, b = np.eye(d)[0], np.eye(d)[1]
    mats = []
    for t in np.linspace(0.0, 1.0, 4):
        u = np.cos(t) * a + np.sin(t) * b
        mats.append(np.outer(u, u))
    sigma, proj = geodesic_structure_check(mats)
    assert proj.shape == (8, 2)
    assert geodesic_ratio(sigma) < 1e-10
    np.testing.assert_allclose(np.linalg.norm(proj, axis=1), 1.0, atol=1e-10)


def test_structure_check_needs_two_snapshots():
    with pytest.raises(DegenerateInputError):
        geodesic_structure_check([np.eye(3)])


def test_structure_check_from_built_mcms(planted_sequence):
    sigma, _ = geodesic_structure_check(build_mcms(planted_sequence, MethodSpec(Method.SMM)))
    # identical snapshots stack into a rank-one matrix
    assert geodesic_ratio(sigma) < 1e-8


@pytest.mark.parametrize("kwargs, field", [
    ({"k_min": 2}, "k_min"),
    ({"k_min": 4, "k_max": 3}, "k_min"),
    ({"k_c": 3, "k_e": 2}, "k_e"),
    ({"k_min": 2, "k_max": 3, "k_e": 2}, "k_e"),
    ({"k_c": 0}, "k_c"),
    ({"fuzzifier": 1.0}, "fuzzifier"),
    ({"gaussian_sigma": -1.0}, "gaussian_sigma"),
    ({"switch_cost": -1.0}, "switch_cost"),
    ({"relabel": True, "method": MethodSpec("RWSC")}, "relabel"),
    ({"relabel": True, "k_min": 2, "k_max": 3}, "relabel"),
])
def test_pipeline_config_validation(kwargs, field):
    with pytest.raises(ConfigError) as info:
        PipelineConfig(**kwargs)
    assert info.value.field == field


def test_pipeline_config_from_dict():
    config = PipelineConfig.from_dict({"method": "SMM", "k_c": 4})
    assert config.method.method is Method.SMM
    assert config.embedding_rank == 4
    assert not config.variable
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"k_c": 2, "colour": "red"})


def test_signed_rank_defaults_to_k_minus_one():
    config = PipelineConfig(method=MethodSpec(Method.SRSC), k_c=3)
    assert config.embedding_rank == 2
