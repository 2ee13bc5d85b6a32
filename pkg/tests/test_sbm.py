import numpy as np
import pytest

from geodesic_dcd.errors import ConfigError
from geodesic_dcd.sbm.config import SbmConfig, TreeNode, Variant, equal_split
from geodesic_dcd.sbm.generators import generate, merge_progress


def test_equal_split_gives_extra_nodes_to_first_groups():
    np.testing.assert_array_equal(equal_split(7, 3), [0, 0, 0, 1, 1, 2, 2])


def test_deterministic_blocks_are_disjoint_cliques():
    config = SbmConfig(d=12, T=3, k=3, p_in=1.0, p_out=0.0, p_switch=0.0)
    sample = generate(config)
    expected = equal_split(12, 3)
    block = (expected[:, None] == expected[None, :]).astype(float)
    np.fill_diagonal(block, 0.0)
    for snapshot in sample.sequence:
        np.testing.assert_array_equal(snapshot.adjacency(), block)
    for i in range(3):
        np.testing.assert_array_equal(sample.truth.labels[i], expected)


def test_same_seed_same_sample():
    config = SbmConfig(d=30, T=4, k=3, p_switch=0.2, seed=11)
    first, second = generate(config), generate(config)
    assert first.sequence == second.sequence
    assert first.truth == second.truth


def test_different_seeds_differ():
    config = SbmConfig(d=30, T=2, k=2, seed=1)
    assert generate(config).sequence != generate(config.with_seed(2)).sequence


def test_nodes_switch_at_most_once():
    sample = generate(SbmConfig(d=60, T=15, k=3, p_switch=0.3, seed=5))
    labels = np.stack(sample.truth.labels)
    changes = (np.diff(labels, axis=0) != 0).sum(axis=0)
    assert changes.max() <= 1
    assert changes.sum() > 0


def test_signed_model_without_flips_signs_by_block():
    config = SbmConfig(variant=Variant.SSBM, d=20, T=2, k=2, p_in=0.5, p_out=0.5,
                       p_switch=0.0)
    sample = generate(config)
    z = sample.truth.labels[0]
    A = sample.sequence[0].adjacency()
    rows, cols = np.nonzero(A)
    same = z[rows] == z[cols]
    assert np.all(A[rows[same], cols[same]] == 1.0)
    assert np.all(A[rows[~same], cols[~same]] == -1.0)


def test_signed_model_rejects_large_flip_rate():
    with pytest.raises(ConfigError) as info:
        SbmConfig(variant=Variant.SSBM, eta_in=0.5)
    assert info.value.field == "eta_in"


def test_directed_model_follows_orientation():
    F = [[0.5, 0.9], [0.1, 0.5]]
    config = SbmConfig(variant=Variant.DSBM, d=60, T=4, k=2, p_in=0.1, p_out=0.5,
                       p_switch=0.0, F=F, seed=2)
    sample = generate(config)
    z = sample.truth.labels[0]
    forward = backward = 0
    for snapshot in sample.sequence:
        assert snapshot.directed
        A = snapshot.adjacency()
        forward += A[np.ix_(z == 0, z == 1)].sum()
        backward += A[np.ix_(z == 1, z == 0)].sum()
    assert forward / (forward + backward) == pytest.approx(0.9, abs=0.05)


def test_orientation_must_be_complementary():
    with pytest.raises(ConfigError):
        SbmConfig(variant=Variant.DSBM, k=2, F=[[0.5, 0.7], [0.7, 0.5]])


def test_multiview_sample_has_independent_views():
    sample = generate(SbmConfig(variant=Variant.MVSBM, d=30, T=2, k=2, S=3, seed=4))
    snapshot = sample.sequence[0]
    assert snapshot.n_views == 3
    views = snapshot.view_adjacencies()
    assert not np.array_equal(views[0], views[1])


def test_mixed_membership_truth_is_soft():
    sample = generate(SbmConfig(variant=Variant.MMSBM, d=60, T=3, k=3, seed=1))
    truth = sample.truth
    assert truth.is_soft
    memberships = truth.memberships[0]
    assert memberships.shape == (60, 3)
    np.testing.assert_allclose(memberships.sum(axis=1), 1.0)
    mixed = np.isclose(memberships.max(axis=1), 1.0 / 3.0)
    assert mixed.sum() == 60 // 6


def test_mixed_membership_rejects_bad_rows():
    with pytest.raises(ConfigError) as info:
        SbmConfig(variant=Variant.MMSBM, d=2, k=2, Phi=[[0.5, 0.6], [1.0, 0.0]])
    assert info.value.field == "Phi"


def test_coblock_bipartite_edges_run_from_senders_to_receivers():
    config = SbmConfig(variant=Variant.SCBM, d=30, T=3, k=2, bipartite_split=(12, 18),
                       p_switch=0.2, seed=6)
    sample = generate(config)
    assert set(sample.truths) == {"send", "receive"}
    assert sample.truths["send"].d == 12
    assert sample.truths["receive"].d == 18
    for snapshot in sample.sequence:
        A = snapshot.adjacency()
        assert A[12:, :].sum() == 0.0
        assert A[:, :12].sum() == 0.0
    # swaps keep community sizes
    for z in sample.truths["send"].labels:
        np.testing.assert_array_equal(np.bincount(z, minlength=2), [6, 6])


def test_coblock_split_must_cover_all_nodes():
    with pytest.raises(ConfigError) as info:
        SbmConfig(variant=Variant.SCBM, d=30, k=2, bipartite_split=(10, 10))
    assert info.value.field == "bipartite_split"


def test_hierarchical_nodes_move_only_to_sibling_leaves():
    sample = generate(SbmConfig(variant=Variant.HSBM, d=40, T=10, p_switch=0.3, seed=8))
    assert sample.tree is not None
    assert len(sample.tree.leaves()) == 4
    labels = np.stack(sample.truth.labels)
    assert sample.truth.k_per_step[0] == 4
    # leaves 0,1 share a parent, as do 2,3
    np.testing.assert_array_equal(labels[0] // 2, labels[-1] // 2)


def test_tree_with_single_child_is_rejected():
    tree = TreeNode(0.3, (TreeNode(0.4),))
    with pytest.raises(ConfigError):
        SbmConfig(variant=Variant.HSBM, tree=tree)


def test_merge_progress_ramps_from_zero_to_one():
    progress = merge_progress(SbmConfig(variant=Variant.MERGE, T=12, k=4))
    assert progress[0] == 0.0
    assert progress[-1] == 1.0
    assert np.all(np.diff(progress) >= 0.0)
    assert np.all((progress >= 0.0) & (progress <= 1.0))


def test_merged_communities_are_unlabeled_during_the_window():
    config = SbmConfig(variant=Variant.MERGE, d=30, T=10, k=3, merges=((0, 1),),
                       p_switch=0.0, seed=2)
    truth = generate(config).truth
    progress = merge_progress(config)
    middle = int(np.flatnonzero((progress > 0.0) & (progress < 1.0))[0])
    assert truth.k_per_step[0] == 3
    assert truth.k_per_step[-1] == 2
    assert not truth.unlabeled[0].any()
    np.testing.assert_array_equal(truth.unlabeled[middle], equal_split(30, 3) < 2)
    np.testing.assert_array_equal(truth.labels[-1], [0] * 20 + [1] * 10)


def test_merges_must_name_distinct_communities():
    with pytest.raises(ConfigError) as info:
        SbmConfig(variant=Variant.MERGE, k=4, merges=((0, 1), (1, 2)))
    assert info.value.field == "merges"


def test_probability_out_of_range():
    with pytest.raises(ConfigError) as info:
        SbmConfig(p_in=1.2)
    assert info.value.field == "p_in"


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        SbmConfig.from_dict({"d": 10, "colour": "red"})


def test_with_seed_keeps_everything_else():
    config = SbmConfig(variant=Variant.MERGE, d=40, k=4, merges=((0, 2),), seed=1)
    reseeded = config.with_seed(9)
    assert reseeded.seed == 9
    assert reseeded.merges == ((0, 2),)
    assert reseeded.variant is Variant.MERGE
