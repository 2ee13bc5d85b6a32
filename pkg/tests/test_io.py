import json

import numpy as np
import pytest

from geodesic_dcd.core.geodesic import GeodesicModel
from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, PartitionSequence, SnapshotSequence
from geodesic_dcd.core.io import (
    dump_model,
    dump_partitions,
    dump_sequence,
    load_model,
    load_partitions,
    load_sequence,
)
from geodesic_dcd.errors import InputError, InvariantViolation, SequenceFormatError


def write(path, document):
    path.write_text(json.dumps(document))
    return path


def test_sequence_file_reloads_equal(tmp_path, planted_sequence):
    path = tmp_path / "seq.json"
    dump_sequence(planted_sequence, path)
    assert load_sequence(path) == planted_sequence


def test_multiview_sequence_keeps_views(tmp_path):
    views = (EdgeSet.from_triples([[0, 1, 1.0]]), EdgeSet.from_triples([[1, 2, 1.0]]),
             EdgeSet.empty())
    seq = SnapshotSequence((GraphSnapshot(d=3, views=views),) * 2)
    path = tmp_path / "mv.json"
    dump_sequence(seq, path)
    assert json.loads(path.read_text())["views"] == 3
    loaded = load_sequence(path)
    assert loaded.n_views == 3
    assert loaded == seq


def test_minimal_document_without_header(tmp_path):
    path = write(tmp_path / "s.json", {"d": 3, "directed": False,
                                       "snapshots": [[[0, 1, 1]], [[1, 2, 1.5]]]})
    seq = load_sequence(path)
    assert seq.T == 2
    np.testing.assert_allclose(seq.times, [0.0, 1.0])


def test_bad_edge_reports_location(tmp_path):
    path = write(tmp_path / "s.json", {"d": 3, "directed": False,
                                       "snapshots": [[[0, 1, 1]], [[0, 1, 1], [1, "x", 1]]]})
    with pytest.raises(SequenceFormatError) as excinfo:
        load_sequence(path)
    assert excinfo.value.location == "snapshots[1][1][1]"


def test_self_loop_in_file_is_invariant_violation(tmp_path):
    path = write(tmp_path / "s.json", {"d": 3, "directed": False, "snapshots": [[[2, 2, 1]]]})
    with pytest.raises(InvariantViolation, match="self-loop"):
        load_sequence(path)


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(InputError, match="nope.json"):
        load_sequence(missing)


def test_wrong_schema_is_rejected(tmp_path):
    path = write(tmp_path / "s.json", {"schema": "geodesic-dcd/partition", "d": 2,
                                       "directed": False, "snapshots": []})
    with pytest.raises(SequenceFormatError, match="schema"):
        load_sequence(path)


def test_external_labels_are_compacted(tmp_path):
    path = write(tmp_path / "p.json", {"labels": [[7, 7, 3], [3, 9, 9]]})
    parts = load_partitions(path)
    np.testing.assert_array_equal(parts.labels[0], [1, 1, 0])
    np.testing.assert_array_equal(parts.labels[1], [0, 1, 1])
    assert parts.k_per_step == (2, 2)


def test_partitions_reload_with_mask(tmp_path):
    parts = PartitionSequence(labels=([0, 1, 1], [0, 0, 1]),
                              unlabeled=([False, False, True], [False, False, False]))
    path = tmp_path / "p.json"
    dump_partitions(parts, path)
    assert load_partitions(path) == parts


def test_soft_partitions_reload(tmp_path):
    parts = PartitionSequence(memberships=([[0.5, 0.5], [1.0, 0.0]],))
    path = tmp_path / "p.json"
    dump_partitions(parts, path)
    loaded = load_partitions(path)
    assert loaded.is_soft
    assert loaded == parts


def test_model_file(tmp_path):
    P = np.eye(6)[:, :4]
    model = GeodesicModel(P=P, theta=np.array([0.3, 0.1]))
    path = tmp_path / "model.json"
    dump_model(model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.P, P)
    np.testing.assert_array_equal(loaded.theta, [0.3, 0.1])


def test_model_shape_mismatch(tmp_path):
    path = write(tmp_path / "m.json", {"schema": "geodesic-dcd/model", "d": 6, "k": 2,
                                       "P": np.eye(6)[:, :3].tolist(), "theta": [0.1, 0.2]})
    with pytest.raises(SequenceFormatError):
        load_model(path)
