"""JSON containers for snapshot sequences, partitions and fitted models.

Snapshot-sequence file::

    {
      "schema": "geodesic-dcd/sequence", "version": 1,
      "d": 3, "directed": false,
      "times": [0.0, 1.0],
      "views": null,                 # or S; snapshots then hold S edge lists each
      "bipartite_split": null,       # or [n1, n2]
      "name_table": null,            # or d strings
      "snapshots": [[[0, 1, 1.0]], [[0, 1, 1.0]]]
    }

Partition file::

    {
      "schema": "geodesic-dcd/partition", "version": 1,
      "kind": "hard",                # or "soft"
      "k_per_step": [2, 2],          # optional for hard labels
      "labels": [[0, 0, 1], [0, 1, 1]],
      "memberships": null,           # T lists of d rows when soft
      "unlabeled": null              # optional T lists of d booleans
    }

Hard label files written by other tools may use arbitrary integer ids and
omit ``k_per_step``; ids are then compacted to 0..k-1 per snapshot.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from geodesic_dcd.core.geodesic import GeodesicModel
from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, PartitionSequence, SnapshotSequence
from geodesic_dcd.errors import InputError, SequenceFormatError

SEQUENCE_SCHEMA = "geodesic-dcd/sequence"
PARTITION_SCHEMA = "geodesic-dcd/partition"
MODEL_SCHEMA = "geodesic-dcd/model"
FORMAT_VERSION = 1

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SequenceFormatError(e.msg, location=f"{path}:line {e.lineno}")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")


def _write_json(document: Dict[str, Any], path: PathLike, indent: Union[int, None] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=indent)
        f.write("\n")


def _require(document: Dict[str, Any], key: str, kind: type, where: str = "") -> Any:
    location = f"{where}.{key}" if where else key
    if key not in document:
        raise SequenceFormatError("missing field", location=location)
    value = document[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    if kind is int and isinstance(value, bool):
        raise SequenceFormatError("expected int", location=location)
    if not isinstance(value, kind):
        raise SequenceFormatError(f"expected {kind.__name__}", location=location)
    return value


def _check_header(document: Any, schema: str) -> None:
    if not isinstance(document, dict):
        raise SequenceFormatError("top level must be an object")
    found = document.get("schema", schema)
    if found != schema:
        raise SequenceFormatError(f"expected schema {schema!r}, found {found!r}", location="schema")
    version = document.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise SequenceFormatError(f"unsupported version {version!r}", location="version")


def _parse_edges(raw: Any, location: str) -> EdgeSet:
    if not isinstance(raw, list):
        raise SequenceFormatError("expected an edge list", location=location)
    for j, triple in enumerate(raw):
        if not isinstance(triple, list) or len(triple) != 3:
            raise SequenceFormatError("edge must be [src, dst, weight]",
                                      location=f"{location}[{j}]")
        for f, value in enumerate(triple):
            numeric = isinstance(value, (int, float)) and not isinstance(value, bool)
            if not numeric or (f < 2 and not isinstance(value, int)):
                kind = "integer node index" if f < 2 else "number"
                raise SequenceFormatError(f"expected {kind}", location=f"{location}[{j}][{f}]")
    return EdgeSet.from_triples(raw)


def load_sequence(path: PathLike) -> SnapshotSequence:
    """Read and validate a snapshot-sequence file.

    Raises:
        InputError: Missing file
        SequenceFormatError: JSON or field-level format problem, with its location
        InvariantViolation: Parsed data breaks a graph invariant (e.g. "self-loop")
    """
    document = _read_json(path)
    _check_header(document, SEQUENCE_SCHEMA)

    d = _require(document, "d", int)
    directed = _require(document, "directed", bool)
    raw_snapshots = _require(document, "snapshots", list)
    times = document.get("times")
    views = document.get("views")
    split = document.get("bipartite_split")
    names = document.get("name_table")

    if views is not None and (not isinstance(views, int) or isinstance(views, bool) or views < 1):
        raise SequenceFormatError("views must be a positive integer", location="views")
    if split is not None and (not isinstance(split, list) or len(split) != 2):
        raise SequenceFormatError("bipartite_split must be [n1, n2]", location="bipartite_split")
    if times is not None and not isinstance(times, list):
        raise SequenceFormatError("times must be a list", location="times")

    snapshots = []
    for i, raw in enumerate(raw_snapshots):
        where = f"snapshots[{i}]"
        if views is None:
            snapshots.append(GraphSnapshot(d=d, edges=_parse_edges(raw, where), directed=directed,
                                           bipartite_split=tuple(split) if split else None))
            continue
        if not isinstance(raw, list) or len(raw) != views:
            raise SequenceFormatError(f"expected {views} view edge lists", location=where)
        snapshots.append(GraphSnapshot(
            d=d, directed=directed,
            views=tuple(_parse_edges(v, f"{where}[{s}]") for s, v in enumerate(raw)),
            bipartite_split=tuple(split) if split else None,
        ))

    if times is not None:
        times = np.asarray(times, dtype=np.float64)
    return SnapshotSequence(tuple(snapshots), times=times,
                            name_table=tuple(names) if names is not None else None)


def dump_sequence(seq: SnapshotSequence, path: PathLike) -> None:
    """Write ``seq`` so that ``load_sequence`` returns an equal sequence."""
    if seq.n_views > 1 or seq.snapshots[0].is_multiview:
        snapshots = [[v.triples() for v in snap.views] for snap in seq.snapshots]
        views = seq.n_views
    else:
        snapshots = [snap.edges.triples() for snap in seq.snapshots]
        views = None

    document = {
        "schema": SEQUENCE_SCHEMA,
        "version": FORMAT_VERSION,
        "d": seq.d,
        "directed": seq.directed,
        "times": [float(t) for t in seq.times],
        "views": views,
        "bipartite_split": list(seq.bipartite_split) if seq.bipartite_split else None,
        "name_table": list(seq.name_table) if seq.name_table is not None else None,
        "snapshots": snapshots,
    }
    _write_json(document, path)


def _compact(labels: List[int]) -> np.ndarray:
    _, inverse = np.unique(np.asarray(labels, dtype=np.int64), return_inverse=True)
    return inverse.reshape(-1)


def load_partitions(path: PathLike) -> PartitionSequence:
    """Read a partition file (hard labels or soft memberships)."""
    document = _read_json(path)
    _check_header(document, PARTITION_SCHEMA)

    kind = document.get("kind", "soft" if document.get("memberships") is not None else "hard")
    ks = document.get("k_per_step")
    unlabeled = document.get("unlabeled")
    unlabeled = tuple(np.asarray(m, dtype=bool) for m in unlabeled) if unlabeled else None

    if kind == "hard":
        raw = _require(document, "labels", list)
        for i, z in enumerate(raw):
            if not isinstance(z, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                                  for v in z):
                raise SequenceFormatError("expected a list of integer labels",
                                          location=f"labels[{i}]")
        if ks is None:
            return PartitionSequence(labels=tuple(_compact(z) for z in raw), unlabeled=unlabeled)
        return PartitionSequence(labels=tuple(np.asarray(z) for z in raw),
                                 k_per_step=tuple(ks), unlabeled=unlabeled)

    if kind == "soft":
        raw = _require(document, "memberships", list)
        try:
            memberships = tuple(np.asarray(m, dtype=np.float64) for m in raw)
        except (TypeError, ValueError):
            raise SequenceFormatError("memberships must be numeric matrices",
                                      location="memberships")
        return PartitionSequence(memberships=memberships,
                                 k_per_step=tuple(ks) if ks is not None else None,
                                 unlabeled=unlabeled)

    raise SequenceFormatError(f"unknown kind {kind!r}", location="kind")


def dump_partitions(parts: PartitionSequence, path: PathLike) -> None:
    """Write a partition file readable by ``load_partitions``."""
    document = {
        "schema": PARTITION_SCHEMA,
        "version": FORMAT_VERSION,
        "kind": "soft" if parts.is_soft else "hard",
        "k_per_step": list(parts.k_per_step),
        "labels": [z.tolist() for z in parts.labels] if parts.labels is not None else None,
        "memberships": ([m.tolist() for m in parts.memberships]
                        if parts.memberships is not None else None),
        "unlabeled": [m.tolist() for m in parts.unlabeled] if parts.unlabeled is not None else None,
    }
    _write_json(document, path)


def load_model(path: PathLike) -> GeodesicModel:
    """Read a fitted geodesic (P, Theta, k, d)."""
    document = _read_json(path)
    _check_header(document, MODEL_SCHEMA)
    d = _require(document, "d", int)
    k = _require(document, "k", int)
    P = np.asarray(_require(document, "P", list), dtype=np.float64)
    theta = np.asarray(_require(document, "theta", list), dtype=np.float64)
    if P.shape != (d, 2 * k) or theta.shape != (k,):
        raise SequenceFormatError(f"P must be {d}x{2 * k} and theta length {k}", location="P")
    return GeodesicModel(P=P, theta=theta)


def dump_model(model: GeodesicModel, path: PathLike) -> None:
    """Write a fitted geodesic for later reuse."""
    document = {
        "schema": MODEL_SCHEMA,
        "version": FORMAT_VERSION,
        "d": model.d,
        "k": model.k,
        "P": model.P.tolist(),
        "theta": model.theta.tolist(),
    }
    _write_json(document, path, indent=2)
