"""Shared fixtures: small planted graphs with known communities."""

import itertools
import logging

import numpy as np
import pytest

from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, SnapshotSequence
from geodesic_dcd.sbm.config import SbmConfig


@pytest.fixture(autouse=True)
def package_logger():
    """Undo configure_logging calls made by CLI tests so caplog sees every record."""
    yield
    logger = logging.getLogger("geodesic_dcd")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


def clique_edges(groups, offset=0):
    """Undirected weight-1 edges inside every group of node indices."""
    triples = []
    for group in groups:
        for a, b in itertools.combinations(sorted(group), 2):
            triples.append([a + offset, b + offset, 1.0])
    return triples


def cliques_snapshot(k, s, bridge=False):
    """k disjoint s-cliques on nodes 0..k*s-1, optionally chained by single bridges."""
    groups = [range(c * s, (c + 1) * s) for c in range(k)]
    triples = clique_edges(groups)
    if bridge:
        triples += [[c * s + s - 1, (c + 1) * s, 1.0] for c in range(k - 1)]
    return GraphSnapshot(d=k * s, edges=EdgeSet.from_triples(triples))


@pytest.fixture
def two_cliques():
    """Two K_4's joined by one bridge edge."""
    return cliques_snapshot(2, 4, bridge=True)


@pytest.fixture
def planted_sequence():
    """Five identical snapshots of three bridged 6-cliques."""
    snapshot = cliques_snapshot(3, 6, bridge=True)
    return SnapshotSequence(tuple(snapshot for _ in range(5)))


@pytest.fixture
def planted_labels():
    return np.repeat(np.arange(3), 6)


@pytest.fixture
def easy_sbm():
    """Strongly assortative two-block SBM that every method should solve."""
    return SbmConfig(d=40, T=6, k=2, p_in=0.9, p_out=0.05, p_switch=0.0, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
