from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from coref.corpus.types import ClusterSet
from coref.train.slates import EPSILON


def decode_clusters(slates: Sequence) -> ClusterSet:
    """Keeps every node's best edge and reads clusters off the connected components.

    Queries whose best option is the dummy are abandoned together with the
    edges pointing at them. Candidates never used as queries only carry
    incoming edges.
    """

    choices = {slate.query_span: slate.best() for slate in slates}
    abandoned = {slate.query_span for slate in slates if choices[slate.query_span] == EPSILON}

    edges = []
    for slate in slates:
        best = choices[slate.query_span]
        if best == EPSILON:
            continue
        target = slate.option(best)
        if target not in abandoned:
            edges.append((slate.query_span, target))

    nodes = sorted({span for edge in edges for span in edge})
    if not nodes:
        return ClusterSet()

    index = {span: i for i, span in enumerate(nodes)}
    rows = np.array([index[a] for a, _ in edges])
    cols = np.array([index[b] for _, b in edges])
    graph = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(len(nodes), len(nodes)))
    _, labels = connected_components(graph, directed=True, connection="weak")

    clusters = {}
    for span, label in zip(nodes, labels):
        clusters.setdefault(label, []).append(span)
    return ClusterSet(cluster for cluster in clusters.values() if len(cluster) >= 2)
