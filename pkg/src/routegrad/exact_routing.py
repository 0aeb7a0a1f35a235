"""Exact weighted shortest-path routing (Dijkstra) with deterministic ties.

Produces the ground truth consumed everywhere else: per-pair path
vectors, the stacked all-pairs routing matrix, and a fast exact
link-load evaluator used by the optimizers.

Tie-breaking is part of the contract: among equal-cost alternatives the
predecessor with the lowest sender node index wins, so identical inputs
always yield identical paths regardless of platform or iteration order.
"""

from __future__ import annotations

import heapq

import numpy as np

from .netgraph import Graph, GraphError, pair_index, validate_demands, validate_weights


class UnreachableError(GraphError):
    """A node was unreachable; impossible on a validated graph."""


class SameEndpointsError(GraphError):
    """A path was requested from a node to itself."""


def shortest_path_tree(g: Graph, weights: np.ndarray, src: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-source shortest paths under positive link weights.

    Args:
        g: Validated graph.
        weights: Positive weight per link.
        src: Source node index.

    Returns:
        ``(dist, pred_edge)``: exact path costs from ``src`` and, for every
        other node, the index of the final link of its chosen path
        (``pred_edge[src] == -1``).  Among links that close an equal-cost
        path, the one with the lowest sender index is chosen.
    """
    w = validate_weights(g, weights)
    n = g.node_count
    if not 0 <= src < n:
        raise GraphError(f"source index {src} out of range")

    dist = np.full(n, np.inf)
    dist[src] = 0.0
    settled = np.zeros(n, dtype=bool)
    heap: list[tuple[float, int]] = [(0.0, src)]
    receivers = g.receivers
    while heap:
        d_u, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        for k in g.out_edges(u):
            v = receivers[k]
            nd = d_u + w[k]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, int(v)))

    if not settled.all():
        raise UnreachableError(f"nodes unreachable from {src}; graph state is corrupt")

    # Predecessor pass: every relaxation order yields the same distances,
    # so the tie-break can be applied afterwards against the final values.
    pred = np.full(n, -1, dtype=np.int64)
    best_sender = np.full(n, n, dtype=np.int64)
    senders = g.senders
    for k in range(g.edge_count):
        v = receivers[k]
        if v == src:
            continue
        s = senders[k]
        if dist[s] + w[k] == dist[v] and s < best_sender[v]:
            best_sender[v] = s
            pred[v] = k
    return dist, pred


def path_edges(g: Graph, pred: np.ndarray, src: int, dst: int) -> list[int]:
    """Edge indices of the chosen path, walked back from ``dst`` to ``src``."""
    edges = []
    node = dst
    while node != src:
        k = int(pred[node])
        if k < 0:
            raise UnreachableError(f"no predecessor recorded for node {node}")
        edges.append(k)
        node = int(g.senders[k])
    edges.reverse()
    return edges


def path_vector(g: Graph, weights: np.ndarray, u: int, v: int) -> np.ndarray:
    """Binary membership vector of the tie-broken shortest path u -> v."""
    if u == v:
        raise SameEndpointsError("path endpoints must differ")
    _, pred = shortest_path_tree(g, weights, u)
    p = np.zeros(g.edge_count)
    p[path_edges(g, pred, u, v)] = 1.0
    return p


def routing_matrix(g: Graph, weights: np.ndarray) -> np.ndarray:
    """All-pairs routing matrix: one path vector per ordered pair.

    Row ``pair_index(n, u, v)`` satisfies the :func:`path_vector`
    contract for (u, v).
    """
    n = g.node_count
    P = np.zeros((g.pair_count, g.edge_count))
    for u in range(n):
        _, pred = shortest_path_tree(g, weights, u)
        for v in range(n):
            if v == u:
                continue
            P[pair_index(n, u, v), path_edges(g, pred, u, v)] = 1.0
    return P


def link_loads(g: Graph, weights: np.ndarray, demands: np.ndarray) -> np.ndarray:
    """Exact per-link traffic without materializing the routing matrix.

    For every source the demand of each destination is pushed down the
    shortest-path tree in one sweep (descending distance order), so the
    cost per source is one Dijkstra run plus O(n).  Matches
    ``demands @ routing_matrix`` exactly up to summation order.
    """
    d = validate_demands(g, demands)
    n = g.node_count
    loads = np.zeros(g.edge_count)
    carry = np.empty(n)
    for u in range(n):
        dist, pred = shortest_path_tree(g, weights, u)
        base = u * (n - 1)
        for v in range(n):
            if v != u:
                carry[v] = d[base + (v if v < u else v - 1)]
        carry[u] = 0.0
        for v in np.argsort(dist, kind="stable")[::-1]:
            if v == u:
                continue
            k = pred[v]
            loads[k] += carry[v]
            carry[g.senders[k]] += carry[v]
    return loads


def exact_max_utilization(g: Graph, weights: np.ndarray, demands: np.ndarray) -> float:
    """Maximum link utilization of the exact routing under ``weights``."""
    return float((link_loads(g, weights, demands) / g.capacities).max())
