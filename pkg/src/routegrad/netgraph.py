"""Directed network model and exact link-utilization arithmetic.

The data model is deliberately small: a validated directed graph with
per-link capacities, plus plain float64 numpy vectors for link weights,
traffic demands, path membership and link utilization.  All vectors over
source-destination pairs follow one fixed enumeration (see
:func:`ordered_pairs`), so they can be combined without bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Floor defining "positive" link weights.  Plain gradient updates can
# otherwise drive weights to zero or below, which breaks shortest-path
# semantics.
W_MIN = 1e-3


class GraphError(ValueError):
    """Base class for graph construction and arithmetic errors."""


class SelfLoopError(GraphError):
    """A link connects a node to itself."""


class DuplicateEdgeError(GraphError):
    """Two directed links share the same (sender, receiver) pair."""


class NonPositiveCapacityError(GraphError):
    """A link capacity is zero or negative."""


class NotStronglyConnectedError(GraphError):
    """The directed graph does not connect every ordered node pair."""


class DimensionMismatchError(GraphError):
    """A vector or matrix does not match the graph's dimensions."""


class EmptyVectorError(GraphError):
    """An operation requiring a non-empty vector received an empty one."""


class EdgeTriple(NamedTuple):
    """One directed link: traffic flows ``sender -> receiver``."""

    edge_index: int
    receiver: int
    sender: int


@dataclass(frozen=True)
class Graph:
    """Immutable directed network topology with link capacities.

    Construction validates every structural invariant: indices in range,
    no self-loops, no duplicate directed links, strictly positive
    capacities, and strong connectivity (every ordered pair of nodes must
    be connected by some directed path, otherwise routing is undefined).

    Attributes:
        node_count: Number of nodes, indexed ``0 .. node_count-1``.
        receivers: int array of length ``edge_count``; head of each link.
        senders: int array of length ``edge_count``; tail of each link.
        capacities: float64 array of per-link capacities (Mbps).
        name: Free-form label used in reports.
    """

    node_count: int
    receivers: np.ndarray
    senders: np.ndarray
    capacities: np.ndarray
    name: str = ""
    # edge indices grouped by sender, built once for Dijkstra sweeps
    _out_edges: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise GraphError("graph needs at least one node")
        receivers = np.asarray(self.receivers, dtype=np.int64)
        senders = np.asarray(self.senders, dtype=np.int64)
        capacities = np.asarray(self.capacities, dtype=np.float64)
        if receivers.ndim != 1 or senders.shape != receivers.shape:
            raise DimensionMismatchError("receivers and senders must be equal-length 1-D arrays")
        if capacities.shape != receivers.shape:
            raise DimensionMismatchError(
                f"capacities has length {capacities.size}, expected {receivers.size}"
            )
        if receivers.size and (
            receivers.min() < 0 or receivers.max() >= n or senders.min() < 0 or senders.max() >= n
        ):
            raise GraphError("edge endpoint index out of range")
        if np.any(receivers == senders):
            k = int(np.flatnonzero(receivers == senders)[0])
            raise SelfLoopError(f"edge {k} is a self-loop at node {int(receivers[k])}")
        pairs = set()
        for k in range(receivers.size):
            key = (int(senders[k]), int(receivers[k]))
            if key in pairs:
                raise DuplicateEdgeError(f"duplicate directed link {key[0]}->{key[1]}")
            pairs.add(key)
        if np.any(capacities <= 0.0):
            k = int(np.flatnonzero(capacities <= 0.0)[0])
            raise NonPositiveCapacityError(f"edge {k} has capacity {capacities[k]}")

        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "receivers", receivers)
        object.__setattr__(self, "senders", senders)
        object.__setattr__(self, "capacities", capacities)
        receivers.setflags(write=False)
        senders.setflags(write=False)
        capacities.setflags(write=False)

        out: list[list[int]] = [[] for _ in range(n)]
        for k in range(senders.size):
            out[int(senders[k])].append(k)
        object.__setattr__(
            self, "_out_edges", tuple(np.asarray(e, dtype=np.int64) for e in out)
        )
        if not _strongly_connected(n, senders, receivers, self._out_edges):
            raise NotStronglyConnectedError(
                f"graph {self.name!r} is not strongly connected"
            )

    @property
    def edge_count(self) -> int:
        return int(self.receivers.size)

    @property
    def pair_count(self) -> int:
        return self.node_count * (self.node_count - 1)

    def edges(self) -> list[EdgeTriple]:
        """All links as (edge_index, receiver, sender) triples."""
        return [
            EdgeTriple(k, int(self.receivers[k]), int(self.senders[k]))
            for k in range(self.edge_count)
        ]

    def out_edges(self, node: int) -> np.ndarray:
        """Edge indices whose sender is ``node``."""
        return self._out_edges[node]


def _strongly_connected(n, senders, receivers, out_edges) -> bool:
    # BFS forward from node 0 and BFS over reversed edges; reaching every
    # node both ways is equivalent to strong connectivity.
    if n == 1:
        return True

    def reaches_all(adj_heads):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj_heads[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    fwd: list[list[int]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    for k in range(senders.size):
        fwd[int(senders[k])].append(int(receivers[k]))
        rev[int(receivers[k])].append(int(senders[k]))
    return reaches_all(fwd) and reaches_all(rev)


def build_graph(
    node_count: int,
    links: Iterable[tuple[int, int, float, bool]],
    name: str = "",
) -> Graph:
    """Builds a validated :class:`Graph` from a link list.

    Args:
        node_count: Number of nodes.
        links: Iterable of ``(a, b, capacity, directed)``.  A directed
            entry becomes the single link ``a -> b``; an undirected entry
            expands into the two links ``a -> b`` and ``b -> a``, each
            carrying the full stated capacity.
        name: Label attached to the graph.

    Raises:
        SelfLoopError, DuplicateEdgeError, NonPositiveCapacityError,
        NotStronglyConnectedError: invariant violations.
    """
    senders: list[int] = []
    receivers: list[int] = []
    capacities: list[float] = []
    for a, b, cap, directed in links:
        senders.append(int(a))
        receivers.append(int(b))
        capacities.append(float(cap))
        if not directed:
            senders.append(int(b))
            receivers.append(int(a))
            capacities.append(float(cap))
    return Graph(node_count, np.array(receivers), np.array(senders), np.array(capacities), name)


def ordered_pairs(node_count: int) -> np.ndarray:
    """The fixed enumeration of ordered node pairs.

    Lexicographic over (source, destination) with source != destination;
    row i of every routing matrix and entry i of every demand vector
    refer to ``ordered_pairs(n)[i]``.

    Returns:
        int array of shape ``(n*(n-1), 2)``.
    """
    n = int(node_count)
    pairs = np.empty((n * (n - 1), 2), dtype=np.int64)
    i = 0
    for u in range(n):
        for v in range(n):
            if u != v:
                pairs[i, 0] = u
                pairs[i, 1] = v
                i += 1
    return pairs


def pair_index(node_count: int, u: int, v: int) -> int:
    """Row index of ordered pair (u, v) in the fixed enumeration."""
    if u == v:
        raise GraphError("ordered pairs require u != v")
    return u * (node_count - 1) + (v if v < u else v - 1)


def floor_weights(weights: np.ndarray) -> np.ndarray:
    """Projects a weight vector onto the valid domain ``[W_MIN, inf)``."""
    return np.maximum(np.asarray(weights, dtype=np.float64), W_MIN)


def validate_weights(g: Graph, weights: np.ndarray) -> np.ndarray:
    """Checks a weight vector's shape and positivity floor; returns float64 view."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (g.edge_count,):
        raise DimensionMismatchError(
            f"weight vector has shape {w.shape}, expected ({g.edge_count},)"
        )
    if np.any(w < W_MIN):
        raise GraphError(f"weights below the W_MIN={W_MIN} floor")
    return w


def default_ospf_weights(g: Graph) -> np.ndarray:
    """Operator-default weights: inversely proportional to capacity.

    ``w_k = C_ref / c_k`` with ``C_ref`` the largest capacity in the
    graph, so the best-provisioned link gets weight exactly 1 and
    uniform-capacity networks get all-ones weights.
    """
    c = g.capacities
    return np.maximum(c.max() / c, W_MIN)


def validate_demands(g: Graph, demands: np.ndarray) -> np.ndarray:
    d = np.asarray(demands, dtype=np.float64)
    if d.shape != (g.pair_count,):
        raise DimensionMismatchError(
            f"demand vector has shape {d.shape}, expected ({g.pair_count},)"
        )
    if np.any(d < 0.0):
        raise GraphError("demands must be non-negative")
    return d


def utilization(g: Graph, routing: np.ndarray, demands: np.ndarray) -> np.ndarray:
    """Per-link utilization of a routing under a demand vector.

    ``rho_k = sum_i d_i * P[i, k] / c_k`` where row i of ``routing`` is the
    path membership vector of ordered pair i.  Values above 1 denote
    overload; they are returned as-is.
    """
    P = np.asarray(routing, dtype=np.float64)
    if P.shape != (g.pair_count, g.edge_count):
        raise DimensionMismatchError(
            f"routing matrix has shape {P.shape}, expected ({g.pair_count}, {g.edge_count})"
        )
    d = validate_demands(g, demands)
    return (d @ P) / g.capacities


def max_utilization(rho: np.ndarray) -> float:
    """Maximum entry of a utilization vector."""
    r = np.asarray(rho, dtype=np.float64)
    if r.size == 0:
        raise EmptyVectorError("utilization vector is empty")
    return float(r.max())


def validate_path_vector(g: Graph, membership: np.ndarray, u: int, v: int) -> None:
    """Checks that a 0/1 membership vector is a simple directed path u -> v.

    Raises:
        GraphError: when the marked edges do not form one simple path.
    """
    p = np.asarray(membership)
    if p.shape != (g.edge_count,):
        raise DimensionMismatchError(
            f"path vector has shape {p.shape}, expected ({g.edge_count},)"
        )
    if u == v:
        raise GraphError("a path requires distinct endpoints")
    marked = np.flatnonzero(p)
    if not np.all((p[marked] == 1)):
        raise GraphError("path vector entries must be 0 or 1")
    if marked.size == 0:
        raise GraphError("path vector marks no edges")
    nxt = {}
    for k in marked:
        s = int(g.senders[k])
        if s in nxt:
            raise GraphError(f"node {s} has two outgoing path edges")
        nxt[s] = int(g.receivers[k])
    node = u
    visited = {u}
    for _ in range(marked.size):
        if node not in nxt:
            raise GraphError(f"path breaks at node {node}")
        node = nxt.pop(node)
        if node in visited:
            raise GraphError(f"path revisits node {node}")
        visited.add(node)
    if node != v or nxt:
        raise GraphError("marked edges do not form a single u->v path")
