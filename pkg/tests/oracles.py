"""Independent brute-force oracles used across the test suite.

Everything here is deliberately naive: exhaustive enumeration and
one-demand-at-a-time accumulation.  These functions never call the
library's routing or utilization code paths.
"""

from __future__ import annotations

import numpy as np


def enumerate_simple_paths(n_nodes, senders, receivers, u, v):
    """All simple directed paths u -> v as lists of edge indices (DFS)."""
    out = [[] for _ in range(n_nodes)]
    for k in range(len(senders)):
        out[senders[k]].append(k)
    paths = []

    def dfs(node, visited, edges):
        if node == v:
            paths.append(list(edges))
            return
        for k in out[node]:
            nxt = receivers[k]
            if nxt not in visited:
                visited.add(nxt)
                edges.append(k)
                dfs(nxt, visited, edges)
                edges.pop()
                visited.remove(nxt)

    dfs(u, {u}, [])
    return paths


def min_path_cost(n_nodes, senders, receivers, weights, u, v):
    """Cheapest simple-path cost u -> v by exhaustive enumeration."""
    paths = enumerate_simple_paths(n_nodes, senders, receivers, u, v)
    assert paths, f"no path {u}->{v}"
    return min(sum(weights[k] for k in p) for p in paths)


def accumulate_loads(n_edges, path_edges_per_pair, demands):
    """Per-link load by walking each demand along its path, one at a time."""
    loads = np.zeros(n_edges)
    for d, edges in zip(demands, path_edges_per_pair):
        for k in edges:
            loads[k] += d
    return loads


def softmax_temperature_reference(x, tau):
    """Direct scalar evaluation of the temperature-weighted maximum."""
    x = [float(v) for v in x]
    num = sum(v * np.exp(v / tau) for v in x)
    den = sum(np.exp(v / tau) for v in x)
    return num / den


def central_difference(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad
