"""Combinatorial second-stage solvers: shortest paths and Held-Karp tours.

Arc weights are given per canonical arc index; arcs that are not available
carry weight ``inf``.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from typing import Optional, Sequence

import numpy as np

from ..core import Graph

HELD_KARP_MAX_NODES = 15
_HK_CHUNK = 64


def label_correcting(graph: Graph, weights: np.ndarray, available: Optional[np.ndarray] = None):
    """FIFO label-correcting s-t shortest path.

    Returns ``(cost, arcs)``; ``cost`` is ``inf`` and ``arcs`` empty when the
    sink cannot be reached. Assumes no negative cycles.
    """
    n = graph.node_count
    out: list[list[int]] = [[] for _ in range(n)]
    for e, (t, _) in enumerate(graph.arcs):
        if available is None or available[e]:
            out[t].append(e)
    dist = [math.inf] * n
    pred = [-1] * n
    s, t_node = graph.source, graph.sink
    dist[s] = 0.0
    queue = deque([s])
    queued = [False] * n
    queued[s] = True
    while queue:
        v = queue.popleft()
        queued[v] = False
        dv = dist[v]
        for e in out[v]:
            h = graph.arcs[e][1]
            nd = dv + weights[e]
            if nd < dist[h] - 1e-12:
                dist[h] = nd
                pred[h] = e
                if not queued[h]:
                    queue.append(h)
                    queued[h] = True
    if not math.isfinite(dist[t_node]):
        return math.inf, []
    arcs = []
    v = t_node
    while v != s:
        e = pred[v]
        arcs.append(e)
        v = graph.arcs[e][0]
    return dist[t_node], arcs[::-1]


def dag_shortest_paths(graph: Graph, weights: np.ndarray, available: Optional[np.ndarray] = None) -> np.ndarray:
    """s-t distances for many weight rows at once on a topologically numbered DAG.

    ``weights`` is ``(m, q)``; returns ``(m,)`` with ``inf`` for unreachable sinks.
    """
    W = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    m = W.shape[0]
    dist = np.full((graph.node_count, m), np.inf)
    dist[graph.source] = 0.0
    # canonical arcs are sorted by tail, and layered numbering is topological
    for e, (t, h) in enumerate(graph.arcs):
        if available is not None and not available[e]:
            continue
        np.minimum(dist[h], dist[t] + W[:, e], out=dist[h])
    return dist[graph.sink]


def _arc_cost_tensor(graph: Graph, weights: np.ndarray, available: Optional[np.ndarray]) -> np.ndarray:
    """``(n, n, m)`` cost tensor with ``inf`` for missing or unavailable arcs."""
    W = np.atleast_2d(weights)
    n = graph.node_count
    C = np.full((n, n, W.shape[0]), np.inf)
    for e, (t, h) in enumerate(graph.arcs):
        if available is None or available[e]:
            C[t, h] = W[:, e]
    return C


def held_karp_batch(graph: Graph, weights: np.ndarray, available: Optional[np.ndarray] = None) -> np.ndarray:
    """Minimum Hamiltonian cycle cost for each weight row (``inf`` if none)."""
    W = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    out = np.empty(W.shape[0])
    for lo in range(0, W.shape[0], _HK_CHUNK):
        out[lo : lo + _HK_CHUNK] = _held_karp(graph, W[lo : lo + _HK_CHUNK], available)[0]
    return out


def held_karp(graph: Graph, weights: np.ndarray, available: Optional[np.ndarray] = None):
    """Optimal tour for one weight vector: ``(cost, arc indices in tour order)``."""
    cost, parent, last = _held_karp(graph, np.atleast_2d(weights), available, track=True)
    cost = float(cost[0])
    if not math.isfinite(cost):
        return math.inf, []
    n = graph.node_count
    if n == 1:
        return 0.0, []
    index = graph.arc_index()
    K = n - 1
    S = (1 << K) - 1
    k = int(last[0])
    order = []
    while k >= 0:
        order.append(k + 1)
        j = int(parent[S, k, 0])
        S ^= 1 << k
        k = j
    nodes = [0] + order[::-1] + [0]
    return cost, [index[(a, b)] for a, b in zip(nodes[:-1], nodes[1:])]


def _held_karp(graph: Graph, W: np.ndarray, available, track: bool = False):
    n = graph.node_count
    m = W.shape[0]
    if n > HELD_KARP_MAX_NODES:
        raise ValueError(f"Held-Karp limited to {HELD_KARP_MAX_NODES} nodes, got {n}")
    C = _arc_cost_tensor(graph, W, available)
    if n == 1:
        return np.zeros(m), None, None
    K = n - 1
    full = (1 << K) - 1
    dp = np.full((1 << K, K, m), np.inf)
    parent = np.full((1 << K, K, m), -1, dtype=np.int8) if track else None
    for j in range(K):
        dp[1 << j, j] = C[0, j + 1]
    inner = C[1:, 1:]  # (K, K, m), node j+1 -> k+1
    for S in range(1, 1 << K):
        if S == full:
            break
        members = [j for j in range(K) if S >> j & 1]
        outside = [k for k in range(K) if not S >> k & 1]
        if not outside:
            continue
        cur = dp[S, members]  # (|S|, m)
        cand = cur[:, None, :] + inner[np.ix_(members, outside)]  # (|S|, |out|, m)
        best = cand.min(axis=0)
        targets = np.array([S | (1 << k) for k in outside])
        prev = dp[targets, outside]
        better = best < prev
        dp[targets, outside] = np.where(better, best, prev)
        if track:
            arg = np.asarray(members, dtype=np.int8)[cand.argmin(axis=0)]
            parent[targets, outside] = np.where(better, arg, parent[targets, outside])
    closing = dp[full] + C[1:, 0]  # (K, m)
    cost = closing.min(axis=0)
    last = closing.argmin(axis=0) if track else None
    return cost, parent, last


def enumerate_paths(graph: Graph) -> list[list[int]]:
    """All source-sink paths of a layered DAG as arc-index lists."""
    out: list[list[int]] = [[] for _ in range(graph.node_count)]
    for e, (t, _) in enumerate(graph.arcs):
        out[t].append(e)
    paths: list[list[int]] = []

    def walk(v: int, acc: list[int]) -> None:
        if v == graph.sink:
            paths.append(list(acc))
            return
        for e in out[v]:
            acc.append(e)
            walk(graph.arcs[e][1], acc)
            acc.pop()

    walk(graph.source, [])
    return paths


def enumerate_tours(graph: Graph) -> list[list[int]]:
    """All directed Hamiltonian cycles through node 0 as arc-index lists."""
    index = graph.arc_index()
    n = graph.node_count
    tours = []
    for perm in itertools.permutations(range(1, n)):
        nodes = (0,) + perm + (0,)
        try:
            tours.append([index[(a, b)] for a, b in zip(nodes[:-1], nodes[1:])])
        except KeyError:
            continue
    return tours


def route_matrix(routes: Sequence[Sequence[int]], q: int) -> np.ndarray:
    """Incidence matrix ``(len(routes), q)`` of arc-index routes."""
    R = np.zeros((len(routes), q))
    for r, arcs in enumerate(routes):
        R[r, list(arcs)] = 1.0
    return R
