"""Heat-bath Glauber dynamics for the random-cluster (FK) model on a torus.

The per-edge conditional law only depends on whether the edge's endpoints
are connected by some other open path: if they are, toggling the edge does
not change the open-cluster count and the conditional probability of the
edge being open is exactly p; if they are not, opening the edge merges two
clusters and the probability becomes p / (p + q (1 - p)).

The sweep kernel and the exact-enumeration oracle for tiny tori are jitted;
a systematic full sweep re-decides every edge once in index order.
"""

from __future__ import annotations

import numpy as np
from numba import njit


def heat_bath_p_open(connected: bool, p: float, q: float) -> float:
    """Conditional probability that an edge is open given the rest."""
    if connected:
        return p
    return p / (p + q * (1.0 - p))


@njit(cache=True)
def _connected_without_edge(bits, skip_edge, source, target, adj_indptr,
                            adj_sites, adj_edges, mark, stamp, queue):
    """BFS through open edges, ignoring ``skip_edge``."""
    if source == target:
        return True
    head = 0
    tail = 0
    queue[tail] = source
    tail += 1
    mark[source] = stamp
    while head < tail:
        x = queue[head]
        head += 1
        for k in range(adj_indptr[x], adj_indptr[x + 1]):
            e = adj_edges[k]
            if e == skip_edge or not bits[e]:
                continue
            y = adj_sites[k]
            if mark[y] == stamp:
                continue
            if y == target:
                return True
            mark[y] = stamp
            queue[tail] = y
            tail += 1
    return False


@njit(cache=True)
def glauber_sweeps(bits, edge_u, edge_v, adj_indptr, adj_sites, adj_edges,
                   p, q, sweeps, seed):
    """Run full systematic heat-bath sweeps in place over ``bits``."""
    np.random.seed(seed)
    n_sites = adj_indptr.shape[0] - 1
    n_edges = bits.shape[0]
    mark = np.zeros(n_sites, dtype=np.int64)
    queue = np.empty(n_sites, dtype=np.int64)
    stamp = 0
    for _ in range(sweeps):
        for b in range(n_edges):
            stamp += 1
            joined = _connected_without_edge(
                bits, b, edge_u[b], edge_v[b], adj_indptr, adj_sites,
                adj_edges, mark, stamp, queue,
            )
            if joined:
                p_open = p
            else:
                p_open = p / (p + q * (1.0 - p))
            bits[b] = np.random.random() < p_open


@njit(cache=True)
def cluster_count_table(n_sites, edge_u, edge_v):
    """Open-cluster counts o(s) for every edge subset s of a tiny graph.

    States are bitmasks over edges; isolated sites count as clusters.
    Only feasible for n_edges <= ~20.
    """
    n_edges = edge_u.shape[0]
    n_states = 1 << n_edges
    table = np.empty(n_states, dtype=np.int8)
    parent = np.empty(n_sites, dtype=np.int64)
    for s in range(n_states):
        for i in range(n_sites):
            parent[i] = i
        count = n_sites
        for b in range(n_edges):
            if not (s >> b) & 1:
                continue
            ru = edge_u[b]
            while parent[ru] != ru:
                parent[ru] = parent[parent[ru]]
                ru = parent[ru]
            rv = edge_v[b]
            while parent[rv] != rv:
                parent[rv] = parent[parent[rv]]
                rv = parent[rv]
            if ru != rv:
                parent[ru] = rv
                count -= 1
        table[s] = count
    return table


@njit(cache=True)
def visit_frequency_chain(o_table, n_edges, p, q, n_steps, seed):
    """Random-edge heat-bath chain on a tiny torus; returns state visit counts."""
    np.random.seed(seed)
    counts = np.zeros(o_table.shape[0], dtype=np.int64)
    s = (1 << n_edges) - 1  # all-open start
    base = p / (1.0 - p)
    for _ in range(n_steps):
        b = int(np.random.random() * n_edges)
        s1 = s | (1 << b)
        s0 = s1 ^ (1 << b)
        if o_table[s1] == o_table[s0]:
            ratio = base
        else:
            ratio = base / q  # opening merged two clusters
        p_open = ratio / (1.0 + ratio)
        if np.random.random() < p_open:
            s = s1
        else:
            s = s0
        counts[s] += 1
    return counts


def exact_fk_weights(n_sites, edge_u, edge_v, p, q):
    """Normalized FK weights p^n (1-p)^(E-n) q^o over all edge subsets."""
    edge_u = np.asarray(edge_u, dtype=np.int64)
    edge_v = np.asarray(edge_v, dtype=np.int64)
    n_edges = edge_u.shape[0]
    if n_edges > 20:
        raise ValueError("exact enumeration limited to 20 edges")
    o_table = cluster_count_table(n_sites, edge_u, edge_v)
    states = np.arange(1 << n_edges, dtype=np.uint32)
    n_open = np.zeros(states.shape[0], dtype=np.int64)
    for b in range(n_edges):
        n_open += (states >> b) & 1
    log_w = (
        n_open * np.log(p)
        + (n_edges - n_open) * np.log1p(-p)
        + o_table.astype(np.float64) * np.log(q)
    )
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    return w, o_table
