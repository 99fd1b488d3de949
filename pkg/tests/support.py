"""Shared generators and brute-force oracles used across the test suite."""

import numpy as np

from rigidnet.graphs import UNREACHABLE, Graph, disk_proximity_graph, is_connected
from rigidnet.rigidity import Framework


def random_graph(rng, n, p):
    """Erdos-Renyi G(n, p)."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph(n, edges)


def random_connected_graph(rng, n, p, max_tries=200):
    for _ in range(max_tries):
        g = random_graph(rng, n, p)
        if is_connected(g):
            return g
    raise RuntimeError(f"no connected G({n}, {p}) in {max_tries} tries")


def random_framework(rng, n, d, p=0.5):
    g = random_graph(rng, n, p)
    return Framework(g, rng.uniform(-1.0, 1.0, size=(n, d)))


def random_rigid_framework(rng, n, d, max_tries=300):
    """Random connected framework that passes the rigidity eigenvalue test."""
    from rigidnet.rigidity import is_infinitesimally_rigid

    p = 0.7 if n <= 8 else 0.5
    for _ in range(max_tries):
        g = random_graph(rng, n, p)
        if not is_connected(g):
            continue
        fw = Framework(g, rng.uniform(-1.0, 1.0, size=(n, d)))
        if is_infinitesimally_rigid(fw):
            return fw
    raise RuntimeError(f"no rigid framework with n={n}, d={d} in {max_tries} tries")


def random_disk_framework(rng, n, side, range_, max_tries=300):
    """Connected disk-proximity framework with nodes uniform in a square region."""
    for _ in range(max_tries):
        x = rng.uniform(0.0, side, size=(n, 2))
        g = disk_proximity_graph(x, range_)
        if is_connected(g):
            return Framework(g, x)
    raise RuntimeError("no connected disk framework found")


def floyd_warshall(g):
    """All-pairs hop counts by the textbook O(n^3) recurrence."""
    n = g.n
    dist = np.full((n, n), UNREACHABLE)
    np.fill_diagonal(dist, 0.0)
    for i, j in g.edges:
        dist[i, j] = dist[j, i] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


def central_difference(f, x, eps=1e-6):
    """Central finite-difference gradient of a scalar function of a flat array."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = eps
        grad[k] = (f(x + step) - f(x - step)) / (2 * eps)
    return grad
