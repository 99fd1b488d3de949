"""Hop-limited subframeworks: rigidity extents, inclusion groups, communication load.

Each node i looks only at its hop-ball V_i = {j : g_ij <= h_i} and the edges
induced there.  The smallest h_i whose ball is rigid is the rigidity extent of
i; when every node has one, local rigidity everywhere certifies rigidity of
the whole framework, so maintenance can run on subframeworks alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .graphs import GeodesicTable, induced_subgraph
from .rigidity import REL_TOL, Framework, _rho_only


@dataclass
class Subframework:
    """Hop-ball of a center node realized as a framework with local node ids."""

    center: int
    extent: int
    nodes: list
    framework: Framework

    @property
    def n(self):
        return len(self.nodes)


def extract_subframework(fw, center, extent, table=None):
    """Framework induced by the ball of the given hop radius around center."""
    if extent < 0:
        raise ValueError("extent must be nonnegative")
    if table is None:
        table = GeodesicTable.compute(fw.graph)
    nodes = table.ball(center, extent)
    sub, nodes = induced_subgraph(fw.graph, nodes)
    local = Framework(sub, fw.positions[nodes], fw.dim)
    return Subframework(center, extent, nodes, local)


def _ball_is_rigid(fw, nodes, tol):
    # balls with too few nodes cannot pass the eigenvalue test; callers treat
    # them as not rigid rather than erroring
    if len(nodes) <= fw.dim:
        return False
    sub, nodes = induced_subgraph(fw.graph, nodes)
    return _rho_only(Framework(sub, fw.positions[nodes], fw.dim), tol)


def rigidity_extent(fw, center, table=None, tol=REL_TOL):
    """Smallest hop radius whose ball around center is rigid, or None.

    Rigidity of growing balls is not monotone (a pendant node entering the
    ball with a single induced edge breaks it), so every radius is tested in
    turn.  The scan stops once the ball stops growing: from there on the
    subframework never changes again.
    """
    if table is None:
        table = GeodesicTable.compute(fw.graph)
    prev = None
    for h in range(1, fw.n + 1):
        nodes = table.ball(center, h)
        if nodes == prev:
            return None
        prev = nodes
        if _ball_is_rigid(fw, nodes, tol):
            return h
    return None


@dataclass
class ExtentAssignment:
    """Per-node rigidity extents; None marks nodes with no rigid ball at all."""

    extents: list = field(default_factory=list)

    @property
    def complete(self):
        return all(h is not None for h in self.extents)

    def worst_case(self):
        """Largest extent, or None when some node has no rigid ball."""
        if not self.complete:
            return None
        return max(self.extents)

    def as_array(self):
        if not self.complete:
            raise ValueError("assignment is incomplete")
        return np.array(self.extents, dtype=np.intp)


def extent_assignment(fw, table=None, tol=REL_TOL):
    """Rigidity extent of every node, sharing one geodesic table."""
    if table is None:
        table = GeodesicTable.compute(fw.graph)
    return ExtentAssignment(
        [rigidity_extent(fw, i, table, tol) for i in range(fw.n)]
    )


def verify_extents(fw, extents, table=None, tol=REL_TOL):
    """True iff the ball of every node at its assigned radius is rigid."""
    if len(extents) != fw.n:
        raise ValueError(f"expected {fw.n} extents, got {len(extents)}")
    if table is None:
        table = GeodesicTable.compute(fw.graph)
    return all(
        _ball_is_rigid(fw, table.ball(i, int(h)), tol)
        for i, h in enumerate(extents)
    )


def inclusion_group(table, extents, i):
    """Sorted centers whose subframework contains node i: {j : g_ij <= h_j}."""
    h = np.asarray(extents, dtype=float)
    return [int(j) for j in np.flatnonzero(table.dist[i] <= h)]


@dataclass
class LoadReport:
    """Measurement-forwarding cost of maintaining every subframework."""

    per_center: np.ndarray
    total: float


def communication_load(g, extents, table=None, degrees=None):
    """Load sum_i sum_{j in V_i} max(0, h_i - g_ij) * delta_j.

    A member j of the ball of center i relays measurements for h_i - g_ij
    hops, once per incident edge, so nodes deep inside large balls dominate.
    Passing weighted degrees gives the smooth variant used by the controller;
    the default integer degrees give 2m when every extent is 1.
    """
    h = np.asarray(extents, dtype=float)
    if h.shape != (g.n,):
        raise ValueError(f"expected {g.n} extents, got shape {h.shape}")
    if (h < 1).any():
        raise ValueError("extents must be at least 1")
    if table is None:
        table = GeodesicTable.compute(g)
    if degrees is None:
        degrees = g.degrees().astype(float)
    degrees = np.asarray(degrees, dtype=float)
    c = np.maximum(0.0, h[:, None] - table.dist)
    per_center = c @ degrees
    return LoadReport(per_center, float(per_center.sum()))
