"""Rigidity matrices, eigenvalue tests and the diameter-based eigenvalue bound.

A framework is a graph together with a d-dimensional realization (d = 2 or 3).
Infinitesimal rigidity is tested two ways: the rank of the rigidity matrix R
must equal d*n - f, and the (f+1)-th smallest eigenvalue of S = R^T W R must
be positive, where f = d(d+1)/2 counts the rigid-body degrees of freedom.
The two verdicts always agree; a mismatch raises, it is never papered over.
"""

import json

import numpy as np
import scipy.linalg as sla

from .graphs import GeodesicTable, is_connected

# Zero-eigenvalue tolerance, relative to the largest eigenvalue of S.  Double
# precision eigensolvers on unit-vector rigidity matrices resolve the spectral
# gap far above this.
REL_TOL = 1e-8

# Relative gap under which the rigidity eigenvalue is treated as multiple and
# its eigenvector only defines a subgradient direction.
DEGENERATE_GAP_REL = 1e-6

_COINCIDENT = 1e-12


class FrameworkTooSmallError(ValueError):
    """Rigidity tests need n >= d + 1 nodes."""


def rigid_body_dim(d):
    """Dimension f of the trivial-motion space in d dimensions."""
    return d * (d + 1) // 2


class Framework:
    """A graph realized by positions in the plane or in space."""

    def __init__(self, graph, positions, dim=None):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2:
            raise ValueError("positions must be an n x d array")
        if dim is None:
            dim = positions.shape[1]
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if positions.shape != (graph.n, dim):
            raise ValueError(
                f"positions shape {positions.shape} does not match "
                f"(n={graph.n}, d={dim})"
            )
        e = graph.edge_array()
        if len(e):
            lengths = np.linalg.norm(positions[e[:, 0]] - positions[e[:, 1]], axis=1)
            if (lengths < _COINCIDENT).any():
                k = int(np.argmin(lengths))
                raise ValueError(f"coincident adjacent nodes on edge {graph.edges[k]}")
        self.graph = graph
        self.positions = positions
        self.dim = dim

    @property
    def n(self):
        return self.graph.n

    def with_positions(self, positions):
        return Framework(self.graph, positions, self.dim)

    def with_graph(self, graph):
        return Framework(graph, self.positions, self.dim)

    def edge_lengths(self):
        e = self.graph.edge_array()
        return np.linalg.norm(self.positions[e[:, 0]] - self.positions[e[:, 1]], axis=1)


def edge_unit_vectors(positions, edge_array):
    """Unit vectors r_ij = (x_i - x_j)/|x_i - x_j| and lengths, one row per edge."""
    diff = positions[edge_array[:, 0]] - positions[edge_array[:, 1]]
    lengths = np.linalg.norm(diff, axis=1)
    if (lengths < _COINCIDENT).any():
        raise ValueError("coincident adjacent nodes")
    return diff / lengths[:, None], lengths


def rigidity_matrix(fw):
    """m x dn matrix whose row for edge {i,j} holds r_ij in block i and -r_ij in block j."""
    d, n = fw.dim, fw.n
    e = fw.graph.edge_array()
    R = np.zeros((len(e), d * n))
    if len(e) == 0:
        return R
    r, _ = edge_unit_vectors(fw.positions, e)
    rows = np.arange(len(e))[:, None]
    cols_i = e[:, 0, None] * d + np.arange(d)
    cols_j = e[:, 1, None] * d + np.arange(d)
    R[rows, cols_i] = r
    R[rows, cols_j] = -r
    return R


def strains(fw, u):
    """Per-edge strain r_ij . (u_i - u_j) of a stacked velocity vector."""
    u = np.asarray(u, dtype=float).reshape(fw.n, fw.dim)
    e = fw.graph.edge_array()
    if len(e) == 0:
        return np.zeros(0)
    r, _ = edge_unit_vectors(fw.positions, e)
    du = u[e[:, 0]] - u[e[:, 1]]
    return (r * du).sum(axis=1)


def energy(fw, u):
    """Total squared strain induced by a velocity vector."""
    s = strains(fw, u)
    return float(s @ s)


def symmetric_rigidity_matrix(R, weights):
    """S = R^T W R for a diagonal positive weight vector (all-ones: normalized case)."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (R.shape[0],):
        raise ValueError(f"expected {R.shape[0]} weights, got shape {w.shape}")
    if (w <= 0).any():
        raise ValueError("weights must be positive")
    S = R.T @ (w[:, None] * R)
    return 0.5 * (S + S.T)


def trivial_motion_basis(fw):
    """Orthonormal dn x f basis of rigid-body velocity fields (translations + rotations)."""
    d, n = fw.dim, fw.n
    if n < 2:
        raise ValueError("need at least two nodes")
    x = fw.positions - fw.positions.mean(axis=0)
    cols = []
    for a in range(d):
        t = np.zeros((n, d))
        t[:, a] = 1.0
        cols.append(t.ravel())
    if d == 2:
        cols.append(np.column_stack([-x[:, 1], x[:, 0]]).ravel())
    else:
        for axis in range(3):
            w = np.zeros(3)
            w[axis] = 1.0
            cols.append(np.cross(w, x).ravel())
    B = np.column_stack(cols)
    Q, Rq = np.linalg.qr(B)
    if (np.abs(np.diag(Rq)) < 1e-10 * max(1.0, np.abs(Rq).max())).any():
        raise ValueError("degenerate realization: rigid motions do not span f dimensions")
    return Q


def rigidity_eigenpair(S, d):
    """Rigidity eigenvalue (the (f+1)-th smallest of S) and its unit eigenvector."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0] // d
    if S.shape[0] != n * d or S.shape[0] != S.shape[1]:
        raise ValueError("S must be dn x dn")
    if n <= d:
        raise FrameworkTooSmallError(
            f"framework too small for the rigidity eigenvalue test (n={n} <= d={d})"
        )
    f = rigid_body_dim(d)
    vals, vecs = np.linalg.eigh(S)
    nu = vecs[:, f]
    k = int(np.argmax(np.abs(nu)))
    if nu[k] < 0:
        nu = -nu
    return float(vals[f]), nu


class RigidityReport:
    """Spectral rigidity summary of a framework under a given edge weighting."""

    def __init__(self, rank_R, eigenvalues, rho, nu, rigid, f, degenerate, tol_abs):
        self.rank_R = rank_R
        self.eigenvalues = eigenvalues
        self.rho = rho
        self.nu = nu
        self.rigid = rigid
        self.f = f
        self.degenerate = degenerate
        self.tol_abs = tol_abs

    def to_json(self):
        return json.dumps(
            {
                "rank_R": self.rank_R,
                "eigenvalues": [float(v) for v in self.eigenvalues],
                "rho": self.rho,
                "nu": [float(v) for v in self.nu],
                "rigid": self.rigid,
                "f": self.f,
                "degenerate": self.degenerate,
                "tol_abs": self.tol_abs,
            }
        )


def rigidity_report(fw, weights=None, tol=REL_TOL):
    """Full spectrum, rank and rigidity verdict; rank and eigenvalue tests must agree."""
    d, n = fw.dim, fw.n
    if n <= d:
        raise FrameworkTooSmallError(
            f"framework too small for the rigidity eigenvalue test (n={n} <= d={d})"
        )
    f = rigid_body_dim(d)
    R = rigidity_matrix(fw)
    if weights is None:
        weights = np.ones(R.shape[0])
    S = symmetric_rigidity_matrix(R, weights)
    vals, vecs = np.linalg.eigh(S)
    lam_max = float(vals[-1]) if len(vals) else 0.0
    tol_abs = tol * max(lam_max, 0.0)
    rho = float(vals[f])
    nu = vecs[:, f]
    k = int(np.argmax(np.abs(nu)))
    if nu[k] < 0:
        nu = -nu
    rigid_eig = rho > tol_abs
    sv = sla.svdvals(R) if R.shape[0] else np.zeros(0)
    sv_max = float(sv[0]) if len(sv) else 0.0
    rank_R = int((sv > np.sqrt(tol) * sv_max).sum()) if sv_max > 0 else 0
    rigid_rank = rank_R == d * n - f
    if rigid_eig != rigid_rank:
        raise RuntimeError(
            f"rank test ({rank_R} vs {d * n - f}) and eigenvalue test "
            f"(rho={rho:.3e}, tol={tol_abs:.3e}) disagree"
        )
    gap = float(vals[f + 1] - vals[f]) if len(vals) > f + 1 else np.inf
    degenerate = bool(gap <= DEGENERATE_GAP_REL * max(lam_max, 1e-300))
    return RigidityReport(rank_R, vals, rho, nu, rigid_eig, f, degenerate, tol_abs)


def _rho_only(fw, tol):
    """Eigenvalue-test verdict without the SVD cross-check (hot-path variant)."""
    f = rigid_body_dim(fw.dim)
    R = rigidity_matrix(fw)
    S = R.T @ R
    vals = np.linalg.eigvalsh(0.5 * (S + S.T))
    lam_max = float(vals[-1]) if len(vals) else 0.0
    return float(vals[f]) > tol * max(lam_max, 0.0)


def is_infinitesimally_rigid(fw, tol=REL_TOL, cross_check=True):
    """True iff every zero-strain velocity field is a rigid-body motion.

    Disconnected frameworks are reported as not rigid rather than erroring;
    frameworks with n <= d are rejected because the trivial-motion dimension
    assumption behind the lambda_{f+1} test breaks down there.
    """
    if fw.n <= fw.dim:
        raise FrameworkTooSmallError(
            f"framework too small for the rigidity eigenvalue test "
            f"(n={fw.n} <= d={fw.dim})"
        )
    if not is_connected(fw.graph):
        return False
    if cross_check:
        return rigidity_report(fw, tol=tol).rigid
    return _rho_only(fw, tol)


def diameter_eigenvalue_bound(m, D):
    """Upper bound 2m/D^2 on the normalized rigidity eigenvalue of a connected framework."""
    if D < 1:
        raise ValueError("diameter must be at least 1")
    return 2.0 * m / D**2


def diameter_bound_certificate(g, table=None):
    """Rayleigh quotient of the Laplacian at the hop-count test vector.

    Picks a pair (p, q) realizing the diameter D, sets u_i = g_pi / D and
    mean-centers it.  The returned quotient sits between lambda_2(L) and
    2m/D^2, certifying the diameter bound without any eigensolve.
    """
    if table is None:
        table = GeodesicTable.compute(g)
    D = table.diameter()
    p = int(np.argmax(table.eccentricities()))
    u = table.dist[p] / D
    ut = u - u.mean()
    num = 0.0
    for i, j in g.edges:
        num += (u[i] - u[j]) ** 2
    den = float(ut @ ut)
    return num / den
