"""Gradient controller that maintains subframework rigidity while shedding load.

Each robot descends a cost with three parts: an inverse-power barrier on the
rigidity eigenvalues of the subframeworks it belongs to, the weighted
communication load, and an inter-robot collision barrier.  Link weights are
logistic in distance, so edges fade smoothly instead of switching; hop counts,
ball memberships and load coefficients are integer-valued and therefore frozen
within a step and refreshed between steps.  Only the weights are treated as
position-dependent by the gradients, and every analytic gradient is held to a
finite-difference oracle in the tests.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graphs import GeodesicTable, Graph
from .rigidity import REL_TOL, Framework, edge_unit_vectors, rigid_body_dim
from .subframeworks import ExtentAssignment, extent_assignment, inclusion_group

logger = logging.getLogger(__name__)


class RigidityLostError(RuntimeError):
    """Some subframework's rigidity eigenvalue fell to the zero threshold."""


@dataclass
class ControlParams:
    """Knobs of the controller; the gains weigh three incommensurate terms."""

    comm_range: float
    steepness: float = 0.5
    rigidity_exponent: float = 1.0
    collision_exponent: float = 2.0
    k_rigidity: float = 1.0
    k_load: float = 1.0
    k_collision: float = 1.0
    dt: float = 0.05
    weight_prune: float = 0.01
    eig_tol: float = REL_TOL
    max_step_retries: int = 8
    weighted_matrix: bool = True

    def __post_init__(self):
        if min(self.comm_range, self.steepness, self.rigidity_exponent,
               self.collision_exponent, self.dt) <= 0:
            raise ValueError("range, steepness, exponents and dt must be positive")
        if not 0 < self.weight_prune < 1:
            raise ValueError("weight_prune must lie in (0, 1)")
        if min(self.k_rigidity, self.k_load, self.k_collision) < 0:
            raise ValueError("gains must be non-negative")


def edge_weight(xi, xj, comm_range, steepness):
    """Logistic link weight: 1/2 at the communication range, ~1 well inside it."""
    dist = float(np.linalg.norm(np.asarray(xi, float) - np.asarray(xj, float)))
    return float(_logistic(np.array([dist]), comm_range, steepness)[0])


def _logistic(lengths, comm_range, steepness):
    return expit(steepness * (comm_range - lengths))


@dataclass
class SubframeworkState:
    """Frozen ball of one center plus its eigendata at the current positions."""

    center: int
    nodes: np.ndarray
    local: np.ndarray
    edge_idx: np.ndarray
    rho: float = None
    nu: np.ndarray = None
    lam_max: float = 0.0
    gap: float = np.inf
    degenerate: bool = False


@dataclass
class ControlState:
    """One controller step's frozen structure and the smooth quantities on it."""

    framework: Framework
    params: ControlParams
    extents: np.ndarray
    time: float
    table: GeodesicTable
    weights: np.ndarray
    units: np.ndarray
    lengths: np.ndarray
    c: np.ndarray
    coeff: np.ndarray
    inclusion: list
    subs: list
    _grads: dict = field(default_factory=dict, repr=False)

    @property
    def rhos(self):
        return np.array([s.rho if s.rho is not None else np.nan for s in self.subs])

    def require_rigid(self):
        for s in self.subs:
            if s.rho is None or s.rho <= self.params.eig_tol * s.lam_max:
                raise RigidityLostError(
                    f"subframework of node {s.center} lost rigidity "
                    f"(rho={s.rho}) at t={self.time:.3f}"
                )


def _sub_structures(graph, extents, table):
    e = graph.edge_array()
    subs = []
    for j in range(graph.n):
        nodes = np.array(table.ball(j, int(extents[j])), dtype=np.intp)
        local = np.full(graph.n, -1, dtype=np.intp)
        local[nodes] = np.arange(len(nodes))
        in_ball = local >= 0
        if len(e):
            edge_idx = np.flatnonzero(in_ball[e[:, 0]] & in_ball[e[:, 1]])
        else:
            edge_idx = np.zeros(0, dtype=np.intp)
        subs.append(SubframeworkState(j, nodes, local, edge_idx))
    return subs


def _sub_matrix(sub, d, units, weights, edge_endpoints):
    nj = len(sub.nodes)
    k = sub.edge_idx
    R = np.zeros((len(k), d * nj))
    if len(k):
        a = sub.local[edge_endpoints[k, 0]]
        b = sub.local[edge_endpoints[k, 1]]
        rows = np.arange(len(k))[:, None]
        R[rows, a[:, None] * d + np.arange(d)] = units[k]
        R[rows, b[:, None] * d + np.arange(d)] = -units[k]
    S = R.T @ (weights[k, None] * R)
    return 0.5 * (S + S.T)


def _sub_eigen(sub, d, units, weights, edge_endpoints, with_vectors):
    """Rigidity eigendata of one ball; None when the ball is too small to test."""
    nj = len(sub.nodes)
    if nj <= d:
        return None
    f = rigid_body_dim(d)
    S = _sub_matrix(sub, d, units, weights, edge_endpoints)
    if with_vectors:
        vals, vecs = np.linalg.eigh(S)
        nu = vecs[:, f].reshape(nj, d)
    else:
        vals = np.linalg.eigvalsh(S)
        nu = None
    gap = float(vals[f + 1] - vals[f]) if len(vals) > f + 1 else np.inf
    return float(vals[f]), nu, float(vals[-1]), gap


def build_control_state(fw, params, extents=None, time=0.0, require_rigid=True):
    """Snapshot the discrete structure of a framework and solve its eigenproblems.

    Extents are decided once, at startup, and carried verbatim across steps
    even as edges come and go; pass None to measure them here.  With
    require_rigid the build fails as soon as any ball is too small or has a
    rigidity eigenvalue at the zero threshold.
    """
    if extents is None:
        extents = extent_assignment(fw)
    if isinstance(extents, ExtentAssignment):
        if not extents.complete:
            raise RigidityLostError("some node has no rigid ball at any radius")
        extents = extents.as_array()
    extents = np.asarray(extents, dtype=np.intp)
    if extents.shape != (fw.n,) or (extents < 1).any():
        raise ValueError("extents must be one positive radius per node")

    graph = fw.graph
    e = graph.edge_array()
    if len(e):
        units, lengths = edge_unit_vectors(fw.positions, e)
    else:
        units, lengths = np.zeros((0, fw.dim)), np.zeros(0)
    weights = _logistic(lengths, params.comm_range, params.steepness)
    table = GeodesicTable.compute(graph)
    c = np.maximum(0.0, extents[:, None] - table.dist)
    coeff = c.sum(axis=0)
    incl = [inclusion_group(table, extents, i) for i in range(graph.n)]

    eig_weights = weights if params.weighted_matrix else np.ones_like(weights)
    subs = _sub_structures(graph, extents, table)
    degenerate = 0
    for sub in subs:
        out = _sub_eigen(sub, fw.dim, units, eig_weights, e, with_vectors=True)
        if out is None:
            continue
        sub.rho, sub.nu, sub.lam_max, sub.gap = out
        sub.degenerate = sub.gap <= 1e-6 * max(sub.lam_max, 1e-300)
        degenerate += sub.degenerate
    if degenerate:
        logger.debug(
            "%d subframeworks have near-multiple rigidity eigenvalues at t=%.3f; "
            "their eigenvectors only give descent subgradients", degenerate, time
        )
    state = ControlState(
        fw, params, extents, time, table, weights, units, lengths, c, coeff,
        incl, subs,
    )
    if require_rigid:
        state.require_rigid()
    return state


def _eval_geometry(state, positions):
    """Lengths, units and weights of the frozen edge set at shifted positions."""
    e = state.framework.graph.edge_array()
    if positions is None:
        return state.units, state.lengths, state.weights
    units, lengths = edge_unit_vectors(np.asarray(positions, float), e)
    weights = _logistic(lengths, state.params.comm_range, state.params.steepness)
    return units, lengths, weights


def subframework_rhos(state, positions=None):
    """Rigidity eigenvalue of every frozen ball, re-solved at the given positions."""
    units, _, weights = _eval_geometry(state, positions)
    if not state.params.weighted_matrix:
        weights = np.ones_like(weights)
    e = state.framework.graph.edge_array()
    d = state.framework.dim
    rhos = np.full(len(state.subs), np.nan)
    lam = np.zeros(len(state.subs))
    for k, sub in enumerate(state.subs):
        out = _sub_eigen(sub, d, units, weights, e, with_vectors=False)
        if out is not None:
            rhos[k], _, lam[k], _ = out
    return rhos, lam


def rigidity_potential(state, positions=None):
    """Sum of rho_j^(-q) over all subframeworks; blows up as any ball softens."""
    q = state.params.rigidity_exponent
    tol = state.params.eig_tol
    rhos, lam = subframework_rhos(state, positions)
    if np.isnan(rhos).any() or (rhos <= tol * lam).any():
        raise RigidityLostError("a subframework is at or below the zero threshold")
    return float((rhos ** -q).sum())


def load_potential(state, positions=None):
    """Weighted communication load with the ball coefficients held frozen."""
    _, _, weights = _eval_geometry(state, positions)
    e = state.framework.graph.edge_array()
    delta = np.zeros(state.framework.n)
    np.add.at(delta, e[:, 0], weights)
    np.add.at(delta, e[:, 1], weights)
    return float(state.coeff @ delta)


def collision_potential(fw, positions=None, exponent=2.0):
    """Inverse-power barrier over adjacent pairs only."""
    e = fw.graph.edge_array()
    x = fw.positions if positions is None else np.asarray(positions, float)
    if len(e) == 0:
        return 0.0
    _, lengths = edge_unit_vectors(x, e)
    return float((lengths ** -exponent).sum())


def center_rigidity_gradient(state, j):
    """Per-node d/dx of rho_j^(-q), for the members of ball j.

    Returns a dict node -> vector.  Both the unit-vector rows and the logistic
    weights of S_j move with the positions; the derivative follows the
    eigenvalue of a symmetric matrix through its (sub)eigenvector.
    """
    sub = state.subs[j]
    if sub.rho is None or sub.rho <= state.params.eig_tol * sub.lam_max:
        raise RigidityLostError(f"subframework of node {j} is not rigid")
    p = state.params
    e = state.framework.graph.edge_array()
    k = sub.edge_idx
    out = {}
    if len(k) == 0:
        return out
    a, b = e[k, 0], e[k, 1]
    r = state.units[k]
    ell = state.lengths[k]
    w = state.weights[k]
    s = sub.nu[sub.local[a]] - sub.nu[sub.local[b]]
    sigma = (r * s).sum(axis=1)
    coef = -p.rigidity_exponent * sub.rho ** -(p.rigidity_exponent + 1.0)
    if p.weighted_matrix:
        dw = -p.steepness * w * (1.0 - w)
        ga = dw[:, None] * sigma[:, None] ** 2 * r
        ga += 2.0 * (w * sigma / ell)[:, None] * (s - sigma[:, None] * r)
    else:
        ga = 2.0 * (sigma / ell)[:, None] * (s - sigma[:, None] * r)
    ga *= coef
    for t in range(len(k)):
        ia, ib = int(a[t]), int(b[t])
        out[ia] = out.get(ia, 0.0) + ga[t]
        out[ib] = out.get(ib, 0.0) - ga[t]
    return out


def center_load_gradient(state, j):
    """Per-node d/dx of the frozen-coefficient load of ball j.

    Every term rides on an edge with an endpoint strictly inside the ball, so
    the result only touches members of the ball: just outside it, both load
    coefficients on any incident edge are zero.
    """
    p = state.params
    e = state.framework.graph.edge_array()
    cj = state.c[j]
    out = {}
    if len(e) == 0:
        return out
    pair = cj[e[:, 0]] + cj[e[:, 1]]
    k = np.flatnonzero(pair > 0)
    dw = -p.steepness * state.weights[k] * (1.0 - state.weights[k])
    ga = (pair[k] * dw)[:, None] * state.units[k]
    for t, kk in enumerate(k):
        ia, ib = int(e[kk, 0]), int(e[kk, 1])
        out[ia] = out.get(ia, 0.0) + ga[t]
        out[ib] = out.get(ib, 0.0) - ga[t]
    return out


def _accumulate_rigidity_gradient(state):
    n, d = state.framework.n, state.framework.dim
    grad = np.zeros((n, d))
    state.require_rigid()
    for j in range(n):
        for i, v in center_rigidity_gradient(state, j).items():
            grad[i] += v
    return grad


def _accumulate_load_gradient(state):
    n, d = state.framework.n, state.framework.dim
    p = state.params
    e = state.framework.graph.edge_array()
    grad = np.zeros((n, d))
    if len(e):
        pair = state.coeff[e[:, 0]] + state.coeff[e[:, 1]]
        dw = -p.steepness * state.weights * (1.0 - state.weights)
        ga = (pair * dw)[:, None] * state.units
        np.add.at(grad, e[:, 0], ga)
        np.add.at(grad, e[:, 1], -ga)
    return grad


def _accumulate_collision_gradient(state):
    n, d = state.framework.n, state.framework.dim
    p = state.params.collision_exponent
    e = state.framework.graph.edge_array()
    grad = np.zeros((n, d))
    if len(e):
        ga = (-p * state.lengths ** -(p + 1.0))[:, None] * state.units
        np.add.at(grad, e[:, 0], ga)
        np.add.at(grad, e[:, 1], -ga)
    return grad


def _gradient(state, kind):
    if kind not in state._grads:
        builder = {
            "rigidity": _accumulate_rigidity_gradient,
            "load": _accumulate_load_gradient,
            "collision": _accumulate_collision_gradient,
        }[kind]
        state._grads[kind] = builder(state)
    return state._grads[kind]


def rigidity_gradient(state, i):
    return _gradient(state, "rigidity")[i].copy()


def load_gradient(state, i):
    return _gradient(state, "load")[i].copy()


def collision_gradient(state, i):
    return _gradient(state, "collision")[i].copy()


def rigidity_gradient_all(state):
    return _gradient(state, "rigidity").copy()


def load_gradient_all(state):
    return _gradient(state, "load").copy()


def collision_gradient_all(state):
    return _gradient(state, "collision").copy()


def velocity_field(state):
    """Steepest-descent velocities for all robots under the configured gains."""
    p = state.params
    u = -p.k_rigidity * _gradient(state, "rigidity")
    u = u - p.k_load * _gradient(state, "load")
    u = u - p.k_collision * _gradient(state, "collision")
    return u


def total_potential(state, positions=None):
    """Gain-weighted sum of the three cost terms on the frozen structure."""
    p = state.params
    return (
        p.k_rigidity * rigidity_potential(state, positions)
        + p.k_load * load_potential(state, positions)
        + p.k_collision * collision_potential(
            state.framework, positions, p.collision_exponent
        )
    )


def refresh_topology(graph, positions, params):
    """Drop edges whose weight decayed below the prune threshold, link close pairs.

    New edges need distance strictly inside the communication range, while old
    ones survive until the logistic weight reaches weight_prune; the slack
    between the two keeps the edge set from flapping.
    """
    x = np.asarray(positions, float)
    n = graph.n
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    adj = np.zeros((n, n), dtype=bool)
    e = graph.edge_array()
    if len(e):
        adj[e[:, 0], e[:, 1]] = True
    w = _logistic(dist, params.comm_range, params.steepness)
    keep = adj & (w >= params.weight_prune)
    keep |= np.triu(dist < params.comm_range, k=1)
    ii, jj = np.nonzero(keep)
    return Graph(n, list(zip(ii.tolist(), jj.tolist())))


def _state_if_rigid(graph, positions, params, extents, time):
    try:
        state = build_control_state(Framework(graph, positions), params,
                                    extents=extents, time=time,
                                    require_rigid=False)
    except ValueError:
        # a collapsing edge makes unit vectors meaningless
        return None
    for s in state.subs:
        if s.rho is None or not np.isfinite(s.rho):
            return None
        if s.rho <= params.eig_tol * s.lam_max:
            return None
    return state


def guarded_refresh(graph, positions, params, extents, time=0.0):
    """Refresh the topology without letting any frozen ball go flexible.

    Link changes move ball memberships by whole nodes, so a single prune or
    new link can zero a ball's eigenvalue faster than the smooth barrier can
    answer.  The plain rule is applied wholesale when every ball stays rigid;
    otherwise changes are admitted one edge at a time and the harmful ones
    wait: an overstretched edge some ball still needs stays in the graph, a
    new link that would pull an unbraced node into a ball stays pending.
    Returns the admitted graph with its control state, or (None, None) when
    even the unchanged edge set fails at these positions.
    """
    full = refresh_topology(graph, positions, params)
    state = _state_if_rigid(full, positions, params, extents, time)
    if state is not None:
        return full, state
    state = _state_if_rigid(graph, positions, params, extents, time)
    if state is None:
        return None, None
    admitted = graph
    old, new = set(graph.edges), set(full.edges)
    for e in sorted(old - new) + sorted(new - old):
        edges = set(admitted.edges)
        trial = Graph(graph.n, sorted(edges ^ {e}))
        t_state = _state_if_rigid(trial, positions, params, extents, time)
        if t_state is not None:
            admitted, state = trial, t_state
    return admitted, state


def control_step(state, params=None):
    """Advance one step: move along the descent field, then refresh the structure.

    A tentative step is judged on the topology it would commit.  It is
    rejected and retried with half the step size while any ball's eigenvalue
    would cross the zero threshold; running out of retries raises.  The
    returned state has refreshed geometry, topology and eigendata but carries
    the extents through unchanged.
    """
    p = state.params if params is None else params
    x = state.framework.positions
    u = velocity_field(state)
    dt = p.dt
    for _ in range(p.max_step_retries + 1):
        x_new = x + dt * u
        _, new_state = guarded_refresh(state.framework.graph, x_new, p,
                                       state.extents, state.time + dt)
        if new_state is not None:
            return new_state
        dt *= 0.5
    raise RigidityLostError(
        f"no acceptable step size after {p.max_step_retries} halvings "
        f"at t={state.time:.3f}"
    )
