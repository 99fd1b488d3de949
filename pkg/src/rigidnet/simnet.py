"""Round-based message engine for the decentralized rigidity controller.

The engine owns the true world state; agents only see their mailboxes.  One
round delivers every queued message across one edge and then lets each node
process its inbox.  A control tick runs a full exchange: every node floods its
position out to the centers whose balls contain it, each center computes the
per-member slopes of its own rigidity and load terms from the payloads it
collected, and ships them back along the recorded flood paths.  The round
counter certifies that every (center, member) pair is served within twice the
worst extent, which the exchange asserts as a hard bound.

Static protocol tables (ball membership, flood ttl) derive from the frozen
extents and are precomputed by the engine at setup; a running system would
need a bootstrap protocol to distribute them, which is out of scope here.
Dynamic data (positions, gradient contributions, estimates) moves only
through messages, and the engine checks every hop against the edge set.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .control import (
    ControlParams,
    RigidityLostError,
    build_control_state,
    guarded_refresh,
)
from .graphs import Graph, GeodesicTable, bfs_distances
from .localization import (
    FilterState,
    anchor_update,
    filter_update,
    inflate_covariance,
    make_filters,
)
from .rigidity import (
    Framework,
    rigid_body_dim,
    rigidity_matrix,
    symmetric_rigidity_matrix,
)
from .subframeworks import ExtentAssignment, communication_load

POSITION_FLOOD = "position_flood"
GRADIENT_RETURN = "gradient_return"
ESTIMATE_BROADCAST = "estimate_broadcast"


class ProtocolViolation(RuntimeError):
    """A message crossed a non-edge or the exchange missed its round bound."""


@dataclass
class Message:
    """One hop-by-hop payload; path records every node it has visited.

    Returns carry the full reverse route so intermediate nodes can forward
    without any routing state of their own; floods have no fixed route.
    """

    kind: str
    origin: int
    payload: object
    ttl: int
    path: tuple
    target: int = None
    route: tuple = None

    def __post_init__(self):
        if self.kind not in (POSITION_FLOOD, GRADIENT_RETURN,
                             ESTIMATE_BROADCAST):
            raise ValueError(f"unknown message kind {self.kind!r}")
        if self.ttl < 0:
            raise ValueError("ttl must be non-negative")


@dataclass
class RoundLog:
    """Audit trail of one exchange: traffic per round and delivery rounds."""

    inbox_sizes: list = field(default_factory=list)
    outbox_sizes: list = field(default_factory=list)
    pair_round: dict = field(default_factory=dict)
    expected_pairs: frozenset = frozenset()
    completion_round: int = None

    @property
    def rounds(self):
        return len(self.inbox_sizes)

    @property
    def complete(self):
        return self.expected_pairs == set(self.pair_round)

    def record_delivery(self, center, member, round_index):
        if (center, member) not in self.pair_round:
            self.pair_round[(center, member)] = round_index


def _check_edge(adj, sender, receiver):
    if receiver not in adj[sender]:
        raise ProtocolViolation(
            f"message sent from {sender} to non-neighbor {receiver}")


def _trace_line(trace, round_index, msg):
    if trace is None:
        return
    trace.write(json.dumps({
        "round": round_index,
        "kind": msg.kind,
        "origin": int(msg.origin),
        "target": None if msg.target is None else int(msg.target),
        "ttl": int(msg.ttl),
    }) + "\n")


def _center_payloads(center, h, member_data, params, d):
    """Both gradient payloads of one center from its collected flood data.

    member_data maps node id -> (position, neighbor id tuple).  The center
    rebuilds its ball's induced framework from that alone: any edge with a
    nonzero load coefficient has an endpoint strictly inside the ball, so
    the induced edge set carries every term that matters, and hop counts
    inside the ball equal the global ones.
    """
    nodes = sorted(member_data)
    local = {v: t for t, v in enumerate(nodes)}
    pos = np.array([member_data[v][0] for v in nodes], dtype=float)
    edges = set()
    for v in nodes:
        for u in member_data[v][1]:
            if u in local and u != v:
                edges.add((min(local[u], local[v]), max(local[u], local[v])))
    g = Graph(len(nodes), sorted(edges))
    fw = Framework(g, pos)
    hops = bfs_distances(g, local[center])
    c = np.maximum(0.0, h - hops)

    e = g.edge_array()
    diff = pos[e[:, 0]] - pos[e[:, 1]]
    lengths = np.linalg.norm(diff, axis=1)
    units = diff / lengths[:, None]
    weights = expit(params.steepness * (params.comm_range - lengths))

    f = rigid_body_dim(d)
    R = rigidity_matrix(fw)
    w_used = weights if params.weighted_matrix else np.ones(len(e))
    S = symmetric_rigidity_matrix(R, w_used)
    vals, vecs = np.linalg.eigh(S)
    rho = float(vals[f])
    lam_max = float(vals[-1])
    if rho <= params.eig_tol * lam_max:
        raise RigidityLostError(
            f"subframework of node {center} is not rigid")
    nu = vecs[:, f].reshape(len(nodes), d)

    s = nu[e[:, 0]] - nu[e[:, 1]]
    sigma = (units * s).sum(axis=1)
    coef = -params.rigidity_exponent * rho ** -(params.rigidity_exponent + 1.0)
    if params.weighted_matrix:
        dw = -params.steepness * weights * (1.0 - weights)
        ga = dw[:, None] * sigma[:, None] ** 2 * units
        ga += 2.0 * (weights * sigma / lengths)[:, None] \
            * (s - sigma[:, None] * units)
    else:
        ga = 2.0 * (sigma / lengths)[:, None] * (s - sigma[:, None] * units)
    ga *= coef

    pair = c[e[:, 0]] + c[e[:, 1]]
    dw = -params.steepness * weights * (1.0 - weights)
    gl = (pair * dw)[:, None] * units

    out = {v: (np.zeros(d), np.zeros(d)) for v in nodes}
    for t in range(len(e)):
        va, vb = nodes[e[t, 0]], nodes[e[t, 1]]
        out[va] = (out[va][0] + ga[t], out[va][1] + gl[t])
        out[vb] = (out[vb][0] - ga[t], out[vb][1] - gl[t])
    return out


def run_exchange_phase(fw, extents, params, positions=None, trace=None,
                       max_rounds=None):
    """Flood positions out, return per-center gradient payloads back.

    Returns (contributions, log) where contributions maps (center, member)
    to a (rigidity_slope, load_slope) vector pair and the log records the
    traffic and the delivery round of every pair.  Every contribution must
    land within 2 * max extent rounds, else ProtocolViolation.
    """
    if isinstance(extents, ExtentAssignment):
        if not extents.complete:
            raise ValueError("exchange needs an extent for every node")
        h = extents.as_array()
    else:
        h = np.asarray(extents, dtype=int)
    n = fw.graph.n
    d = fw.positions.shape[1]
    x = fw.positions if positions is None else np.asarray(positions, float)
    adj = [set(int(j) for j in fw.graph.neighbors(i)) for i in range(n)]
    nbr_tuple = [tuple(sorted(adj[i])) for i in range(n)]

    # static protocol tables, precomputed from the frozen extents
    table = GeodesicTable.compute(fw.graph)
    balls = [frozenset(table.ball(j, int(h[j]))) for j in range(n)]
    inclusion = [
        [j for j in range(n) if i in balls[j]] for i in range(n)
    ]
    ttl = [max(int(h[j]) for j in inclusion[i]) for i in range(n)]
    eta = int(h.max())
    limit = 2 * eta if max_rounds is None else int(max_rounds)

    log = RoundLog(expected_pairs=frozenset(
        (j, i) for j in range(n) for i in balls[j]))

    # per node: origin -> (position, neighbor list, hop path from the origin)
    position_table = [
        {i: (x[i].copy(), nbr_tuple[i], ())} for i in range(n)
    ]
    seen_flood = [set([i]) for i in range(n)]
    fired = [False] * n
    contributions = {}
    outbox = [[] for _ in range(n)]

    def fire_ready_centers(round_index):
        for j in range(n):
            if fired[j] or not balls[j] <= set(position_table[j]):
                continue
            fired[j] = True
            member_data = {
                v: position_table[j][v][:2] for v in balls[j]
            }
            payloads = _center_payloads(j, int(h[j]), member_data, params, d)
            for i in sorted(balls[j]):
                if i == j:
                    contributions[(j, j)] = payloads[j]
                    log.record_delivery(j, j, round_index)
                    continue
                route = tuple(reversed((i,) + position_table[j][i][2]))
                outbox[j].append(Message(
                    kind=GRADIENT_RETURN, origin=j, target=i,
                    payload=payloads[i], ttl=len(route) - 1,
                    path=route[:1], route=route,
                ))

    fire_ready_centers(0)
    for i in range(n):
        outbox[i].append(Message(
            kind=POSITION_FLOOD, origin=i,
            payload=(x[i].copy(), nbr_tuple[i]),
            ttl=ttl[i], path=(i,),
        ))

    round_index = 0
    while round_index < limit:
        round_index += 1
        inbox = [[] for _ in range(n)]
        sent = 0
        for sender in range(n):
            for msg in outbox[sender]:
                if msg.kind == GRADIENT_RETURN:
                    nxt = msg.route[len(msg.path)]
                    _check_edge(adj, sender, nxt)
                    inbox[nxt].append((sender, msg))
                    sent += 1
                else:
                    for nxt in sorted(adj[sender]):
                        if nxt in msg.path:
                            continue
                        inbox[nxt].append((sender, msg))
                        sent += 1
                _trace_line(trace, round_index, msg)
        log.outbox_sizes.append(sent)
        outbox = [[] for _ in range(n)]

        received = 0
        for i in range(n):
            for sender, msg in sorted(
                    inbox[i], key=lambda sm: (sm[1].origin, sm[0])):
                received += 1
                if msg.kind == POSITION_FLOOD:
                    if msg.origin in seen_flood[i]:
                        continue
                    seen_flood[i].add(msg.origin)
                    pos, nbrs = msg.payload
                    hop_path = msg.path[1:] + (i,)
                    position_table[i][msg.origin] = (pos, nbrs, hop_path)
                    if msg.ttl > 1:
                        outbox[i].append(Message(
                            kind=POSITION_FLOOD, origin=msg.origin,
                            payload=msg.payload, ttl=msg.ttl - 1,
                            path=msg.path + (i,),
                        ))
                else:
                    if i == msg.target:
                        contributions[(msg.origin, i)] = msg.payload
                        log.record_delivery(msg.origin, i, round_index)
                    else:
                        outbox[i].append(Message(
                            kind=GRADIENT_RETURN, origin=msg.origin,
                            target=msg.target, payload=msg.payload,
                            ttl=msg.ttl - 1, path=msg.path + (i,),
                            route=msg.route,
                        ))
        log.inbox_sizes.append(received)
        fire_ready_centers(round_index)
        if log.complete and not any(outbox):
            break

    if not log.complete:
        missing = sorted(log.expected_pairs - set(log.pair_round))[:5]
        raise ProtocolViolation(
            f"exchange incomplete after {limit} rounds, e.g. pairs {missing}")
    log.completion_round = max(log.pair_round.values())
    if log.completion_round > 2 * eta:
        raise ProtocolViolation(
            f"exchange took {log.completion_round} rounds, bound is {2 * eta}")
    return contributions, log


def broadcast_estimates(fw, estimates):
    """One-hop estimate exchange; returns per-node dict neighbor -> estimate."""
    n = fw.graph.n
    adj = [set(int(j) for j in fw.graph.neighbors(i)) for i in range(n)]
    est = np.asarray(estimates, dtype=float)
    inbox = [{} for _ in range(n)]
    for i in range(n):
        for j in sorted(adj[i]):
            _check_edge(adj, i, j)
            inbox[j][i] = est[i].copy()
    return inbox


def decentralized_velocity(fw, extents, params, positions=None):
    """Sum every robot's received slope payloads into its velocity command.

    The rigidity and load parts come from the exchange; the collision part
    is assembled locally from one-hop neighbor positions, which the flood
    already delivered.  Matches the centralized field on the same positions.
    """
    x = fw.positions if positions is None else np.asarray(positions, float)
    contributions, log = run_exchange_phase(fw, extents, params, positions=x)
    n, d = x.shape
    u = np.zeros((n, d))
    for (j, i), (g_rho, g_load) in contributions.items():
        u[i] -= params.k_rigidity * g_rho
        u[i] -= params.k_load * g_load
    e = fw.graph.edge_array()
    if len(e):
        diff = x[e[:, 0]] - x[e[:, 1]]
        lengths = np.linalg.norm(diff, axis=1)
        p = params.collision_exponent
        ga = (-p * lengths ** -(p + 1.0))[:, None] * (diff / lengths[:, None])
        for t in range(len(e)):
            u[e[t, 0]] -= params.k_collision * ga[t]
            u[e[t, 1]] += params.k_collision * ga[t]
    return u, log


def _framework_rho(fw):
    f = rigid_body_dim(fw.dim)
    R = rigidity_matrix(fw)
    S = R.T @ R
    vals = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(vals[f])




@dataclass
class WorldConfig:
    """Knobs of the closed-loop run that are not controller parameters."""

    noise_std: float = 0.0
    use_estimates: bool = True
    anchors: tuple = ()
    initial_estimate_error: float = 0.0
    initial_variance: float = 1.0
    range_variance: float = 0.01
    inflation_rate: float = 1.0
    seed: int = 0


@dataclass
class World:
    """True state plus every robot's filter, advanced tick by tick."""

    framework: Framework
    params: ControlParams
    config: WorldConfig
    extents: np.ndarray
    filters: list
    rng: np.random.Generator
    time: float = 0.0
    metrics: list = field(default_factory=list)


def make_world(fw, params, config=None):
    """Freeze the extents at setup time and seed the per-robot filters."""
    config = config or WorldConfig()
    state = build_control_state(fw, params)
    extents = state.extents.copy()
    rng = np.random.default_rng(config.seed)
    est = fw.positions.copy()
    if config.initial_estimate_error > 0:
        d = fw.positions.shape[1]
        est = est + rng.uniform(
            -config.initial_estimate_error / np.sqrt(d),
            config.initial_estimate_error / np.sqrt(d),
            size=est.shape)
    filters = make_filters(est, config.initial_variance,
                           config.range_variance, anchors=config.anchors)
    for a in config.anchors:
        filters[a] = anchor_update(filters[a], fw.positions[a])
    world = World(framework=fw, params=params, config=config,
                  extents=extents, filters=filters, rng=rng)
    _append_metrics(world, state, log=None)
    return world


def _append_metrics(world, state, log):
    fw = world.framework
    x = fw.positions
    rhos = np.array([r for r in state.rhos if r is not None])
    load = communication_load(fw.graph, world.extents, table=state.table)
    m = len(fw.graph.edges)
    e = fw.graph.edge_array()
    min_dist = float(np.linalg.norm(
        x[e[:, 0]] - x[e[:, 1]], axis=1).min()) if m else np.inf
    est = np.array([f.estimate for f in world.filters])
    world.metrics.append({
        "t": world.time,
        "min_rho": float(rhos.min()),
        "mean_rho": float(rhos.mean()),
        "max_rho": float(rhos.max()),
        "framework_rho": _framework_rho(fw),
        "load_ratio": load.total / (2.0 * m) if m else np.nan,
        "edge_count": m,
        "min_distance": min_dist,
        "max_estimate_error": float(np.linalg.norm(est - x, axis=1).max()),
        "exchange_rounds": None if log is None else log.completion_round,
    })


def step_simulation(world):
    """Advance one control tick; raises RigidityLostError on failure.

    Order per tick: range measurement and estimate exchange with filter
    updates, gradient exchange on the positions the robots believe, true
    motion under the summed commands with step halving against rigidity
    loss, covariance inflation for the motion, then the topology refresh.
    """
    fw = world.framework
    params = world.params
    cfg = world.config
    n, d = fw.positions.shape

    if cfg.use_estimates:
        est = np.array([f.estimate for f in world.filters])
        neighbor_est = broadcast_estimates(fw, est)
        measured = {}
        for a, b in fw.graph.edges:
            dist = float(np.linalg.norm(fw.positions[a] - fw.positions[b]))
            if cfg.noise_std > 0:
                dist += float(world.rng.normal(0.0, cfg.noise_std))
            measured[(a, b)] = dist
        new_filters = []
        for i in range(n):
            nbrs = sorted(neighbor_est[i])
            z = np.array([measured[(min(i, j), max(i, j))] for j in nbrs])
            nb = np.array([neighbor_est[i][j] for j in nbrs]).reshape(-1, d)
            f = filter_update(world.filters[i], z, nb)
            if f.is_anchor:
                f = anchor_update(f, fw.positions[i])
            new_filters.append(f)
        world.filters[:] = new_filters
        believed = np.array([f.estimate for f in world.filters])
    else:
        believed = fw.positions

    u, log = decentralized_velocity(fw, world.extents, params,
                                    positions=believed)

    # a candidate step is judged on the topology it would commit: a link
    # change that zeroes a frozen ball's eigenvalue must wait, not crash
    # the next tick
    dt = params.dt
    new_state = None
    for _ in range(params.max_step_retries + 1):
        candidate = fw.positions + dt * u
        _, new_state = guarded_refresh(fw.graph, candidate, params,
                                       world.extents, world.time + dt)
        if new_state is not None:
            break
        dt *= 0.5
    else:
        raise RigidityLostError(
            f"no acceptable step size after {params.max_step_retries} "
            f"halvings at t={world.time:.3f}")

    # each robot dead-reckons its own commanded motion, then widens its
    # covariance for the actuation uncertainty of that same motion
    for i in range(n):
        f = world.filters[i]
        moved = FilterState(f.estimate + dt * u[i], f.covariance,
                            f.range_variance, f.is_anchor)
        world.filters[i] = inflate_covariance(
            moved, u[i], dt, lam_p=cfg.inflation_rate)

    world.framework = new_state.framework
    world.time += dt
    # rigid balls must leave the whole framework rigid; asserted every tick
    if _framework_rho(world.framework) <= params.eig_tol:
        raise RigidityLostError(
            "rigid subframeworks left a flexible framework")
    _append_metrics(world, new_state, log)
    return world


def run_simulation(world, duration):
    """Step until the clock passes duration; the world carries the metrics."""
    while world.time < duration:
        step_simulation(world)
    return world
