"""
Routing for general sensor networks with direct and cooperative (CB/CT) links.

- build_links: direct links from the SNR threshold, cooperative links with
  the source's nearest neighbour as the single helper
- solve_lifetime_lp: max-min lifetime as a linear program in q_hat = T q
- simulate_dynamic: round-based routing on an inverse-barrier energy cost
- shortest_path_lifetime: static min-hop baseline
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from errors import (
    DuplicatePositionError,
    FlowInvariantError,
    InvalidParameterError,
    NoRouteError,
    NoSuchLinkError,
    UnboundedProblemError,
)
from gainmodels import PhyParams
from lpsolver import LPStatus, StandardLP, solve_lp

log = logging.getLogger(__name__)

FLOW_TOL = 1e-6
# spend checks tolerate float drift from repeated subtraction
_ENERGY_SLACK = 1e-12


@dataclass
class SensorNode:
    id: int
    x: float
    y: float
    E_init: float = 1.0
    Q: float = 0.0
    E_remaining: float = None

    def __post_init__(self):
        if self.E_remaining is None:
            self.E_remaining = self.E_init
        if not self.E_init > 0:
            raise InvalidParameterError(f"node {self.id}: E_init must be > 0, got {self.E_init}")
        if not 0 <= self.E_remaining <= self.E_init:
            raise InvalidParameterError(
                f"node {self.id}: E_remaining {self.E_remaining} outside [0, {self.E_init}]"
            )

    @property
    def position(self):
        return (self.x, self.y)

    @property
    def is_sink(self):
        return self.Q < 0

    @property
    def is_origin(self):
        return self.Q > 0


@dataclass(frozen=True, order=True)
class Link:
    source: int
    target: int
    helpers: tuple = ()

    @property
    def cooperative(self):
        return bool(self.helpers)

    def spenders(self):
        return (self.source,) + self.helpers


@dataclass
class LinkSet:
    direct: set = field(default_factory=set)          # {(i, j)}
    cooperative: list = field(default_factory=list)   # [Link(i, m, (h,))]

    def reachable(self, i):
        """S_i, the nodes i reaches by direct transmission."""
        return sorted(j for (s, j) in self.direct if s == i)

    def all_links(self, with_coop=True):
        links = [Link(i, j) for (i, j) in sorted(self.direct)]
        if with_coop:
            links.extend(sorted(self.cooperative))
        return links

    def helpers_for(self, i, j):
        if (i, j) in self.direct:
            return ()
        for link in self.cooperative:
            if link.source == i and link.target == j:
                return link.helpers
        raise NoSuchLinkError(f"no link from node {i} to node {j}")

    def graph(self, with_coop=True, nodes=None):
        G = nx.DiGraph()
        if nodes is not None:
            G.add_nodes_from(sorted(n.id for n in nodes))
        for link in self.all_links(with_coop):
            G.add_edge(link.source, link.target, link=link)
        return G


@dataclass
class FlowSolution:
    qhat: dict            # Link -> lifetime-scaled flow
    T: float
    energy_used: dict     # node id -> energy
    status: str = LPStatus.OPTIMAL.value

    def to_json(self):
        return {
            "status": self.status,
            "T": self.T,
            "qhat": [
                {"source": link.source, "target": link.target, "helpers": list(link.helpers), "qhat": value}
                for link, value in sorted(self.qhat.items())
            ],
            "energy_used": {str(i): e for i, e in sorted(self.energy_used.items())},
        }


@dataclass(frozen=True)
class CostParams:
    beta1: float = 2.0
    beta2: float = 2.0

    def __post_init__(self):
        if not (self.beta1 > 0 and self.beta2 > 0):
            raise InvalidParameterError(f"beta1 and beta2 must be > 0, got {self.beta1}, {self.beta2}")


@dataclass(frozen=True)
class TrafficSpec:
    kind: str = "fixed"          # fixed | poisson
    packet_energy: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "poisson"):
            raise InvalidParameterError(f"traffic kind must be 'fixed' or 'poisson', got '{self.kind}'")
        if not self.packet_energy > 0:
            raise InvalidParameterError(f"packet_energy must be > 0, got {self.packet_energy}")


@dataclass
class SimulationResult:
    lifetime: float        # rounds * packet_energy, comparable with the LP's T
    rounds: float          # completed rounds plus the delivered share of the last one
    completed_rounds: int
    delivered: int


# ---------------------------------------------------------------- topology

def _index(nodes):
    by_id = {}
    for node in nodes:
        if node.id in by_id:
            raise InvalidParameterError(f"duplicate node id {node.id}")
        by_id[node.id] = node
    return by_id


def sinks_of(nodes):
    return sorted(n.id for n in nodes if n.is_sink)


def origins_of(nodes):
    return sorted(n.id for n in nodes if n.is_origin)


def nearest_neighbors(nodes):
    """Nearest other node for each node id; ties go to the lowest id."""
    ordered = sorted(nodes, key=lambda n: n.id)
    xy = np.array([n.position for n in ordered], dtype=float)
    dist = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    np.fill_diagonal(dist, np.inf)
    # argmin returns the first minimum, i.e. the lowest id
    return {ordered[k].id: ordered[int(np.argmin(dist[k]))].id for k in range(len(ordered))}


def build_links(nodes, phy: PhyParams) -> LinkSet:
    """Direct links meet gamma0 alone; a cooperative link i -> m meets it with
    i's nearest neighbour h transmitting too, where h can decode i and m is
    out of i's direct range. Sinks neither originate nor help."""
    if len(nodes) < 2:
        raise InvalidParameterError("build_links needs at least two nodes")
    by_id = _index(nodes)
    ordered = [by_id[i] for i in sorted(by_id)]

    seen = {}
    for node in ordered:
        if node.position in seen:
            raise DuplicatePositionError(f"nodes {seen[node.position]} and {node.id} share position {node.position}")
        seen[node.position] = node.id

    def distance(a, b):
        return math.hypot(a.x - b.x, a.y - b.y)

    def received(a, b):
        # P C0 d^-alpha / sigma^2
        return phy.power * phy.c0 * distance(a, b) ** (-phy.alpha) / phy.sigma2

    direct = {(a.id, b.id) for a in ordered for b in ordered
              if a.id != b.id and received(a, b) >= phy.gamma0}

    cooperative = []
    nearest = nearest_neighbors(ordered)
    for node in ordered:
        helper = by_id[nearest[node.id]]
        if node.is_sink or helper.is_sink or (node.id, helper.id) not in direct:
            continue
        for target in ordered:
            if target.id in (node.id, helper.id) or (node.id, target.id) in direct:
                continue
            if received(node, target) + received(helper, target) >= phy.gamma0:
                cooperative.append(Link(node.id, target.id, (helper.id,)))

    log.debug(f"build_links: {len(direct)} direct, {len(cooperative)} cooperative links")
    return LinkSet(direct=direct, cooperative=sorted(cooperative))


def load_topology(path):
    """Read {"nodes": [{"id", "x", "y", "E", "Q"}]} from a JSON file."""
    with open(path) as f:
        data = json.load(f)
    try:
        return [
            SensorNode(id=int(entry["id"]), x=float(entry["x"]), y=float(entry["y"]),
                       E_init=float(entry.get("E", 1.0)), Q=float(entry.get("Q", 0.0)))
            for entry in data["nodes"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidParameterError(f"Malformed topology file {path}: {e}")


def save_topology(nodes, path):
    data = {"nodes": [{"id": n.id, "x": n.x, "y": n.y, "E": n.E_init, "Q": n.Q}
                      for n in sorted(nodes, key=lambda n: n.id)]}
    with open(path, 'w') as f:
        json.dump(data, f, indent=2)


# ---------------------------------------------------------------- max-min LP

def stranded_origins(nodes, links: LinkSet, with_coop):
    G = links.graph(with_coop, nodes)
    reaching = set()
    for sink in sinks_of(nodes):
        reaching.add(sink)
        reaching |= nx.ancestors(G, sink)
    return [o for o in origins_of(nodes) if o not in reaching]


def solve_lifetime_lp(nodes, links: LinkSet, with_coop=True, tol=None) -> FlowSolution:
    """max T  s.t.  energy and flow conservation constraints in q_hat = T q.

    A cooperative unit of flow costs one unit of energy at the source and
    one at each helper. with_coop=False is the max-min lifetime baseline
    over direct links only.
    """
    by_id = _index(nodes)
    sinks = set(sinks_of(nodes))
    if not sinks:
        raise InvalidParameterError("the network has no sink (no node with Q < 0)")
    if not origins_of(nodes):
        raise UnboundedProblemError("no origin generates traffic, so T is unbounded")

    relays = sorted(i for i in by_id if i not in sinks)
    stranded = stranded_origins(nodes, links, with_coop)
    if stranded:
        log.warning(f"origins {stranded} have no route to a sink; lifetime is 0")
        return FlowSolution(qhat={}, T=0.0, energy_used={i: 0.0 for i in by_id}, status=LPStatus.INFEASIBLE.value)

    variables = [link for link in links.all_links(with_coop) if link.source not in sinks]
    n_links = len(variables)
    t_col = n_links
    slack_col = {i: n_links + 1 + k for k, i in enumerate(relays)}
    n_cols = n_links + 1 + len(relays)

    rows, rhs = [], []
    for i in relays:
        row = np.zeros(n_cols)
        for k, link in enumerate(variables):
            if link.source == i:
                row[k] += 1.0
            if link.target == i:
                row[k] -= 1.0
        row[t_col] = -by_id[i].Q
        if row.any():
            rows.append(row)
            rhs.append(0.0)

    for i in relays:
        row = np.zeros(n_cols)
        for k, link in enumerate(variables):
            row[k] += link.spenders().count(i)
        row[slack_col[i]] = 1.0
        rows.append(row)
        rhs.append(by_id[i].E_remaining)

    c = np.zeros(n_cols)
    c[t_col] = 1.0
    names = [f"q[{l.source}->{l.target}{'|' + ','.join(map(str, l.helpers)) if l.helpers else ''}]" for l in variables]
    names += ["T"] + [f"slack[{i}]" for i in relays]
    lp = StandardLP(A=np.array(rows), b=np.array(rhs), c=c, names=names)

    result = solve_lp(lp, tol)
    if result.status == LPStatus.UNBOUNDED:
        raise UnboundedProblemError("lifetime LP is unbounded; check the origin rates")
    if result.status != LPStatus.OPTIMAL:
        log.warning(f"lifetime LP ended with status {result.status.value}")
        return FlowSolution(qhat={}, T=0.0, energy_used={i: 0.0 for i in by_id}, status=result.status.value)

    qhat = {link: float(result.x[k]) for k, link in enumerate(variables)}
    solution = FlowSolution(qhat=qhat, T=float(result.x[t_col]), energy_used=energy_consumed(qhat, by_id))
    verify_flow_solution(nodes, solution)
    log.debug(f"lifetime LP ({'coop' if with_coop else 'direct'}): T={solution.T:.6g} "
              f"after {result.iterations} pivots")
    return solution


def energy_consumed(qhat, node_ids):
    used = {i: 0.0 for i in node_ids}
    for link, value in qhat.items():
        for i in link.spenders():
            used[i] = used.get(i, 0.0) + value
    return used


def verify_flow_solution(nodes, solution: FlowSolution, tol=FLOW_TOL):
    """Check conservation at every non-sink node and every energy cap."""
    inflow = defaultdict(float)
    outflow = defaultdict(float)
    for link, value in solution.qhat.items():
        if value < -tol:
            raise FlowInvariantError(f"negative flow {value:.3g} on {link}")
        outflow[link.source] += value
        inflow[link.target] += value

    used = energy_consumed(solution.qhat, [n.id for n in nodes])
    for node in nodes:
        if node.is_sink:
            continue
        imbalance = inflow[node.id] + solution.T * node.Q - outflow[node.id]
        if abs(imbalance) > tol:
            raise FlowInvariantError(f"flow conservation off by {imbalance:.3g} at node {node.id}")
        if used[node.id] > node.E_remaining + tol:
            raise FlowInvariantError(
                f"node {node.id} spends {used[node.id]:.6g} with only {node.E_remaining:.6g} available"
            )


# ---------------------------------------------------------------- dynamic cost heuristic

def _barrier(node: SensorNode, beta, packet_energy):
    if node.E_remaining <= 0 or node.E_remaining < packet_energy - _ENERGY_SLACK:
        return math.inf
    return (node.E_init / node.E_remaining) ** beta


def dynamic_cost(i, j, links: LinkSet, params: CostParams, nodes, packet_energy=1.0):
    """(E_i / remaining_i)^beta1 + sum over helpers (E_l / remaining_l)^beta2.

    Infinite once any involved node cannot pay for one more packet.
    """
    by_id = nodes if isinstance(nodes, dict) else _index(nodes)
    helpers = links.helpers_for(i, j)
    cost = _barrier(by_id[i], params.beta1, packet_energy)
    for h in helpers:
        cost += _barrier(by_id[h], params.beta2, packet_energy)
    return cost


def _least_cost_path(G, origin, sinks, links, params, state, packet_energy, excluded=frozenset()):
    """Dijkstra from origin to the nearest sink; ties by (cost, node id).

    Links with a spender in `excluded` are skipped.
    """
    best = {origin: 0.0}
    parent = {}
    heap = [(0.0, origin)]
    done = set()
    while heap:
        cost, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in sinks:
            path = []
            while u != origin:
                path.append(parent[u])
                u = parent[u].source
            return path[::-1]
        for v in sorted(G.successors(u)):
            if excluded and excluded.intersection(G.edges[u, v]["link"].spenders()):
                continue
            step = dynamic_cost(u, v, links, params, state, packet_energy)
            if math.isinf(step):
                continue
            if cost + step < best.get(v, math.inf):
                best[v] = cost + step
                parent[v] = G.edges[u, v]["link"]
                heapq.heappush(heap, (cost + step, v))
    return None


def _overspent(path, state, packet_energy):
    """Nodes that pay more along path than they have left."""
    spend = defaultdict(float)
    for link in path:
        for i in link.spenders():
            spend[i] += packet_energy
    return {i for i, s in spend.items() if state[i].E_remaining < s - _ENERGY_SLACK}


def _route_packet(G, origin, sinks, links, params, state, packet_energy):
    """Least-cost affordable path, or None.

    Nodes that cannot pay for every hop they join on the cheapest path are
    excluded and the search repeats.
    """
    excluded = set()
    while True:
        path = _least_cost_path(G, origin, sinks, links, params, state, packet_energy, excluded)
        if path is None:
            return None
        short = _overspent(path, state, packet_energy)
        if not short:
            return path
        if origin in short:
            return None
        excluded |= short


def simulate_dynamic(nodes, links: LinkSet, params: CostParams | None = None,
                     traffic: TrafficSpec | None = None, seed=0, max_rounds=10**6) -> SimulationResult:
    """Route every packet on the current least-cost path until one cannot be routed.

    Each round every origin emits round(Q_i) packets (fixed) or a
    Poisson(Q_i) count (poisson). A direct hop costs the sender one packet
    energy; a cooperative hop also costs each helper one packet energy.
    """
    params = params or CostParams()
    traffic = traffic or TrafficSpec()
    pe = traffic.packet_energy
    state = {n.id: replace(n) for n in nodes}
    sinks = set(sinks_of(nodes))
    origins = origins_of(nodes)
    if not origins:
        return SimulationResult(lifetime=math.inf, rounds=math.inf, completed_rounds=0, delivered=0)

    G = links.graph(with_coop=True, nodes=nodes)
    rng = np.random.default_rng(seed)
    delivered_total = 0

    for completed in range(max_rounds):
        if traffic.kind == "poisson":
            counts = [(o, int(rng.poisson(state[o].Q))) for o in origins]
        else:
            counts = [(o, int(round(state[o].Q))) for o in origins]
        total = sum(count for _, count in counts)

        delivered = 0
        for origin, count in counts:
            for _ in range(count):
                path = _route_packet(G, origin, sinks, links, params, state, pe)
                if path is None:
                    rounds = completed + delivered / total
                    log.debug(f"simulate_dynamic: no route from node {origin} in round {completed + 1}")
                    return SimulationResult(lifetime=rounds * pe, rounds=rounds,
                                            completed_rounds=completed, delivered=delivered_total)
                for link in path:
                    for i in link.spenders():
                        state[i].E_remaining = max(0.0, state[i].E_remaining - pe)
                delivered += 1
                delivered_total += 1

    log.warning(f"simulate_dynamic stopped after max_rounds={max_rounds} with every node alive")
    return SimulationResult(lifetime=max_rounds * pe, rounds=float(max_rounds),
                            completed_rounds=max_rounds, delivered=delivered_total)


# ---------------------------------------------------------------- shortest path baseline

def shortest_path_routes(nodes, links: LinkSet):
    """Static min-hop next hop for every node that can reach a sink.

    Among equally short next hops the lowest node id wins.
    """
    G = links.graph(with_coop=False, nodes=nodes)
    hops = nx.multi_source_dijkstra_path_length(G.reverse(copy=False), set(sinks_of(nodes)),
                                                weight=lambda u, v, d: 1)
    next_hop = {}
    for i, h in hops.items():
        if h == 0:
            continue
        next_hop[i] = min(j for j in G.successors(i) if hops.get(j) == h - 1)
    return next_hop


def shortest_path_lifetime(nodes, links: LinkSet, rates=None):
    """min_i E_i / (per-round spend of i) under fixed min-hop routes."""
    by_id = _index(nodes)
    sinks = set(sinks_of(nodes))
    next_hop = shortest_path_routes(nodes, links)

    spend = defaultdict(float)
    for origin in origins_of(nodes):
        rate = rates[origin] if rates else by_id[origin].Q
        node = origin
        while node not in sinks:
            if node not in next_hop:
                raise NoRouteError(f"node {origin} has no direct route to a sink")
            spend[node] += rate
            node = next_hop[node]

    if not spend:
        return math.inf
    return min(by_id[i].E_remaining / s for i, s in spend.items())
