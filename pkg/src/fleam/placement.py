"""Fog topology centrality and checkpoint placement along attack routes."""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

ROLES = ("fog", "cloud", "device")


class TopologyError(ValueError):
    pass


@dataclass
class FogTopology:
    """Undirected graph; ``adj[u][v]`` is the edge length (1.0 when unweighted)."""

    roles: dict = field(default_factory=dict)
    adj: dict = field(default_factory=dict)

    def add_node(self, node, role: str = "fog"):
        if role not in ROLES:
            raise TopologyError(f"unknown role {role!r}")
        self.roles[node] = role
        self.adj.setdefault(node, {})

    def add_edge(self, u, v, length: float = 1.0):
        if u == v:
            raise TopologyError(f"self-loop on {u!r}")
        if not length > 0:
            raise TopologyError(f"edge {u!r}-{v!r} has non-positive length")
        for n in (u, v):
            if n not in self.roles:
                self.add_node(n)
        if v in self.adj[u]:
            raise TopologyError(f"duplicate edge {u!r}-{v!r}")
        self.adj[u][v] = float(length)
        self.adj[v][u] = float(length)

    @classmethod
    def from_edges(cls, edges, roles=None) -> "FogTopology":
        g = cls()
        for node, role in (roles or {}).items():
            g.add_node(node, role)
        for e in edges:
            g.add_edge(*e)
        return g

    @property
    def nodes(self) -> list:
        return sorted(self.roles, key=_key)

    @property
    def z(self) -> int:
        return len(self.roles)

    def degree(self, node) -> int:
        return len(self.adj[node])

    @property
    def weighted(self) -> bool:
        return any(w != 1.0 for nbrs in self.adj.values() for w in nbrs.values())

    def components(self) -> list[set]:
        seen, comps = set(), []
        for s in self.nodes:
            if s in seen:
                continue
            comp, stack = {s}, [s]
            while stack:
                u = stack.pop()
                for v in self.adj[u]:
                    if v not in comp:
                        comp.add(v)
                        stack.append(v)
            seen |= comp
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def relabel(self, mapping: dict) -> "FogTopology":
        g = FogTopology()
        for n, r in self.roles.items():
            g.add_node(mapping[n], r)
        for u in self.adj:
            for v, w in self.adj[u].items():
                if mapping[v] not in g.adj[mapping[u]]:
                    g.add_edge(mapping[u], mapping[v], w)
        return g


def _key(n):
    # mixed int/str ids still sort deterministically
    return (0, n, "") if isinstance(n, (int, float)) else (1, 0, str(n))


def read_topology(path) -> FogTopology:
    """Edge-list text: ``u v [length]`` lines, plus ``node <id> <role>`` lines; ``#`` comments."""
    g = FogTopology()
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "node":
            if len(parts) != 3:
                raise TopologyError(f"{path}:{lineno}: expected 'node <id> <role>'")
            g.add_node(parts[1], parts[2])
        elif len(parts) in (2, 3):
            edges.append((parts[0], parts[1], float(parts[2]) if len(parts) == 3 else 1.0))
        else:
            raise TopologyError(f"{path}:{lineno}: cannot parse {line!r}")
    for e in edges:
        g.add_edge(*e)
    if g.z == 0:
        raise TopologyError(f"{path}: empty topology")
    return g


def degree_centralization(g: FogTopology) -> float:
    """Sum of (max degree - degree) over all nodes, over (z-1)(z-2)."""
    z = g.z
    if z < 3:
        raise TopologyError("degree centralization needs at least 3 nodes")
    degs = [g.degree(n) for n in g.nodes]
    top = max(degs)
    return sum(top - d for d in degs) / ((z - 1) * (z - 2))


def _sssp(g: FogTopology, s):
    """Shortest-path DAG from ``s``: (visit order, predecessors, path counts, distances)."""
    order, pred = [], {s: []}
    sigma, dist = {s: 1}, {s: 0.0}
    if not g.weighted:
        q = deque([s])
        while q:
            u = q.popleft()
            order.append(u)
            for v in sorted(g.adj[u], key=_key):
                if v not in dist:
                    dist[v] = dist[u] + 1.0
                    sigma[v], pred[v] = 0, []
                    q.append(v)
                if dist[v] == dist[u] + 1.0:
                    sigma[v] += sigma[u]
                    pred[v].append(u)
        return order, pred, sigma, dist
    done = set()
    heap, tie = [(0.0, 0, s)], 1
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        order.append(u)
        for v in sorted(g.adj[u], key=_key):
            nd = d + g.adj[u][v]
            if v not in dist or nd < dist[v]:
                dist[v], sigma[v], pred[v] = nd, sigma[u], [u]
                heapq.heappush(heap, (nd, tie, v))
                tie += 1
            elif nd == dist[v] and v not in done:
                sigma[v] += sigma[u]
                pred[v].append(u)
    return order, pred, sigma, dist


def betweenness(g: FogTopology) -> dict:
    """Sum over unordered pairs j<k (both != i) of the share of j-k shortest paths through i.

    Brandes accumulation; disconnected pairs contribute nothing.
    """
    cb = {n: 0.0 for n in g.nodes}
    for s in g.nodes:
        order, pred, sigma, _ = _sssp(g, s)
        delta = {v: 0.0 for v in order}
        for w in reversed(order):
            for v in pred[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    # each unordered pair was counted from both ends
    return {n: c / 2.0 for n, c in cb.items()}


def distances(g: FogTopology, s) -> dict:
    return _sssp(g, s)[3]


def closeness(g: FogTopology) -> dict:
    """1 / (sum of shortest distances to reachable nodes); ``None`` for isolated nodes."""
    out = {}
    for n in g.nodes:
        d = distances(g, n)
        total = sum(v for k, v in d.items() if k != n)
        out[n] = 1.0 / total if total > 0 else None
    return out


@dataclass
class CentralityReport:
    betweenness: dict
    closeness: dict
    degree: dict
    centralization: float | None
    connected: bool

    def ranking(self, metric: str) -> list:
        vals = getattr(self, metric)
        return sorted(vals, key=lambda n: (-(vals[n] if vals[n] is not None else -1.0), _key(n)))

    def rows(self):
        for n in sorted(self.degree, key=_key):
            yield n, self.degree[n], self.betweenness[n], self.closeness[n]

    def write_csv(self, path, roles=None):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "role", "degree", "betweenness", "closeness", "degree_centralization"])
            for n, d, b, c in self.rows():
                w.writerow([n, (roles or {}).get(n, ""), d, repr(b), "" if c is None else repr(c),
                            "" if self.centralization is None else repr(self.centralization)])


def centrality_report(g: FogTopology) -> CentralityReport:
    connected = g.is_connected()
    if not connected:
        log.warning("topology is disconnected (%d components); scores are per component", len(g.components()))
    dc = degree_centralization(g) if g.z >= 3 else None
    return CentralityReport(betweenness(g), closeness(g), {n: g.degree(n) for n in g.nodes}, dc, connected)


def validate_route(g: FogTopology, route) -> None:
    for u, v in zip(route, route[1:]):
        if v not in g.adj.get(u, {}):
            raise TopologyError(f"route step {u!r}->{v!r} is not an edge")


def select_checkpoints(g: FogTopology, routes, k: int, report: CentralityReport | None = None) -> list:
    """Greedy route coverage with fog nodes.

    Each pick maximises newly covered routes, then betweenness, then closeness,
    then smallest id. Once every route is covered, further picks still come from
    fog nodes on some route. Returns at most ``k`` nodes in pick order.
    """
    if k < 1:
        raise ValueError("budget k must be >= 1")
    routes = [list(r) for r in routes]
    for r in routes:
        validate_route(g, r)
    report = report or centrality_report(g)
    on_route = {}
    for ri, r in enumerate(routes):
        for n in r:
            if g.roles.get(n) == "fog":
                on_route.setdefault(n, set()).add(ri)
    if not on_route:
        log.warning("no fog node lies on any attack route")
        return []
    covered, chosen = set(), []
    while len(chosen) < k and len(chosen) < len(on_route):
        def rank(n):
            c = report.closeness[n]
            return (-len(on_route[n] - covered), -report.betweenness[n], -(c or 0.0), _key(n))
        best = min((n for n in on_route if n not in chosen), key=rank)
        chosen.append(best)
        covered |= on_route[best]
    return chosen


def covered_routes(routes, nodes) -> int:
    s = set(nodes)
    return sum(1 for r in routes if s.intersection(r))
