"""Growing undirected network state, change statistics and summary statistics.

Nodes carry dense integer labels assigned in arrival order. A network only
grows: every node and edge keeps the time it was born, so the state at any
earlier time can be recovered by filtering on birth times.
"""
from __future__ import annotations

import copy
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.special import comb

from .errors import (
    DuplicateEdge,
    EmptyNetwork,
    InvalidMark,
    NonMonotoneTime,
    UnknownEndpoint,
    UnknownStatistic,
    UnsortedEvents,
)

Edge = tuple[int, int]


def _norm_edge(u, v) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise InvalidMark(f"self-loop on node {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Mark:
    """Nodes and edges added together at one event.

    ``new_nodes`` is kept sorted; ``new_edges`` is a sorted tuple of ``(u, v)``
    pairs with ``u < v``.
    """

    new_nodes: tuple[int, ...] = ()
    new_edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        nodes = tuple(sorted(int(n) for n in self.new_nodes))
        if len(set(nodes)) != len(nodes):
            raise InvalidMark("repeated node in mark")
        edges = tuple(sorted({_norm_edge(u, v) for u, v in self.new_edges}))
        object.__setattr__(self, "new_nodes", nodes)
        object.__setattr__(self, "new_edges", edges)

    @property
    def is_empty(self) -> bool:
        return not self.new_nodes and not self.new_edges

    def touched_nodes(self) -> set[int]:
        out = set(self.new_nodes)
        for u, v in self.new_edges:
            out.add(u)
            out.add(v)
        return out


@dataclass(frozen=True)
class EventRecord:
    time: float
    mark: Mark


class DynamicNetwork:
    """Left-continuous network state with node and edge birth times.

    Mutation goes through :meth:`apply`, which validates the whole mark before
    touching any state. Use :func:`apply_mark` for a non-mutating update.
    """

    def __init__(self):
        self.node_birth: list[float] = []
        self.edge_birth: dict[Edge, float] = {}
        self.adj: list[set[int]] = []
        self._deg: list[int] = []
        self.last_time = -math.inf

    @property
    def n_nodes(self) -> int:
        return len(self.node_birth)

    @property
    def n_edges(self) -> int:
        return len(self.edge_birth)

    def degree(self, i: int) -> int:
        return self._deg[i]

    def degrees(self, n_total: int | None = None) -> np.ndarray:
        """Degree vector, zero-padded to ``n_total`` for pending nodes."""
        n = self.n_nodes if n_total is None else n_total
        out = np.zeros(n, dtype=np.int64)
        out[: self.n_nodes] = self._deg
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u] if 0 <= u < self.n_nodes else False

    def edges(self) -> list[Edge]:
        return list(self.edge_birth)

    def validate(self, t: float, mark: Mark) -> None:
        if not t > self.last_time:
            raise NonMonotoneTime(f"time {t!r} does not exceed last birth time {self.last_time!r}")
        n = self.n_nodes
        if mark.new_nodes != tuple(range(n, n + len(mark.new_nodes))):
            raise InvalidMark(
                f"new nodes {mark.new_nodes} are not the next dense labels starting at {n}"
            )
        top = n + len(mark.new_nodes)
        for u, v in mark.new_edges:
            if v >= top or u < 0:
                raise UnknownEndpoint(f"edge {u}-{v} references a node that does not exist")
            if v < n and v in self.adj[u]:
                raise DuplicateEdge(f"edge {u}-{v} already present")

    def apply(self, t: float, mark: Mark) -> "DynamicNetwork":
        """Add ``mark`` at time ``t`` in place (atomic: validates first)."""
        self.validate(t, mark)
        for _ in mark.new_nodes:
            self.node_birth.append(t)
            self.adj.append(set())
            self._deg.append(0)
        for u, v in mark.new_edges:
            self.edge_birth[(u, v)] = t
            self.adj[u].add(v)
            self.adj[v].add(u)
            self._deg[u] += 1
            self._deg[v] += 1
        if not mark.is_empty:
            self.last_time = t
        return self

    def copy(self) -> "DynamicNetwork":
        return copy.deepcopy(self)

    def at(self, t: float) -> "DynamicNetwork":
        """State just before ``t``: nodes and edges born strictly earlier."""
        return snapshot_at(self.to_events(), t)

    def to_events(self) -> list[EventRecord]:
        """Regroup births into the event list that rebuilds this network."""
        groups: dict[float, tuple[list[int], list[Edge]]] = {}
        for i, b in enumerate(self.node_birth):
            groups.setdefault(b, ([], []))[0].append(i)
        for e, b in self.edge_birth.items():
            groups.setdefault(b, ([], []))[1].append(e)
        return [EventRecord(t, Mark(tuple(ns), tuple(es))) for t, (ns, es) in sorted(groups.items())]

    def adjacency_matrix(self, n_total: int | None = None, dtype=np.float64) -> np.ndarray:
        n = self.n_nodes if n_total is None else n_total
        a = np.zeros((n, n), dtype=dtype)
        if self.edge_birth:
            e = np.array(list(self.edge_birth), dtype=np.int64)
            a[e[:, 0], e[:, 1]] = 1
            a[e[:, 1], e[:, 0]] = 1
        return a

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(self.edge_birth)
        return g

    def __eq__(self, other):
        if not isinstance(other, DynamicNetwork):
            return NotImplemented
        return self.node_birth == other.node_birth and self.edge_birth == other.edge_birth

    def __repr__(self):
        return f"DynamicNetwork(nodes={self.n_nodes}, edges={self.n_edges})"


def apply_mark(net: DynamicNetwork, t: float, m: Mark) -> DynamicNetwork:
    """Return a new network with ``m`` added at ``t``; ``net`` is left untouched."""
    net.validate(t, m)
    return net.copy().apply(t, m)


def replay(events: Iterable[EventRecord]) -> DynamicNetwork:
    net = DynamicNetwork()
    for ev in events:
        net.apply(ev.time, ev.mark)
    return net


def check_sorted(events: Sequence[EventRecord]) -> None:
    for a, b in zip(events, events[1:]):
        if not b.time > a.time:
            raise UnsortedEvents(f"event times not strictly increasing at t={b.time!r}")


def snapshot_at(events: Sequence[EventRecord], t: float) -> DynamicNetwork:
    """Network built from every event strictly before ``t``."""
    check_sorted(events)
    net = DynamicNetwork()
    for ev in events:
        if ev.time >= t:
            break
        net.apply(ev.time, ev.mark)
    return net


# ---------------------------------------------------------------------------
# change statistics


@dataclass
class PairContext:
    """Quantities shared by change statistics for a batch of candidate edges.

    Pending (not yet added) nodes are included with degree 0.
    """

    net: DynamicNetwork
    u: np.ndarray
    v: np.ndarray
    deg_u: np.ndarray
    deg_v: np.ndarray
    common: np.ndarray


@dataclass(frozen=True)
class Statistic:
    name: str
    count: Callable[[DynamicNetwork], float]
    change: Callable[[PairContext], np.ndarray]


STATISTICS: dict[str, Statistic] = {}


def register_statistic(stat: Statistic) -> Statistic:
    STATISTICS[stat.name] = stat
    return stat


def _count_triangles(net: DynamicNetwork) -> float:
    return sum(len(net.adj[u] & net.adj[v]) for u, v in net.edge_birth) / 3


def _kstar(k: int) -> Statistic:
    def count(net):
        return float(sum(comb(d, k, exact=True) for d in net._deg))

    def change(ctx):
        # adding (u, v) raises both degrees by one: C(d+1, k) - C(d, k) = C(d, k-1)
        return comb(ctx.deg_u, k - 1) + comb(ctx.deg_v, k - 1)

    return Statistic(f"{k}-star", count, change)


register_statistic(Statistic("edges", lambda net: float(net.n_edges), lambda ctx: np.ones(len(ctx.u))))
register_statistic(Statistic("triangles", _count_triangles, lambda ctx: ctx.common.astype(float)))
register_statistic(_kstar(2))
register_statistic(_kstar(3))


def get_statistic(name: str) -> Statistic:
    try:
        return STATISTICS[name]
    except KeyError:
        raise UnknownStatistic(f"unknown statistic {name!r}; known: {sorted(STATISTICS)}") from None


def pair_context(net: DynamicNetwork, u, v, n_total: int | None = None, adjacency=None) -> PairContext:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    n = net.n_nodes
    n_total = max(n, int(max(u.max(initial=-1), v.max(initial=-1)) + 1)) if n_total is None else n_total
    deg = net.degrees(n_total)
    common = np.zeros(len(u), dtype=np.int64)
    old = (u < n) & (v < n)
    if old.any() and net.n_edges:
        a = net.adjacency_matrix() if adjacency is None else adjacency
        uo, vo = u[old], v[old]
        if len(uo) > n:
            common[old] = (a @ a)[uo, vo].astype(np.int64)
        else:
            common[old] = np.einsum("ij,ij->i", a[uo], a[vo]).astype(np.int64)
    return PairContext(net, u, v, deg[u], deg[v], common)


def change_stat_matrix(net: DynamicNetwork, u, v, stats: Sequence[str], n_total=None, adjacency=None) -> np.ndarray:
    """Change statistics for many candidate edges at once, shape ``(len(u), len(stats))``."""
    fns = [get_statistic(s) for s in stats]
    ctx = pair_context(net, u, v, n_total, adjacency)
    out = np.empty((len(ctx.u), len(fns)))
    for k, st in enumerate(fns):
        out[:, k] = st.change(ctx)
    return out


def change_statistics(net: DynamicNetwork, candidate_edge: Edge, stats: Sequence[str],
                      n_pending: int = 0) -> dict[str, float]:
    """g(net + edge) - g(net) for each named statistic.

    ``n_pending`` counts new nodes not yet in ``net``; they may appear as
    endpoints with degree 0.
    """
    u, v = _norm_edge(*candidate_edge)
    top = net.n_nodes + n_pending
    if v >= top:
        raise UnknownEndpoint(f"edge {u}-{v} references a node that does not exist")
    if v < net.n_nodes and net.has_edge(u, v):
        raise DuplicateEdge(f"edge {u}-{v} already present")
    row = change_stat_matrix(net, [u], [v], stats, n_total=top)[0]
    return dict(zip(stats, row.tolist()))


# ---------------------------------------------------------------------------
# summary statistics


def _require_nodes(net: DynamicNetwork) -> None:
    if net.n_nodes == 0:
        raise EmptyNetwork("network has no nodes")


def eigenvector_centrality(net: DynamicNetwork) -> np.ndarray:
    """Leading adjacency eigenvector, scaled so the largest entry is 1."""
    n = net.n_nodes
    if net.n_edges == 0:
        return np.zeros(n)
    vals, vecs = np.linalg.eigh(net.adjacency_matrix())
    x = np.abs(vecs[:, -1])
    return x / x.max()


def summary_statistics(net: DynamicNetwork) -> dict[str, float]:
    """Size-normalised summaries of a network.

    Centralities are averaged over nodes: degree/(n-1), betweenness over
    (n-1)(n-2)/2 pairs, harmonic closeness (sum of inverse distances over n-1)
    and eigenvector centrality scaled to a maximum of 1. Local clustering
    counts nodes of degree < 2 as 0.
    """
    _require_nodes(net)
    g = net.to_networkx()
    n = net.n_nodes
    if n > 1:
        deg = float(np.mean(net.degrees()) / (n - 1))
        close = float(np.mean(list(nx.harmonic_centrality(g).values())) / (n - 1))
    else:
        deg = close = 0.0
    btw = float(np.mean(list(nx.betweenness_centrality(g, normalized=True).values())))
    return {
        "nodes": float(n),
        "edges": float(net.n_edges),
        "degree_centrality": deg,
        "betweenness_centrality": btw,
        "closeness_centrality": close,
        "eigenvector_centrality": float(np.mean(eigenvector_centrality(net))),
        "global_clustering": float(nx.transitivity(g)),
        "local_clustering": float(nx.average_clustering(g)) if n else 0.0,
    }


def _histogram(values: Iterable[int], normalize: bool) -> dict[int, float]:
    c = Counter(int(x) for x in values)
    total = sum(c.values())
    return {k: (c[k] / total if normalize else c[k]) for k in sorted(c)}


def degree_distribution(net: DynamicNetwork, normalize: bool = False) -> dict[int, float]:
    _require_nodes(net)
    return _histogram(net._deg, normalize)


def edgewise_shared_partners(net: DynamicNetwork) -> list[int]:
    return [len(net.adj[u] & net.adj[v]) for u, v in net.edge_birth]


def esp_distribution(net: DynamicNetwork, normalize: bool = False) -> dict[int, float]:
    _require_nodes(net)
    return _histogram(edgewise_shared_partners(net), normalize)


def degree_tail_mass(net: DynamicNetwork, q: float = 0.95) -> float:
    """Share of all edge endpoints held by nodes above the ``q`` degree quantile."""
    _require_nodes(net)
    d = net.degrees()
    if d.sum() == 0:
        return 0.0
    cut = np.quantile(d, q)
    return float(d[d > cut].sum() / d.sum())
