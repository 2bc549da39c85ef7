"""Optical network graph, the NSFNET instance, and K-shortest-path routing.

Nodes are 1-based integers. Links are undirected and carry a stable integer id
(their position in the edge list), which the spectrum layer uses as the key of
its per-link occupancy bitmaps.

Paths are ordered by ``(hop count, node sequence)``. Both the K-shortest-path
search and the exhaustive enumeration used for validation share that order, so
results are reproducible across runs and platforms.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path as FsPath
from typing import Iterable, Iterator

NSFNET_DATA = "nsfnet.txt"


class TopologyError(ValueError):
    """Raised when an edge list or path violates the graph invariants."""


@dataclass(frozen=True, order=True)
class Link:
    id: int
    u: int
    v: int

    @property
    def endpoints(self) -> frozenset[int]:
        return frozenset((self.u, self.v))


@dataclass(frozen=True)
class Path:
    """A simple path, stored as its node sequence and the links it traverses."""

    nodes: tuple[int, ...]
    links: tuple[Link, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise TopologyError("a path needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise TopologyError(f"path {self.nodes} repeats a node")
        if len(self.links) != len(self.nodes) - 1:
            raise TopologyError("link count must equal node count - 1")
        for a, b, link in zip(self.nodes, self.nodes[1:], self.links):
            if link.endpoints != frozenset((a, b)):
                raise TopologyError(f"link {link.id} does not join {a} and {b}")

    @property
    def hops(self) -> int:
        return len(self.links)

    @property
    def link_ids(self) -> tuple[int, ...]:
        return tuple(link.id for link in self.links)

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.hops, self.nodes)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with no self-loops and no parallel links."""

    n_nodes: int
    links: tuple[Link, ...]
    _adj: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)
    _by_pair: dict[frozenset[int], Link] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise TopologyError("graph needs at least one node")
        by_pair: dict[frozenset[int], Link] = {}
        adj: dict[int, list[int]] = {n: [] for n in range(1, self.n_nodes + 1)}
        seen_ids = set()
        for link in self.links:
            if link.u == link.v:
                raise TopologyError(f"self-loop at node {link.u}")
            for n in (link.u, link.v):
                if not 1 <= n <= self.n_nodes:
                    raise TopologyError(f"node {n} outside 1..{self.n_nodes}")
            if link.endpoints in by_pair:
                raise TopologyError(f"parallel link {link.u}-{link.v}")
            if link.id in seen_ids:
                raise TopologyError(f"duplicate link id {link.id}")
            seen_ids.add(link.id)
            by_pair[link.endpoints] = link
            adj[link.u].append(link.v)
            adj[link.v].append(link.u)
        object.__setattr__(self, "_by_pair", by_pair)
        object.__setattr__(self, "_adj", {n: tuple(sorted(v)) for n, v in adj.items()})

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n_nodes: int | None = None) -> "Graph":
        edges = [(int(u), int(v)) for u, v in edges]
        if n_nodes is None:
            n_nodes = max((max(e) for e in edges), default=0)
        links = tuple(Link(i, min(u, v), max(u, v)) for i, (u, v) in enumerate(edges))
        return cls(n_nodes, links)

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_nodes + 1))

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self._adj[node]

    def link(self, u: int, v: int) -> Link:
        try:
            return self._by_pair[frozenset((u, v))]
        except KeyError:
            raise TopologyError(f"no link between {u} and {v}") from None

    def has_link(self, u: int, v: int) -> bool:
        return frozenset((u, v)) in self._by_pair

    def path(self, nodes: Iterable[int]) -> Path:
        nodes = tuple(nodes)
        links = tuple(self.link(a, b) for a, b in zip(nodes, nodes[1:]))
        return Path(nodes, links)

    def is_connected(self) -> bool:
        seen = {1}
        queue = deque([1])
        while queue:
            for nb in self._adj[queue.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == self.n_nodes


def parse_edge_list(text: str) -> Graph:
    """Parse ``u v`` lines (1-based ids, ``#`` comments) into a connected graph."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(f"line {lineno}: non-integer node id in {raw!r}") from None
        if u < 1 or v < 1:
            raise TopologyError(f"line {lineno}: node ids are 1-based")
        edges.append((u, v))
    if not edges:
        raise TopologyError("edge list is empty")
    g = Graph.from_edges(edges)
    if not g.is_connected():
        raise TopologyError("topology is not connected")
    return g


def load_edge_list(path: str | FsPath) -> Graph:
    return parse_edge_list(FsPath(path).read_text(encoding="utf-8"))


def build_nsfnet() -> Graph:
    """The 14-node, 21-link NSFNET backbone shipped with the package."""
    text = resources.files("reaim.data").joinpath(NSFNET_DATA).read_text(encoding="utf-8")
    return parse_edge_list(text)


def path_links(p: Path) -> frozenset[Link]:
    return frozenset(p.links)


def _lex_shortest(g: Graph, s: int, d: int, banned_nodes: set[int],
                  banned_links: set[frozenset[int]]) -> tuple[int, ...] | None:
    # BFS distances from d, then walk greedily from s taking the smallest
    # neighbour that stays on a shortest route: this gives the (hops, lex)
    # minimum among paths avoiding the banned elements.
    if s in banned_nodes or d in banned_nodes:
        return None
    dist = {d: 0}
    queue = deque([d])
    while queue:
        cur = queue.popleft()
        for nb in g.neighbors(cur):
            if nb in dist or nb in banned_nodes or frozenset((cur, nb)) in banned_links:
                continue
            dist[nb] = dist[cur] + 1
            queue.append(nb)
    if s not in dist:
        return None
    walk = [s]
    cur = s
    while cur != d:
        cur = min(nb for nb in g.neighbors(cur)
                  if dist.get(nb) == dist[cur] - 1 and frozenset((cur, nb)) not in banned_links)
        walk.append(cur)
    return tuple(walk)


def k_shortest_paths(g: Graph, s: int, d: int, k: int) -> list[Path]:
    """Up to ``k`` loopless paths from ``s`` to ``d`` (Yen), fewest hops first.

    Equal-hop paths are ordered by node sequence, which makes the result
    prefix-stable: the first ``k`` entries never change when ``k`` grows.
    Returns an empty list when ``d`` is unreachable.
    """
    if s == d:
        raise TopologyError("source and destination must differ")
    if k < 1:
        raise ValueError("k must be >= 1")
    first = _lex_shortest(g, s, d, set(), set())
    if first is None:
        return []
    accepted = [first]
    seen = {first}
    candidates: list[tuple[int, tuple[int, ...]]] = []
    while len(accepted) < k:
        prev = accepted[-1]
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            banned_links = {frozenset((p[i], p[i + 1])) for p in accepted
                            if len(p) > i + 1 and p[: i + 1] == root}
            spur = _lex_shortest(g, prev[i], d, set(root[:-1]), banned_links)
            if spur is None:
                continue
            cand = root[:-1] + spur
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(candidates, (len(cand) - 1, cand))
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates)[1])
    return [g.path(nodes) for nodes in accepted]


@lru_cache(maxsize=4096)
def routes(g: Graph, s: int, d: int, k: int) -> tuple[Path, ...]:
    """Memoised :func:`k_shortest_paths`; graphs are immutable so this is safe."""
    return tuple(k_shortest_paths(g, s, d, k))


def iter_simple_paths(g: Graph, s: int, d: int) -> Iterator[Path]:
    """Every simple path from ``s`` to ``d`` by depth-first search (unordered)."""
    stack = [(s, (s,))]
    while stack:
        node, walk = stack.pop()
        if node == d:
            yield g.path(walk)
            continue
        for nb in g.neighbors(node):
            if nb not in walk:
                stack.append((nb, walk + (nb,)))


def all_simple_paths(g: Graph, s: int, d: int) -> list[Path]:
    return sorted(iter_simple_paths(g, s, d), key=Path.sort_key)
