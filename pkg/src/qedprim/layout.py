"""Coupling graphs, shortest paths, BFS entangling schedules and flag placement."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingGraph:
    """Simple undirected graph on nodes ``0..n_nodes-1``.

    ``positions`` optionally maps node -> (row, col) for drawing, and
    ``labels`` maps node -> free-form tag (e.g. ``"bridge"``).
    """

    n_nodes: int
    edges: frozenset
    positions: dict = field(default_factory=dict, compare=False, hash=False)
    labels: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise LayoutError(f"self-loop on node {a}")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise LayoutError(f"edge ({a}, {b}) out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        adj: list[set] = [set() for _ in range(self.n_nodes)]
        for a, b in norm:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(s)) for s in adj))

    @classmethod
    def from_edges(cls, edges, n_nodes: int | None = None, **kw) -> "CouplingGraph":
        edges = [tuple(e) for e in edges]
        if n_nodes is None:
            n_nodes = 1 + max((max(e) for e in edges), default=-1)
        return cls(n_nodes, frozenset(edges), **kw)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def subgraph_distances(self, source: int, allowed=None) -> dict[int, int]:
        """BFS distances from ``source`` using only ``allowed`` nodes (all if None)."""
        allowed = None if allowed is None else set(allowed)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if w not in dist and (allowed is None or w in allowed):
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    # -- export ---------------------------------------------------------
    def to_dict(self, roles: dict | None = None) -> dict:
        d = {"n_nodes": self.n_nodes, "edges": sorted([list(e) for e in self.edges])}
        if self.positions:
            d["positions"] = {str(k): list(v) for k, v in sorted(self.positions.items())}
        if self.labels:
            d["labels"] = {str(k): v for k, v in sorted(self.labels.items())}
        if roles:
            d["roles"] = {str(k): v for k, v in sorted(roles.items())}
        return d

    def to_json(self, roles: dict | None = None) -> str:
        return json.dumps(self.to_dict(roles), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingGraph":
        pos = {int(k): tuple(v) for k, v in d.get("positions", {}).items()}
        labels = {int(k): v for k, v in d.get("labels", {}).items()}
        return cls(int(d["n_nodes"]), frozenset(tuple(e) for e in d["edges"]), pos, labels)

    @classmethod
    def from_json(cls, text: str) -> "CouplingGraph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, roles: dict | None = None) -> str:
        colors = {"root": "blue", "data": "green", "flag": "red", "flag1": "purple",
                  "control": "red", "target": "red"}
        lines = ["graph coupling {", "  node [shape=circle, style=filled, fillcolor=white];"]
        for v in range(self.n_nodes):
            attrs = [f'label="{v}"']
            if v in self.positions:
                r, c = self.positions[v]
                attrs.append(f'pos="{c},{-r}!"')
            role = (roles or {}).get(v)
            if role:
                attrs.append(f'fillcolor="{colors.get(role, "gray")}"')
            lines.append(f"  {v} [{', '.join(attrs)}];")
        for a, b in sorted(self.edges):
            lines.append(f"  {a} -- {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def path_graph(n: int) -> CouplingGraph:
    return CouplingGraph.from_edges([(i, i + 1) for i in range(n - 1)], n)


def flagged_chain(n: int, pairs) -> CouplingGraph:
    """Path ``0..n-1`` plus one extra node per pair, adjacent to both ends of the pair.

    Extra nodes are numbered ``n, n+1, ...`` in the order given.
    """
    edges = [(i, i + 1) for i in range(n - 1)]
    for k, (a, b) in enumerate(pairs):
        edges += [(a, n + k), (b, n + k)]
    return CouplingGraph.from_edges(edges, n + len(pairs))


def heavy_hex(rows: int, cols: int) -> CouplingGraph:
    """Heavy-hex lattice with ``rows`` dense rows of ``4*cols + 3`` nodes.

    Numbering is row-major: the nodes of dense row 0 left to right, then
    the bridge (weak-link) nodes between rows 0 and 1 left to right, then
    dense row 1, and so on.  Bridges after even-indexed rows sit at
    columns 0, 4, 8, ...; after odd-indexed rows at columns 2, 6, 10, ....
    Corner nodes of the first and last dense rows that carry no bridge are
    dropped.  ``heavy_hex(7, 3)`` has 127 nodes.
    """
    if rows < 1 or cols < 1:
        raise LayoutError("rows and cols must be positive")
    width = 4 * cols + 3
    bridge_cols = [list(range(0 if g % 2 == 0 else 2, width, 4)) for g in range(rows - 1)]

    def bridged(r, c):
        up = r > 0 and c in bridge_cols[r - 1]
        down = r < rows - 1 and c in bridge_cols[r]
        return up or down

    keep = {}
    for r in range(rows):
        for c in range(width):
            corner = c in (0, width - 1) and r in (0, rows - 1) and rows > 1
            if corner and not bridged(r, c):
                continue
            keep[(r, c)] = None
    idx = 0
    positions, labels = {}, {}
    node_at = {}
    bridge_at = {}
    for r in range(rows):
        for c in range(width):
            if (r, c) in keep:
                node_at[(r, c)] = idx
                positions[idx] = (2 * r, c)
                idx += 1
        if r < rows - 1:
            for c in bridge_cols[r]:
                bridge_at[(r, c)] = idx
                positions[idx] = (2 * r + 1, c)
                labels[idx] = "bridge"
                idx += 1
    edges = []
    for (r, c), v in node_at.items():
        if (r, c + 1) in node_at:
            edges.append((v, node_at[(r, c + 1)]))
    for (r, c), v in bridge_at.items():
        edges.append((node_at[(r, c)], v))
        edges.append((v, node_at[(r + 1, c)]))
    return CouplingGraph.from_edges(edges, idx, positions=positions, labels=labels)


def shortest_path(g: CouplingGraph, a: int, b: int) -> list[int]:
    """Minimal-length path; among those, the lexicographically smallest."""
    dist = g.subgraph_distances(b)
    if a not in dist:
        raise LayoutError(f"nodes {a} and {b} are disconnected")
    path = [a]
    while path[-1] != b:
        v = path[-1]
        path.append(min(w for w in g.neighbors(v) if dist.get(w) == dist[v] - 1))
    return path


def eccentricity(g: CouplingGraph, root: int, data) -> int:
    dist = g.subgraph_distances(root, data)
    return max(dist.values())


@dataclass(frozen=True)
class FlagPlacement:
    """Parity check of ``checked_pair`` read out on ``flag``.

    ``s`` SWAPs are needed; for ``s = 1`` the flag first swaps with
    ``swap_route[0]`` (a data node of the pair), after which the data
    qubit lives on the flag's node and the ancilla sits next to both
    checked data qubits.
    """

    flag: int
    checked_pair: tuple[int, int]
    s: int = 0
    swap_route: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "checked_pair", tuple(int(v) for v in self.checked_pair))
        object.__setattr__(self, "swap_route", tuple(int(v) for v in self.swap_route))
        if self.s != len(self.swap_route) or self.s not in (0, 1):
            raise LayoutError("swap count must equal route length and be 0 or 1")

    def valid_on(self, g: CouplingGraph) -> bool:
        i, j = self.checked_pair
        if self.s == 0:
            return g.has_edge(self.flag, i) and g.has_edge(self.flag, j)
        via = self.swap_route[0]
        other = j if via == i else i
        return via in (i, j) and g.has_edge(self.flag, via) and g.has_edge(via, other)

    def to_dict(self) -> dict:
        return {"flag": self.flag, "checked_pair": list(self.checked_pair), "s": self.s,
                "swap_route": list(self.swap_route)}

    @classmethod
    def from_dict(cls, d: dict) -> "FlagPlacement":
        return cls(int(d["flag"]), tuple(d["checked_pair"]), int(d.get("s", 0)), tuple(d.get("swap_route", ())))


def place_type0_flags(g: CouplingGraph, data) -> list[FlagPlacement]:
    """Every non-data node touching at least two data nodes, ascending.

    A node with more than two data neighbours checks its two smallest.
    """
    data = set(data)
    out = []
    for v in range(g.n_nodes):
        if v in data:
            continue
        nb = [w for w in g.neighbors(v) if w in data]
        if len(nb) >= 2:
            out.append(FlagPlacement(v, (nb[0], nb[1])))
    return out


def place_type1_flags(g: CouplingGraph, data, exclude=()) -> list[FlagPlacement]:
    """Non-data nodes with one data neighbour ``i`` whose data neighbour ``j`` it can check via one SWAP.

    The pair is the smallest ``(i, j)`` available; nodes in ``exclude``
    (e.g. already used as type-0 flags) are skipped.
    """
    data = set(data)
    exclude = set(exclude)
    out = []
    for v in range(g.n_nodes):
        if v in data or v in exclude:
            continue
        nb = [w for w in g.neighbors(v) if w in data]
        if len(nb) != 1:
            continue
        i = nb[0]
        js = [j for j in g.neighbors(i) if j in data]
        if js:
            out.append(FlagPlacement(v, (i, js[0]), 1, (i,)))
    return out


def bfs_tree(g: CouplingGraph, root: int, data) -> dict[int, list[int]]:
    """BFS spanning tree over ``data``: node -> children.

    Each node picks, among neighbours one step closer to the root, the one
    with the fewest children so far (smallest id on ties).
    """
    data = set(data)
    if root not in data:
        raise LayoutError("root must be a data node")
    dist = g.subgraph_distances(root, data)
    if len(dist) != len(data):
        raise LayoutError("data nodes are disconnected")
    children: dict[int, list[int]] = {v: [] for v in data}
    for v in sorted(data, key=lambda u: (dist[u], u)):
        if v == root:
            continue
        cands = [w for w in g.neighbors(v) if dist.get(w) == dist[v] - 1]
        parent = min(cands, key=lambda w: (len(children[w]), w))
        children[parent].append(v)
    return children


def _finish_times(children: dict[int, list[int]], root: int) -> dict[int, int]:
    """Layers needed to complete each subtree when a node feeds one child per layer."""
    finish: dict[int, int] = {}
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(children[v])
    for v in reversed(order):
        kids = sorted((finish[c] for c in children[v]), reverse=True)
        finish[v] = max((i + 1 + t for i, t in enumerate(kids)), default=0)
    return finish


def bfs_schedule(g: CouplingGraph, root: int, data) -> list[list[tuple[int, int]]]:
    """Layers of disjoint CNOTs growing a GHZ from ``root`` over ``data``.

    Every node feeds its BFS-tree children one per layer, slowest subtree
    first, which makes the layer count optimal for the chosen tree.
    """
    children = bfs_tree(g, root, data)
    finish = _finish_times(children, root)
    start = {root: 0}
    layers: dict[int, list[tuple[int, int]]] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        kids = sorted(children[v], key=lambda c: (-finish[c], c))
        for i, c in enumerate(kids):
            t = start[v] + i + 1
            start[c] = t
            layers.setdefault(t, []).append((v, c))
            stack.append(c)
    depth = max(layers, default=0)
    return [sorted(layers[t]) for t in range(1, depth + 1)]


def entangle_times(schedule) -> dict[int, int]:
    """Layer (1-based) at which each node joins; the root maps to 0."""
    out = {}
    for t, layer in enumerate(schedule, 1):
        for c, tq in layer:
            out.setdefault(c, 0)
            out[tq] = t
    return out


# 75 data nodes on heavy_hex(7, 3): dense rows 0-3, one bridge per gap
# (two in the last), and 12 nodes of row 4.  Root 12 gives 42 layers; the
# nine free bridges touching two data nodes are the type-0 flags.
_GHZ75_DATA = (
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27,
    28, 29, 30, 31, 32, 33, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50, 51, 55, 56,
    57, 58, 59, 60, 61, 62, 63, 64, 65, 66, 67, 68, 69, 70, 72, 73, 78, 79, 80, 81, 82, 83, 84,
    85, 86, 87, 88,
)
_GHZ75_ROOT = 12


def ghz75_layout() -> tuple[CouplingGraph, tuple[int, ...], int]:
    """(graph, data nodes, root) of the 75-qubit heavy-hex GHZ instance."""
    return heavy_hex(7, 3), _GHZ75_DATA, _GHZ75_ROOT
