"""Probabilistic attack graphs: data model, JSON format, generation, queries.

Each node carries an ordered list of exploits. An exploit at node ``s`` with
target ``s'`` and success probability ``p`` moves the attacker to ``s'`` with
probability ``p`` and leaves it at ``s`` otherwise. Every node additionally
offers ``WAIT`` (action index 0), a deterministic self-loop that never
triggers detection; exploit ``i`` of a node is action index ``i + 1``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .rng import Rng

FORMAT_VERSION = 1
WAIT = 0

_KEYS = ("version", "node_count", "initial", "target", "ids_candidates", "exploits")


class GraphError(ValueError):
    """A graph document or graph object violates the format or its invariants."""

    def __init__(self, problems: str | Sequence[str]):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Exploit:
    target: int
    success_prob: float


@dataclass(frozen=True)
class AttackGraph:
    node_count: int
    exploits: tuple[tuple[Exploit, ...], ...]
    initial_node: int
    target_node: int
    ids_candidates: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(
            self, "exploits", tuple(tuple(row) for row in self.exploits)
        )
        object.__setattr__(self, "ids_candidates", tuple(self.ids_candidates))
        problems = validate(self)
        if problems:
            raise GraphError(problems)

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def n_actions(self, node: int) -> int:
        return 1 + len(self.exploits[node])

    @property
    def max_actions(self) -> int:
        return 1 + max((len(row) for row in self.exploits), default=0)

    def action_target(self, node: int, action: int) -> int | None:
        """Intended target of ``action`` at ``node`` (None for WAIT)."""
        if action == WAIT:
            return None
        return self.exploits[node][action - 1].target

    def successors(self, node: int) -> list[int]:
        return [e.target for e in self.exploits[node]]

    def edges(self) -> Iterable[tuple[int, int, float]]:
        for src, row in enumerate(self.exploits):
            for e in row:
                yield src, e.target, e.success_prob

    def with_endpoints(self, initial: int | None = None, target: int | None = None) -> "AttackGraph":
        return AttackGraph(
            self.node_count,
            self.exploits,
            self.initial_node if initial is None else initial,
            self.target_node if target is None else target,
            self.ids_candidates,
        )


def validate(g: AttackGraph) -> list[str]:
    problems = []
    n = g.node_count
    if not isinstance(n, int) or n < 1:
        return [f"node_count must be a positive integer, got {n!r}"]
    if len(g.exploits) != n:
        problems.append(f"exploit table has {len(g.exploits)} rows for {n} nodes")

    def _valid(x):
        return isinstance(x, int) and not isinstance(x, bool) and 0 <= x < n

    for name, node in (("initial", g.initial_node), ("target", g.target_node)):
        if not _valid(node):
            problems.append(f"dangling node id: {name}={node!r}")
    for c in g.ids_candidates:
        if not _valid(c):
            problems.append(f"dangling node id: ids candidate {c!r}")
    if len(set(g.ids_candidates)) != len(g.ids_candidates):
        problems.append("duplicate ids candidate")

    for src, row in enumerate(g.exploits):
        seen = set()
        for e in row:
            if not _valid(e.target):
                problems.append(f"dangling node id: exploit {src}->{e.target!r}")
                continue
            if e.target == src:
                problems.append(f"self-edge forbidden: {src}->{src}")
            if e.target in seen:
                problems.append(f"duplicate edge: {src}->{e.target}")
            seen.add(e.target)
            p = e.success_prob
            if not (isinstance(p, (int, float)) and 0.0 < p <= 1.0):
                problems.append(f"probability out of range: {src}->{e.target} p={p!r}")
    return problems


def from_edges(
    node_count: int,
    edges: Iterable[tuple[int, int, float]],
    initial: int,
    target: int,
    ids_candidates: Iterable[int] = (),
) -> AttackGraph:
    rows: list[list[Exploit]] = [[] for _ in range(max(node_count, 0))]
    problems = []
    for src, dst, p in edges:
        if not (isinstance(src, int) and 0 <= src < node_count):
            problems.append(f"dangling node id: exploit source {src!r}")
            continue
        rows[src].append(Exploit(dst, p))
    if problems:
        raise GraphError(problems)
    return AttackGraph(node_count, rows, initial, target, tuple(ids_candidates))


# --------------------------------------------------------------------------
# JSON format (version 1)


def to_document(g: AttackGraph) -> dict:
    return {
        "version": FORMAT_VERSION,
        "node_count": g.node_count,
        "initial": g.initial_node,
        "target": g.target_node,
        "ids_candidates": list(g.ids_candidates),
        "exploits": [{"src": s, "dst": d, "p": p} for s, d, p in g.edges()],
    }


def dumps_graph(g: AttackGraph) -> str:
    return json.dumps(to_document(g), indent=2) + "\n"


def parse_graph(text: str) -> AttackGraph:
    """Parse and validate a version-1 graph document.

    Raises GraphError for syntax errors, schema errors and invariant violations.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"syntax error: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphError("syntax error: top level must be an object")

    problems = []
    unknown = sorted(set(doc) - set(_KEYS))
    if unknown:
        problems.append(f"unknown keys: {', '.join(unknown)}")
    missing = [k for k in _KEYS if k not in doc]
    if missing:
        problems.append(f"missing keys: {', '.join(missing)}")
    if problems:
        raise GraphError(problems)
    if doc["version"] != FORMAT_VERSION:
        raise GraphError(f"unsupported version {doc['version']!r}")

    def _int(x, what):
        if isinstance(x, bool) or not isinstance(x, int):
            problems.append(f"{what} must be an integer, got {x!r}")
            return -1
        return x

    n = _int(doc["node_count"], "node_count")
    initial = _int(doc["initial"], "initial")
    target = _int(doc["target"], "target")
    if not isinstance(doc["ids_candidates"], list):
        problems.append("ids_candidates must be an array")
        cands = []
    else:
        cands = [_int(c, "ids candidate") for c in doc["ids_candidates"]]
    if not isinstance(doc["exploits"], list):
        problems.append("exploits must be an array")
        raw = []
    else:
        raw = doc["exploits"]
    edges = []
    for item in raw:
        if not isinstance(item, dict) or set(item) != {"src", "dst", "p"}:
            problems.append(f"exploit must be an object with src, dst, p: {item!r}")
            continue
        p = item["p"]
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            problems.append(f"exploit probability must be a number: {item!r}")
            continue
        edges.append((_int(item["src"], "exploit src"), _int(item["dst"], "exploit dst"), float(p)))
    if problems:
        raise GraphError(problems)
    if n < 1:
        raise GraphError(f"node_count must be a positive integer, got {n}")
    return from_edges(n, edges, initial, target, cands)


def load_graph(path) -> AttackGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


# --------------------------------------------------------------------------
# Queries


def hop_distance(g: AttackGraph, source: int, dest: int) -> int | None:
    """Shortest directed exploit path length, ignoring probabilities.

    Returns None when ``dest`` is unreachable.
    """
    if source == dest:
        return 0
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.successors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                if v == dest:
                    return dist[v]
                queue.append(v)
    return None


def distances_to(g: AttackGraph, dest: int) -> list[int | None]:
    """Hop distance from every node to ``dest`` (reverse BFS)."""
    preds: list[list[int]] = [[] for _ in g.nodes]
    for s, d, _ in g.edges():
        preds[d].append(s)
    dist: list[int | None] = [None] * g.node_count
    dist[dest] = 0
    queue = deque([dest])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if dist[u] is None:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


# --------------------------------------------------------------------------
# Generation


def _partial_shuffle(items: list, k: int, rng: Rng) -> list:
    items = list(items)
    for i in range(k):
        j = i + rng.below(len(items) - i)
        items[i], items[j] = items[j], items[i]
    return items[:k]


def generate_synthetic(
    node_count: int,
    out_degree: int,
    success_prob: float,
    ids_pool_size: int,
    seed: int,
    max_retries: int = 1000,
) -> AttackGraph:
    """Draw a random attack graph with local structure.

    Nodes are laid out on a line in random order; every node except the
    target gets ``out_degree`` exploits to distinct nodes within
    ``out_degree`` positions of it, so hop distances grow with layout
    distance. The target has no outgoing exploits (episodes end there).
    Draws repeat until the target is reachable from the initial node.
    """
    if node_count < 2:
        raise GraphError(f"node_count must be >= 2, got {node_count}")
    if not 1 <= out_degree < node_count:
        raise GraphError(f"out_degree must be in [1, node_count), got {out_degree}")
    if not 0 <= ids_pool_size <= node_count:
        raise GraphError(f"ids_pool_size must be in [0, node_count], got {ids_pool_size}")
    if not 0.0 < success_prob <= 1.0:
        raise GraphError(f"probability out of range: {success_prob}")

    rng = Rng(seed)
    nodes = list(range(node_count))
    for _ in range(max_retries):
        order = _partial_shuffle(nodes, node_count, rng)
        initial = rng.below(node_count)
        target = (initial + 1 + rng.below(node_count - 1)) % node_count
        rows: list[list[Exploit]] = [[] for _ in nodes]
        for pos, src in enumerate(order):
            if src == target:
                continue
            window = [
                order[q]
                for q in range(max(0, pos - out_degree), min(node_count, pos + out_degree + 1))
                if q != pos
            ]
            picked = _partial_shuffle(window, min(out_degree, len(window)), rng)
            rows[src] = [Exploit(dst, success_prob) for dst in sorted(picked)]
        g = AttackGraph(node_count, rows, initial, target, ())
        if hop_distance(g, initial, target) is not None:
            pool = _partial_shuffle(nodes, ids_pool_size, rng)
            return AttackGraph(node_count, rows, initial, target, tuple(pool))
    raise GraphError(f"target unreachable after {max_retries} draws; parameters are degenerate")
