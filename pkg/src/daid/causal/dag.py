"""Causal DAGs, d-separation and the back-door criterion."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from ..errors import ParseError, UnknownNode


class Dag:
    """Immutable directed acyclic graph over named nodes."""

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str]] = ()):
        order: dict[str, None] = dict.fromkeys(nodes)
        edge_list = []
        seen = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge {a} -> {b}")
            seen.add((a, b))
            edge_list.append((a, b))
            order.setdefault(a)
            order.setdefault(b)
        self.nodes: tuple[str, ...] = tuple(order)
        self.edges: tuple[tuple[str, str], ...] = tuple(edge_list)
        self._children = {n: [] for n in self.nodes}
        self._parents = {n: [] for n in self.nodes}
        for a, b in self.edges:
            self._children[a].append(b)
            self._parents[b].append(a)
        self.topological_order()

    def __repr__(self):
        return f"Dag(nodes={list(self.nodes)}, edges={list(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, Dag) and set(self.nodes) == set(other.nodes) \
            and set(self.edges) == set(other.edges)

    def _check(self, *nodes):
        for n in nodes:
            if n not in self._children:
                raise UnknownNode(f"unknown node {n!r}")

    def children(self, n) -> list[str]:
        self._check(n)
        return list(self._children[n])

    def parents(self, n) -> list[str]:
        self._check(n)
        return list(self._parents[n])

    def has_edge(self, a, b) -> bool:
        return b in self._children.get(a, ())

    def topological_order(self) -> list[str]:
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        queue = deque(n for n in self.nodes if indeg[n] == 0)
        out = []
        while queue:
            n = queue.popleft()
            out.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(out) != len(self.nodes):
            raise ValueError("graph contains a cycle")
        return out

    def descendants(self, n) -> set[str]:
        """Strict descendants of ``n``."""
        self._check(n)
        out, stack = set(), list(self._children[n])
        while stack:
            c = stack.pop()
            if c not in out:
                out.add(c)
                stack.extend(self._children[c])
        return out

    def ancestors(self, nodes) -> set[str]:
        """``nodes`` together with all their ancestors."""
        nodes = set(nodes)
        self._check(*nodes)
        out, stack = set(), list(nodes)
        while stack:
            c = stack.pop()
            if c not in out:
                out.add(c)
                stack.extend(self._parents[c])
        return out

    def without_outgoing(self, x) -> "Dag":
        self._check(x)
        return Dag(self.nodes, [(a, b) for a, b in self.edges if a != x])

    def to_text(self) -> str:
        lines = [f"node {n}" for n in self.nodes]
        lines += [f"edge {a} -> {b}" for a, b in self.edges]
        return "\n".join(lines) + "\n"


def parse_dag(text: str) -> Dag:
    """Read ``edge A -> B`` / ``node X`` lines; ``#`` starts a comment."""
    nodes, edges = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node" and len(parts) == 2:
            nodes.append(parts[1])
        elif parts[0] == "edge" and len(parts) == 4 and parts[2] == "->":
            edges.append((parts[1], parts[3]))
        else:
            raise ParseError(f"cannot parse {raw.strip()!r}", line=lineno)
    try:
        return Dag(nodes, edges)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def fairness_dag() -> Dag:
    """Fairness F -> generalization A, confounded by DD and MC."""
    text = resources.files("daid.data").joinpath("fairness.dag").read_text()
    return parse_dag(text)


def _validate_query(g: Dag, x, y, z):
    g._check(x, y, *z)
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("x and y must not be in the conditioning set")


def d_separated(g: Dag, x: str, y: str, z=frozenset()) -> bool:
    """True iff every path between x and y is blocked by z.

    Reachability ("Bayes ball") search over (node, direction) states, linear
    in the size of the graph.
    """
    z = set(z)
    _validate_query(g, x, y, z)
    anc_z = g.ancestors(z)
    up, down = 0, 1
    stack = [(x, up)]
    visited = set()
    while stack:
        n, d = stack.pop()
        if (n, d) in visited:
            continue
        visited.add((n, d))
        if n == y:
            return False
        if d == up and n not in z:
            stack.extend((p, up) for p in g._parents[n])
            stack.extend((c, down) for c in g._children[n])
        elif d == down:
            if n not in z:
                stack.extend((c, down) for c in g._children[n])
            if n in anc_z:
                stack.extend((p, up) for p in g._parents[n])
    return True


def path_is_open(g: Dag, path, z) -> bool:
    z = set(z)
    for a, n, b in zip(path, path[1:], path[2:]):
        collider = g.has_edge(a, n) and g.has_edge(b, n)
        if collider:
            if n not in z and not (g.descendants(n) & z):
                return False
        elif n in z:
            return False
    return True


def simple_paths(g: Dag, x, y):
    """Every simple path between x and y in the skeleton (small graphs only)."""
    nbrs = {n: set(g._children[n]) | set(g._parents[n]) for n in g.nodes}

    def walk(path, seen):
        last = path[-1]
        if last == y:
            yield list(path)
            return
        for m in sorted(nbrs[last]):
            if m not in seen:
                seen.add(m)
                path.append(m)
                yield from walk(path, seen)
                path.pop()
                seen.discard(m)

    yield from walk([x], {x})


def format_path(g: Dag, path) -> str:
    out = [path[0]]
    for a, b in zip(path, path[1:]):
        out.append(f"-> {b}" if g.has_edge(a, b) else f"<- {b}")
    return " ".join(out)


@dataclass(frozen=True)
class BackdoorVerdict:
    satisfied: bool
    failed_condition: int | None = None
    witness: object = None
    reason: str = ""

    def __bool__(self):
        return self.satisfied

    def to_json(self) -> dict:
        return {"satisfied": self.satisfied, "failed_condition": self.failed_condition,
                "witness": self.witness, "reason": self.reason}


def backdoor_criterion(g: Dag, x: str, y: str, z=frozenset()) -> BackdoorVerdict:
    """Check both back-door conditions for adjusting for z.

    (1) no member of z descends from x; (2) z blocks every path from x to y
    that starts with an arrow into x, tested as d-separation after deleting
    x's outgoing edges.
    """
    z = set(z)
    _validate_query(g, x, y, z)
    bad = sorted(g.descendants(x) & z)
    if bad:
        return BackdoorVerdict(False, 1, bad[0], f"{bad[0]} is a descendant of {x}")
    g_bd = g.without_outgoing(x)
    if d_separated(g_bd, x, y, z):
        return BackdoorVerdict(True, None, None, "every back-door path is blocked")
    for path in simple_paths(g_bd, x, y):
        if path_is_open(g_bd, path, z):
            text = format_path(g_bd, path)
            return BackdoorVerdict(False, 2, text, f"back-door path {text} is not blocked")
    raise AssertionError("d-separation and path search disagree")
