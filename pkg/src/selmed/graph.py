"""Acyclic directed mixed graphs with an optional selection vertex.

Vertices are plain strings (case-sensitive, unique). A graph holds a set of
directed edges, a set of bidirected edges, an optional selection vertex that
must be a directed sink with no bidirected edges, and a record of extended
nodes inserted by graph surgery.

Graphs are immutable after construction; every query below is a pure
function, so shared concurrent reads are safe.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    CycleError,
    DuplicateEdge,
    GraphError,
    OverlapError,
    ReservedVertexName,
    SelectionBidirected,
    SelectionHasChildren,
    UnknownVertex,
)

# Infix reserved for generated extended-node names; build_graph rejects it in
# user-supplied names so surgery stays collision-free.
EXTENDED_INFIX = "__e__"

DIRECTED = "->"
REVERSED = "<-"
BIDIRECTED = "<->"


class Admg:
    """An acyclic directed mixed graph.

    Parameters are validated eagerly; an instance that exists satisfies all
    structural invariants (acyclic directed part, no self loops, selection
    vertex is a sink with no bidirected edges).
    """

    def __init__(
        self,
        vertices: Iterable[str],
        directed: Iterable[tuple[str, str]] = (),
        bidirected: Iterable[tuple[str, str]] = (),
        selection: Optional[str] = None,
        extended_of: Optional[Mapping[str, tuple[str, str]]] = None,
    ):
        self.vertices = frozenset(vertices)
        if not all(isinstance(v, str) and v for v in self.vertices):
            raise GraphError("vertex names must be non-empty strings")

        dir_edges = []
        for tail, head in directed:
            self._require(tail)
            self._require(head)
            if tail == head:
                raise GraphError(f"self loop {tail} -> {head}")
            dir_edges.append((tail, head))
        if len(dir_edges) != len(set(dir_edges)):
            raise DuplicateEdge("duplicate directed edge")
        self.directed = frozenset(dir_edges)

        bi_edges = []
        for a, b in bidirected:
            self._require(a)
            self._require(b)
            if a == b:
                raise GraphError(f"self loop {a} <-> {b}")
            bi_edges.append((min(a, b), max(a, b)))
        if len(bi_edges) != len(set(bi_edges)):
            raise DuplicateEdge("duplicate bidirected edge")
        self.bidirected = frozenset(bi_edges)

        if selection is not None:
            self._require(selection)
        self.selection = selection

        self.extended_of = dict(extended_of or {})
        for node, (source, head) in self.extended_of.items():
            self._require(node)
            self._require(source)
            self._require(head)

        self._pa: dict[str, set[str]] = {v: set() for v in self.vertices}
        self._ch: dict[str, set[str]] = {v: set() for v in self.vertices}
        self._sib: dict[str, set[str]] = {v: set() for v in self.vertices}
        for tail, head in self.directed:
            self._ch[tail].add(head)
            self._pa[head].add(tail)
        for a, b in self.bidirected:
            self._sib[a].add(b)
            self._sib[b].add(a)

        if self.selection is not None:
            if self._ch[self.selection]:
                raise SelectionHasChildren(
                    f"selection vertex {self.selection!r} has outgoing edge(s) to "
                    + ", ".join(sorted(self._ch[self.selection]))
                )
            if self._sib[self.selection]:
                raise SelectionBidirected(
                    f"selection vertex {self.selection!r} has bidirected edge(s); "
                    "only the directed-sink form is supported"
                )

        self._order = self._toposort()
        for node, (source, head) in self.extended_of.items():
            if self._pa[node] != {source} or self._ch[node] != {head}:
                raise GraphError(
                    f"extended node {node!r} must have exactly parent {source!r} "
                    f"and child {head!r}"
                )

    # -- basic accessors ---------------------------------------------------

    def _require(self, v: str) -> None:
        if v not in self.vertices:
            raise UnknownVertex(v)

    def require_all(self, vs: Iterable[str]) -> frozenset[str]:
        vs = frozenset(vs)
        for v in vs:
            self._require(v)
        return vs

    def parents(self, v: str) -> frozenset[str]:
        self._require(v)
        return frozenset(self._pa[v])

    def children(self, v: str) -> frozenset[str]:
        self._require(v)
        return frozenset(self._ch[v])

    def siblings(self, v: str) -> frozenset[str]:
        """Vertices joined to v by a bidirected edge."""
        self._require(v)
        return frozenset(self._sib[v])

    def sorted_vertices(self) -> list[str]:
        return sorted(self.vertices)

    def sorted_directed(self) -> list[tuple[str, str]]:
        return sorted(self.directed)

    def sorted_bidirected(self) -> list[tuple[str, str]]:
        return sorted(self.bidirected)

    def __eq__(self, other):
        if not isinstance(other, Admg):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.directed == other.directed
            and self.bidirected == other.bidirected
            and self.selection == other.selection
        )

    def __repr__(self):
        return (
            f"Admg({len(self.vertices)} vertices, {len(self.directed)} directed, "
            f"{len(self.bidirected)} bidirected, selection={self.selection!r})"
        )

    def replace(self, **kwargs) -> "Admg":
        """Copy with some constructor fields swapped (used by surgeries).

        Extended-node records whose two edges no longer both survive are
        dropped: after surgery such a vertex is an ordinary vertex.
        """
        args = dict(
            vertices=self.vertices,
            directed=self.directed,
            bidirected=self.bidirected,
            selection=self.selection,
            extended_of=self.extended_of,
        )
        args.update(kwargs)
        directed = frozenset(args["directed"])
        vertices = frozenset(args["vertices"])
        args["extended_of"] = {
            node: (source, head)
            for node, (source, head) in args["extended_of"].items()
            if node in vertices
            and (source, node) in directed
            and (node, head) in directed
        }
        return Admg(**args)

    # -- construction-time toposort ----------------------------------------

    def _toposort(self) -> list[str]:
        indeg = {v: len(self._pa[v]) for v in self.vertices}
        ready = [v for v in self.vertices if indeg[v] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in sorted(self._ch[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.vertices):
            cycle = self._find_cycle()
            raise CycleError(cycle)
        return order

    def _find_cycle(self) -> list[str]:
        # Walk parent pointers from an unfinished vertex until one repeats.
        remaining = {v for v in self.vertices if self._pa[v]}
        start = min(remaining)
        seen, walk = {}, []
        v = start
        while v not in seen:
            seen[v] = len(walk)
            walk.append(v)
            v = min(p for p in self._pa[v] if p in remaining)
        cycle = walk[seen[v]:] + [v]
        return list(reversed(cycle))


@dataclass(frozen=True)
class Path:
    """A simple path: a vertex sequence plus one edge mark per step.

    Marks are '->' (traversed with the edge), '<-' (against), '<->'.
    """

    vertices: tuple[str, ...]
    marks: tuple[str, ...]

    def __post_init__(self):
        if len(self.marks) != len(self.vertices) - 1:
            raise GraphError("path needs exactly one mark per step")
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("paths are simple: repeated vertex")

    def validate(self, g: Admg) -> None:
        """Check every recorded step is an actual edge of g."""
        for (a, b), mark in zip(zip(self.vertices, self.vertices[1:]), self.marks):
            ok = (
                (mark == DIRECTED and (a, b) in g.directed)
                or (mark == REVERSED and (b, a) in g.directed)
                or (mark == BIDIRECTED and (min(a, b), max(a, b)) in g.bidirected)
            )
            if not ok:
                raise GraphError(f"no edge {a} {mark} {b} in graph")

    def pretty(self) -> str:
        out = [self.vertices[0]]
        for mark, v in zip(self.marks, self.vertices[1:]):
            out.append(f" {mark} {v}")
        return "".join(out)

    def is_directed_path(self) -> bool:
        return all(m == DIRECTED for m in self.marks)

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "marks": list(self.marks),
            "pretty": self.pretty(),
        }


@dataclass(frozen=True)
class PathSetPi:
    """A set of proper causal paths from an exposure set to an outcome set."""

    exposure: frozenset[str]
    outcome: frozenset[str]
    paths: tuple[Path, ...] = field(default_factory=tuple)

    def validate(self, g: Admg) -> None:
        from .errors import NotProperPath

        g.require_all(self.exposure)
        g.require_all(self.outcome)
        proper = {p.vertices for p in proper_causal_paths(g, self.exposure, self.outcome).paths}
        for p in self.paths:
            if p.vertices not in proper:
                raise NotProperPath(
                    f"{p.pretty()} is not a proper causal path from "
                    f"{sorted(self.exposure)} to {sorted(self.outcome)}"
                )

    def first_edges(self) -> frozenset[tuple[str, str]]:
        return frozenset((p.vertices[0], p.vertices[1]) for p in self.paths)


# ---------------------------------------------------------------------------
# construction


def build_graph(spec: Mapping) -> Admg:
    """Build and validate an Admg from a JSON-style description.

    Expected keys: "vertices" (list of names), "directed" (list of
    [tail, head]), "bidirected" (list of [a, b]), optional "selection".
    """
    names = list(spec.get("vertices", []))
    if len(names) != len(set(names)):
        raise GraphError("vertex names must be unique")
    for name in names:
        if EXTENDED_INFIX in name:
            raise ReservedVertexName(
                f"{name!r} contains the reserved infix {EXTENDED_INFIX!r}"
            )
    directed = [tuple(e) for e in spec.get("directed", [])]
    bidirected = [tuple(e) for e in spec.get("bidirected", [])]
    return Admg(
        vertices=names,
        directed=directed,
        bidirected=bidirected,
        selection=spec.get("selection"),
    )


def graph_to_json(g: Admg) -> dict:
    out = {
        "vertices": g.sorted_vertices(),
        "directed": [list(e) for e in g.sorted_directed()],
        "bidirected": [list(e) for e in g.sorted_bidirected()],
    }
    if g.selection is not None:
        out["selection"] = g.selection
    return out


def load_graph(path: str) -> Admg:
    with open(path, "r", encoding="utf-8") as fh:
        return build_graph(json.load(fh))


def save_graph(g: Admg, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(g), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# primitive queries


def ancestors(g: Admg, seed: Iterable[str]) -> frozenset[str]:
    """Reflexive-transitive closure against directed edges."""
    out = set(g.require_all(seed))
    frontier = list(out)
    while frontier:
        v = frontier.pop()
        for p in g._pa[v]:
            if p not in out:
                out.add(p)
                frontier.append(p)
    return frozenset(out)


def descendants(g: Admg, seed: Iterable[str]) -> frozenset[str]:
    """Reflexive-transitive closure along directed edges."""
    out = set(g.require_all(seed))
    frontier = list(out)
    while frontier:
        v = frontier.pop()
        for c in g._ch[v]:
            if c not in out:
                out.add(c)
                frontier.append(c)
    return frozenset(out)


def districts(g: Admg) -> list[frozenset[str]]:
    """Partition vertices into bidirected-connected components.

    Vertices without bidirected edges are singleton cells. Cells are sorted
    by their smallest member.
    """
    seen: set[str] = set()
    cells = []
    for v in g.sorted_vertices():
        if v in seen:
            continue
        cell = {v}
        frontier = [v]
        while frontier:
            u = frontier.pop()
            for w in g._sib[u]:
                if w not in cell:
                    cell.add(w)
                    frontier.append(w)
        seen |= cell
        cells.append(frozenset(cell))
    return sorted(cells, key=lambda c: min(c))


def topological_order(g: Admg) -> list[str]:
    """Vertex order respecting every directed edge, lexicographic tie-break."""
    return list(g._order)


def proper_causal_paths(g: Admg, X: Iterable[str], Y: Iterable[str]) -> PathSetPi:
    """All simple directed paths from X to Y whose only X-vertex is the source.

    Paths are returned in lexicographic order of their vertex sequences.
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    if X & Y:
        raise OverlapError(f"X and Y overlap: {sorted(X & Y)}")

    found: list[Path] = []

    def extend(path: list[str]) -> None:
        v = path[-1]
        if v in Y:
            found.append(
                Path(tuple(path), tuple(DIRECTED for _ in path[1:]))
            )
            # a path may continue past one outcome vertex toward another
        for c in sorted(g._ch[v]):
            if c in X or c in path:
                continue
            path.append(c)
            extend(path)
            path.pop()

    for x in sorted(X):
        for c in sorted(g._ch[x]):
            if c in X:
                continue
            extend([x, c])

    found.sort(key=lambda p: p.vertices)
    return PathSetPi(exposure=X, outcome=Y, paths=tuple(found))


def causal_first_edges(g: Admg, X: Iterable[str], Y: Iterable[str]) -> frozenset[tuple[str, str]]:
    """First edges of proper causal paths from X to Y, without enumeration.

    An edge x -> w qualifies iff w is outside X and reaches Y through
    non-X vertices.
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    if X & Y:
        raise OverlapError(f"X and Y overlap: {sorted(X & Y)}")
    # reverse-reachability from Y within the X-free induced subgraph
    reach = set(Y - X)
    frontier = list(reach)
    while frontier:
        v = frontier.pop()
        for p in g._pa[v]:
            if p not in X and p not in reach:
                reach.add(p)
                frontier.append(p)
    return frozenset(
        (x, w) for (x, w) in g.directed if x in X and w in reach
    )
