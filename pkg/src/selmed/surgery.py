"""Graph transformations: edge-removal surgeries, the proper backdoor graph,
and extended-graph construction.

All surgeries return new graphs; the input is never mutated. Extended
nodes inserted on first edges are deterministic ordinary vertices for every
downstream query (ancestry, separation, further surgery).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import NameCollision
from .graph import EXTENDED_INFIX, Admg, causal_first_edges


def remove_incoming(g: Admg, W: Iterable[str]) -> Admg:
    """Copy of g minus directed edges into W (bidirected edges untouched)."""
    W = g.require_all(W)
    return g.replace(
        directed=frozenset(e for e in g.directed if e[1] not in W)
    )


def remove_outgoing(g: Admg, W: Iterable[str]) -> Admg:
    """Copy of g minus directed edges out of W (bidirected edges untouched)."""
    W = g.require_all(W)
    return g.replace(
        directed=frozenset(e for e in g.directed if e[0] not in W)
    )


def proper_backdoor_graph(g: Admg, X: Iterable[str], Y: Iterable[str]) -> Admg:
    """Remove the first edge of every proper causal path from X to Y."""
    first = causal_first_edges(g, X, Y)
    return g.replace(directed=g.directed - first)


def extended_name(source: str, head: str) -> str:
    return f"{source}{EXTENDED_INFIX}{head}"


@dataclass(frozen=True)
class ExtendedGraph:
    """Result of intercepting causal first edges with deterministic children.

    `extended_nodes` maps each replaced first edge (x, w) to the inserted
    vertex name; `y_nodes` is the subset sitting on direct exposure-outcome
    edges, keyed the same way.
    """

    graph: Admg
    extended_nodes: dict[tuple[str, str], str]
    y_nodes: dict[tuple[str, str], str]

    def exposure_nodes(self) -> frozenset[str]:
        return frozenset(self.extended_nodes.values())


def extend_graph(g: Admg, X: Iterable[str], Y: Iterable[str]) -> ExtendedGraph:
    """Insert a new child of X on every causal first edge toward Y.

    Each first edge x -> w becomes x -> x__e__w -> w. Only first edges of
    proper causal paths are intercepted; everything else is copied.
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    first = causal_first_edges(g, X, Y)

    nodes: dict[tuple[str, str], str] = {}
    for x, w in sorted(first):
        name = extended_name(x, w)
        if name in g.vertices:
            raise NameCollision(f"generated vertex {name!r} already present")
        nodes[(x, w)] = name

    directed = set(g.directed) - first
    for (x, w), name in nodes.items():
        directed.add((x, name))
        directed.add((name, w))

    extended_of = dict(g.extended_of)
    extended_of.update({name: edge for edge, name in nodes.items()})

    graph = Admg(
        vertices=g.vertices | frozenset(nodes.values()),
        directed=directed,
        bidirected=g.bidirected,
        selection=g.selection,
        extended_of=extended_of,
    )
    y_nodes = {edge: name for edge, name in nodes.items() if edge[1] in Y}
    return ExtendedGraph(graph=graph, extended_nodes=nodes, y_nodes=y_nodes)


def contract_extended(eg: ExtendedGraph) -> Admg:
    """Undo extend_graph: re-contract each x -> x__e__w -> w to x -> w."""
    g = eg.graph
    drop = set(eg.extended_nodes.values())
    directed = {e for e in g.directed if e[0] not in drop and e[1] not in drop}
    directed |= set(eg.extended_nodes)
    extended_of = {
        n: e for n, e in g.extended_of.items() if n not in drop
    }
    return Admg(
        vertices=g.vertices - drop,
        directed=directed,
        bidirected=g.bidirected,
        selection=g.selection,
        extended_of=extended_of,
    )
