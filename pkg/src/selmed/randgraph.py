"""Randomized graph and query generators for property testing.

Directed parts are Erdos-Renyi over a shuffled topological order, bidirected
edges are independent coin flips, and the selection vertex is attached as a
sink with a random nonempty parent set. Densities sweep the sparse and
dense regimes.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .criteria import AdmissiblePair
from .graph import Admg, proper_causal_paths


def random_admg(
    rng: np.random.Generator,
    n_vertices: int,
    p_directed: Optional[float] = None,
    p_bidirected: Optional[float] = None,
    with_selection: bool = False,
) -> Admg:
    """One random ADMG; edge densities are drawn from [0.1, 0.5] when not
    given."""
    if p_directed is None:
        p_directed = rng.uniform(0.1, 0.5)
    if p_bidirected is None:
        p_bidirected = rng.uniform(0.1, 0.5)

    names = [f"V{i}" for i in range(n_vertices)]
    order = list(rng.permutation(names))
    directed = []
    bidirected = []
    for i in range(n_vertices):
        for j in range(i + 1, n_vertices):
            if rng.random() < p_directed:
                directed.append((order[i], order[j]))
            if rng.random() < p_bidirected:
                a, b = order[i], order[j]
                bidirected.append((min(a, b), max(a, b)))

    selection = None
    if with_selection and n_vertices > 0:
        selection = "S"
        n_parents = int(rng.integers(1, n_vertices + 1))
        parents = rng.choice(names, size=n_parents, replace=False)
        names = names + [selection]
        directed += [(str(p), selection) for p in parents]

    return Admg(
        vertices=names,
        directed=directed,
        bidirected=bidirected,
        selection=selection,
    )


def random_disjoint_sets(
    rng: np.random.Generator, g: Admg, n_sets: int, max_size: int = 2
):
    """Disjoint nonempty vertex subsets drawn without replacement; the
    selection vertex is never used."""
    pool = [v for v in g.sorted_vertices() if v != g.selection]
    rng.shuffle(pool)
    sets = []
    for _ in range(n_sets):
        if not pool:
            return None
        k = int(rng.integers(1, max_size + 1))
        k = min(k, len(pool))
        sets.append(frozenset(pool[:k]))
        pool = pool[k:]
    return sets


def random_gac_query(
    rng: np.random.Generator,
    n_vertices: int = 8,
    max_exposures: int = 2,
    max_tries: int = 200,
):
    """A random (graph, X, Y, pair) where every exposure vertex has at least
    one proper causal path to Y.

    Exposures without causal paths make the extended graph degenerate (no
    extended node is created for them), so they are excluded here just as
    they are excluded by the mediation setting the criteria serve.
    """
    for _ in range(max_tries):
        g = random_admg(rng, n_vertices, with_selection=True)
        drawn = random_disjoint_sets(rng, g, 2, max_size=max_exposures)
        if drawn is None:
            continue
        X, Y = drawn
        paths = proper_causal_paths(g, X, Y).paths
        sources = {p.vertices[0] for p in paths}
        if sources != X:
            continue
        rest = [
            v for v in g.sorted_vertices()
            if v not in X | Y and v != g.selection
        ]
        z_mask = rng.random(len(rest)) < 0.4
        Z = frozenset(v for v, keep in zip(rest, z_mask) if keep)
        zt_mask = rng.random(len(Z)) < 0.6
        ZT = frozenset(v for v, keep in zip(sorted(Z), zt_mask) if keep)
        return g, X, Y, AdmissiblePair(Z, ZT)
    raise RuntimeError("could not draw a usable query; loosen the settings")
