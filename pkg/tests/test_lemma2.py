"""Property suite for the eight extended-graph separations implied by the
mediation premises. The acceptance module runs the 500-graph version; this
is a faster smoke pass plus corpus-generator checks."""

from itertools import combinations

import numpy as np

from selmed.criteria import mediation_implied_separations, mediation_premises
from selmed.graph import descendants, proper_causal_paths
from selmed.randgraph import random_admg
from selmed.surgery import remove_incoming


def draw_qualifying(rng, n_vertices=7, tries=3000):
    """Random (graph, X, Y, Z) satisfying both premises with at least one
    mediator, inside the ambient adjustment setting: the selection vertex
    does not descend from the exposure and Z avoids descendants of
    causal-path vertices. Exposure/outcome picks and small Z subsets are
    searched within each graph; bidirected density is kept light because
    dense confounding rarely admits the premises at all."""
    from itertools import permutations

    for _ in range(tries):
        g = random_admg(
            rng, int(rng.integers(3, n_vertices + 1)),
            p_directed=rng.uniform(0.2, 0.5),
            p_bidirected=rng.uniform(0.02, 0.25),
            with_selection=True,
        )
        pool = [v for v in g.sorted_vertices() if v != g.selection]
        rng.shuffle(pool)
        for x, y in permutations(pool, 2):
            X, Y = frozenset({x}), frozenset({y})
            if g.selection in descendants(g, X):
                continue
            paths = proper_causal_paths(g, X, Y).paths
            mediators = set().union(*(set(p.vertices) for p in paths)) - X - Y \
                if paths else set()
            if not mediators:
                continue
            forbidden = descendants(remove_incoming(g, X), mediators | Y)
            zpool = sorted(set(pool) - {x, y} - forbidden)
            for size in range(0, min(3, len(zpool)) + 1):
                for zs in combinations(zpool, size):
                    if mediation_premises(g, X, Y, frozenset(zs)):
                        return g, X, Y, frozenset(zs)
    raise RuntimeError("no qualifying draw; loosen the generator")


def test_implied_separations_hold():
    rng = np.random.default_rng(9090)
    for _ in range(60):
        g, X, Y, Z = draw_qualifying(rng)
        assert mediation_premises(g, X, Y, Z)
        for cond in mediation_implied_separations(g, X, Y, Z):
            assert cond.passed, (
                cond.label, g.sorted_directed(), g.sorted_bidirected(),
                sorted(X), sorted(Y), sorted(Z),
            )


def test_premises_fail_on_confounded_mediator(fig3a_bidirected):
    # M1 <-> M2 -> Y is an unblockable mediator-outcome backdoor
    assert not mediation_premises(
        fig3a_bidirected, {"X"}, {"Y"}, frozenset()
    )


def test_premises_hold_on_fig1b(fig1b):
    assert mediation_premises(fig1b, {"X"}, {"Y"}, frozenset({"C"}))
    assert not mediation_premises(fig1b, {"X"}, {"Y"}, frozenset())
